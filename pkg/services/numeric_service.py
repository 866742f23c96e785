"""
Numeric service for exact base-r digit expansions and controlled-precision logarithms.

Rationals are fractions.Fraction throughout. Reals are mpmath.mpf values computed a few
guard digits above the requested decimal precision. Whenever a logarithm ratio or a power
can be detected to be an exact rational, the Fraction is returned instead of the mpf.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import FrozenSet, Iterator, Optional, Tuple, Union

import mpmath

from config.settings import get_settings
from utils.errors import DomainError

logger = logging.getLogger(__name__)

Real = Union[Fraction, mpmath.mpf]

# Largest denominator tried when matching log(a)/log(b) to an exact rational
EXPONENT_MATCH_DENOMINATOR = 64

# Extra decimal digits carried internally above the caller's precision
GUARD_DIGITS = 10


@dataclass(frozen=True)
class DigitSequence:
    """
    Base-r expansion 0.d1 d2 d3 ... of a number in [0, 1].

    When `repeating_suffix` is set, `digits` already contains one full copy of the
    period at its end and the expansion continues by cycling the suffix forever.
    Without a suffix the expansion is terminating (implicit trailing zeros) unless
    `truncated` is set, in which case only the listed digits are known.
    """

    base: int
    digits: Tuple[int, ...]
    repeating_suffix: Optional[Tuple[int, ...]] = None
    truncated: bool = False

    def __post_init__(self):
        if self.base < 2:
            raise DomainError(f"base must be >= 2, got {self.base}")
        for d in self.digits + (self.repeating_suffix or ()):
            if not 0 <= d < self.base:
                raise DomainError(f"digit {d} outside [0, {self.base - 1}]")
        if self.repeating_suffix is not None and len(self.repeating_suffix) == 0:
            raise DomainError("repeating_suffix must be nonempty when present")

    @property
    def exact(self) -> bool:
        return not self.truncated

    def digit(self, i: int) -> Optional[int]:
        """i-th digit (1-based) of the infinite expansion; None past a truncation."""
        if i < 1:
            raise DomainError(f"digit index must be >= 1, got {i}")
        if i <= len(self.digits):
            return self.digits[i - 1]
        if self.truncated:
            return None
        if self.repeating_suffix is None:
            return 0
        k = (i - len(self.digits) - 1) % len(self.repeating_suffix)
        return self.repeating_suffix[k]

    def iter_digits(self, limit: int) -> Iterator[Tuple[int, int]]:
        """Yield (position, digit) for positions 1..limit that are known."""
        for i in range(1, limit + 1):
            d = self.digit(i)
            if d is None:
                return
            yield i, d


def to_mpf(value) -> mpmath.mpf:
    """Fraction/int/float/mpf -> mpf at the current working precision."""
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def digits_base_r(
    x,
    base: int,
    count: int,
    avoid: FrozenSet[int] = frozenset({1}),
    scan_limit: Optional[int] = None,
) -> DigitSequence:
    """
    Base-r expansion of a rational x in [0, 1] by long division.

    Args:
        x: Rational in [0, 1]
        base: Expansion base (>= 2)
        count: Digits kept when no repeating suffix is found (also the zero padding
            of terminating expansions)
        avoid: Digits to steer away from at ambiguous (terminating) representations,
            e.g. {1} for the triadic Cantor set
        scan_limit: Long-division steps allowed before truncating.
            If None, uses Settings.DIGIT_SCAN_LIMIT.

    Returns:
        DigitSequence, exact unless the period search hit the scan limit
    """
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise DomainError(f"x={x} outside [0, 1]")
    if base < 2:
        raise DomainError(f"base must be >= 2, got {base}")
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")

    # 1 = 0.(r-1)(r-1)... is the only expansion of 1 below the unit digit
    if x == 1:
        return DigitSequence(base, (base - 1,), (base - 1,))

    limit = scan_limit if scan_limit is not None else get_settings().DIGIT_SCAN_LIMIT
    den = x.denominator
    rem = x.numerator
    seen = {}
    out = []

    while rem != 0 and rem not in seen:
        if len(out) >= limit:
            logger.warning(
                f"Period search for {x} in base {base} stopped after {limit} digits; truncating"
            )
            return DigitSequence(base, tuple(out[:count]), None, truncated=True)
        seen[rem] = len(out)
        rem *= base
        out.append(rem // den)
        rem %= den

    if rem == 0:
        return _resolve_terminating(out, base, count, avoid)

    start = seen[rem]
    return DigitSequence(base, tuple(out), tuple(out[start:]))


def _resolve_terminating(out: list, base: int, count: int, avoid: FrozenSet[int]) -> DigitSequence:
    """Pick between 0.d1..dk and 0.d1..(dk-1)(r-1)(r-1)... per the avoid set."""
    if out and any(d in avoid for d in out):
        alt = out[:-1] + [out[-1] - 1, base - 1]
        if not any(d in avoid for d in alt):
            return DigitSequence(base, tuple(alt), (base - 1,))
    padded = out + [0] * max(0, count - len(out))
    return DigitSequence(base, tuple(padded), None)


def value_from_digits(d: DigitSequence) -> Fraction:
    """Exact rational value of a digit sequence, including the repeating tail."""
    n = len(d.digits)
    head = 0
    for digit in d.digits:
        head = head * d.base + digit
    value = Fraction(head, d.base**n)

    if d.repeating_suffix:
        period_len = len(d.repeating_suffix)
        period = 0
        for digit in d.repeating_suffix:
            period = period * d.base + digit
        value += Fraction(period, d.base**n * (d.base**period_len - 1))

    return value


def is_terminating(x, base: int) -> bool:
    """True when x has a finite base-`base` expansion."""
    den = Fraction(x).denominator
    g = gcd(den, base)
    while g > 1:
        while den % g == 0:
            den //= g
        g = gcd(den, base)
    return den == 1


def log_ratio(a, b, precision_digits: Optional[int] = None) -> Real:
    """
    log(a) / log(b).

    Returns the exact Fraction k when a = b^k for a rational k with a small
    denominator (verified in integer arithmetic), else an mpf accurate to
    10^(-precision_digits).
    """
    if a <= 0 or b <= 0:
        raise DomainError(f"log_ratio needs positive arguments, got a={a}, b={b}")
    if b == 1:
        raise DomainError("log_ratio base must differ from 1")

    if a == 1:
        return Fraction(0)
    if a == b:
        return Fraction(1)

    prec = precision_digits or get_settings().PRECISION_DIGITS
    with mpmath.workdps(prec + GUARD_DIGITS):
        approx = mpmath.log(to_mpf(a)) / mpmath.log(to_mpf(b))

    if isinstance(a, (Fraction, int)) and isinstance(b, (Fraction, int)):
        exact = _match_rational_exponent(Fraction(a), Fraction(b), approx, prec)
        if exact is not None:
            return exact
    return approx


def _match_rational_exponent(a: Fraction, b: Fraction, approx: mpmath.mpf, prec: int) -> Optional[Fraction]:
    """Return k = n/m with a^m == b^n exactly, if approx is within reach of one."""
    with mpmath.workdps(prec + GUARD_DIGITS):
        candidate = Fraction(mpmath.nstr(approx, prec + 5)).limit_denominator(
            EXPONENT_MATCH_DENOMINATOR
        )
        if abs(approx - to_mpf(candidate)) > mpmath.mpf(10) ** (-prec):
            return None

    n, m = candidate.numerator, candidate.denominator
    # Guard against absurd integer powers
    size = max(a.numerator.bit_length(), a.denominator.bit_length(), 1) * m
    size += max(b.numerator.bit_length(), b.denominator.bit_length(), 1) * abs(n)
    if size > 1_000_000:
        return None

    if a**m == b**n:
        logger.debug(f"log_ratio({a}, {b}) matched exact exponent {candidate}")
        return candidate
    return None


def exact_root(k: int, m: int) -> Optional[int]:
    """Integer m-th root of k >= 0 when k is a perfect m-th power."""
    if k < 2 or m == 1:
        return k
    with mpmath.workdps(len(str(k)) + GUARD_DIGITS):
        guess = int(mpmath.nint(mpmath.root(k, m)))
    for g in (guess - 1, guess, guess + 1):
        if g >= 0 and g**m == k:
            return g
    return None


def real_power(base, exponent, precision_digits: Optional[int] = None) -> Real:
    """
    base ** exponent for base > 0.

    Exact (Fraction) when both are rational and the root is perfect, e.g.
    (1/9)^(1/2) = 1/3; otherwise an mpf at the requested precision.
    """
    if base <= 0:
        raise DomainError(f"real_power needs a positive base, got {base}")

    if isinstance(base, (Fraction, int)) and isinstance(exponent, (Fraction, int)):
        base, exponent = Fraction(base), Fraction(exponent)
        n, m = exponent.numerator, exponent.denominator
        num = exact_root(base.numerator, m)
        den = exact_root(base.denominator, m)
        if num is not None and den is not None:
            return Fraction(num, den) ** n

    prec = precision_digits or get_settings().PRECISION_DIGITS
    with mpmath.workdps(prec + GUARD_DIGITS):
        return mpmath.power(to_mpf(base), to_mpf(exponent))


def _is_rational(value) -> bool:
    return isinstance(value, (Fraction, int))


def real_mul(a, b, precision_digits: Optional[int] = None) -> Real:
    """a * b, exact when both factors are rational."""
    if _is_rational(a) and _is_rational(b):
        return Fraction(a) * Fraction(b)
    prec = precision_digits or get_settings().PRECISION_DIGITS
    with mpmath.workdps(prec + GUARD_DIGITS):
        return to_mpf(a) * to_mpf(b)


def real_add(a, b, precision_digits: Optional[int] = None) -> Real:
    """a + b, exact when both terms are rational."""
    if _is_rational(a) and _is_rational(b):
        return Fraction(a) + Fraction(b)
    prec = precision_digits or get_settings().PRECISION_DIGITS
    with mpmath.workdps(prec + GUARD_DIGITS):
        return to_mpf(a) + to_mpf(b)


def real_max(a, b) -> Real:
    """The larger of a and b, compared exactly even across Fraction and mpf."""
    if _is_rational(a) and _is_rational(b):
        return max(a, b)
    with mpmath.workdps(max(mpmath.mp.dps, get_settings().PRECISION_DIGITS + GUARD_DIGITS)):
        return a if to_mpf(a) >= to_mpf(b) else b
