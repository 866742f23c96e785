"""
Staircase service for the Cantor function f_c and its (p, q, r) generalization.

The base-r digits of x are walked left to right. A retained slot contributes its branch
index (0..p-1) as a base-p digit of y; the first gap slot fixes y to the constant value
the staircase takes on that gap.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import mpmath

from config.settings import get_settings
from services.cantor_service import (
    IfsSpec,
    IntervalKind,
    RationalInterval,
    expansion,
    retained_interval,
)
from services.numeric_service import (
    GUARD_DIGITS,
    DigitSequence,
    digits_base_r,
    is_terminating,
    to_mpf,
    value_from_digits,
)
from utils.errors import DomainError

logger = logging.getLogger(__name__)

DEFAULT_MAX_LEVEL = 64


@dataclass(frozen=True)
class StaircaseValue:
    x: Fraction
    y: Fraction
    exact: bool
    level_resolved: int


def cantor_function(spec: IfsSpec, x, max_level: int = DEFAULT_MAX_LEVEL) -> StaircaseValue:
    """
    Evaluate the staircase at a rational x in [0, 1].

    Args:
        spec: IFS spec
        x: Point in [0, 1]
        max_level: Digits examined when x has no detectable periodic expansion

    Returns:
        StaircaseValue; `exact` is False only for truncated expansions, where y is
        the lower end of an interval of width p^-level_resolved containing f_c(x)
    """
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise DomainError(f"x={x} outside [0, 1]")

    d = expansion(spec, x, max_level)
    limit = len(d.digits) if d.exact else min(len(d.digits), max_level)

    y = Fraction(0)
    resolved = 0
    for i, digit in d.iter_digits(limit):
        if digit in spec.gap_slots:
            y += Fraction(spec.keeps_before(digit), spec.p**i)
            return StaircaseValue(x, y, True, i)
        y += Fraction(spec.branch_index(digit), spec.p**i)
        resolved = i

    if d.exact:
        mapped = DigitSequence(
            spec.p,
            tuple(spec.branch_index(s) for s in d.digits),
            tuple(spec.branch_index(s) for s in d.repeating_suffix) if d.repeating_suffix else None,
        )
        return StaircaseValue(x, value_from_digits(mapped), True, len(d.digits))

    logger.warning(f"f_c({x}) resolved to {resolved} digits only")
    return StaircaseValue(x, y, False, resolved)


def staircase_increment(spec: IfsSpec, k: int, j: int) -> Fraction:
    """
    f_c(right) - f_c(left) over the j-th retained level-k interval (equals p^-k).
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    iv = retained_interval(spec, k, j)
    return cantor_function(spec, iv.hi).y - cantor_function(spec, iv.lo).y


def inverse_staircase(spec: IfsSpec, y, max_level: int = DEFAULT_MAX_LEVEL) -> RationalInterval:
    """
    Preimage of y under the staircase.

    Returns:
        The full closed gap on which f_c equals y when y has a terminating base-p
        expansion, else the single point (degenerate interval). A truncated
        expansion yields the retained interval known to contain the point.
    """
    y = Fraction(y)
    if not 0 <= y <= 1:
        raise DomainError(f"y={y} outside [0, 1]")
    if y in (0, 1):
        return RationalInterval(y, y)

    if is_terminating(y, spec.p):
        c = digits_base_r(y, spec.p, 1, avoid=frozenset()).digits
        m = len(c)
        base = sum(
            (Fraction(spec.keep_slots[b], spec.r**i) for i, b in enumerate(c[:-1], start=1)),
            Fraction(0),
        )
        width = Fraction(1, spec.r**m)
        lo = base + (spec.keep_slots[c[-1] - 1] + 1) * width
        hi = base + spec.keep_slots[c[-1]] * width
        kind = IntervalKind.GAP if lo < hi else IntervalKind.RETAINED
        return RationalInterval(lo, hi, kind)

    cd = digits_base_r(y, spec.p, max_level, avoid=frozenset())
    mapped = DigitSequence(
        spec.r,
        tuple(spec.keep_slots[b] for b in cd.digits),
        tuple(spec.keep_slots[b] for b in cd.repeating_suffix) if cd.repeating_suffix else None,
        truncated=cd.truncated,
    )
    x = value_from_digits(mapped)
    if cd.truncated:
        return RationalInterval(x, x + Fraction(1, spec.r ** len(cd.digits)))
    return RationalInterval(x, x)


def product_function(spec: IfsSpec, x, max_level: int = DEFAULT_MAX_LEVEL) -> Fraction:
    """s(x) = x * f_c(x); s(x)/x has zero derivative a.e. but is not constant."""
    value = cantor_function(spec, x, max_level)
    return value.x * value.y


def sample_staircase(spec: IfsSpec, samples: int, max_level: int = DEFAULT_MAX_LEVEL) -> List[StaircaseValue]:
    """(x, f_c(x)) on the uniform grid k/(samples-1), k = 0..samples-1."""
    if samples < 2:
        raise DomainError(f"samples must be >= 2, got {samples}")
    return [cantor_function(spec, Fraction(k, samples - 1), max_level) for k in range(samples)]


def staircase_value(spec: IfsSpec, x, max_level: Optional[int] = None) -> Fraction:
    """Shorthand for cantor_function(...).y."""
    return cantor_function(spec, x, max_level or DEFAULT_MAX_LEVEL).y


def staircase_real(spec: IfsSpec, x, max_level: int = DEFAULT_MAX_LEVEL, precision_digits: Optional[int] = None):
    """
    Floating evaluation of f_c at a real x, walking max_level digits of x in mpmath.
    Used by function handles, which receive mpf arguments.
    """
    prec = precision_digits or get_settings().PRECISION_DIGITS
    with mpmath.workdps(prec + GUARD_DIGITS):
        t = to_mpf(x)
        if t < 0 or t > 1:
            raise DomainError(f"x={x} outside [0, 1]")
        if t == 1:
            return mpmath.mpf(1)
        y = mpmath.mpf(0)
        weight = mpmath.mpf(1)
        for _ in range(max_level):
            t *= spec.r
            slot = min(int(mpmath.floor(t)), spec.r - 1)
            t -= slot
            weight /= spec.p
            if slot in spec.gap_slots:
                return y + spec.keeps_before(slot) * weight
            y += spec.branch_index(slot) * weight
        return y
