"""
Calculus service: scale-invariant (logarithmic) derivatives, local constancy of the
staircase, the mean-value remainder and the corrected integral of dx over [0, 1].
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath

from config.settings import get_settings
from services.cantor_service import IfsSpec, level
from services.numeric_service import GUARD_DIGITS, Real, real_add, real_power, to_mpf
from services.staircase_service import cantor_function
from services.valuation_service import Scale
from utils.errors import DomainError

logger = logging.getLogger(__name__)

FunctionHandle = Callable[[mpmath.mpf], Real]

DEFAULT_LOG_STEP = mpmath.mpf("1e-6")

# Ridders tableau: step shrink factor, tableau size, early-exit factor
RIDDERS_SHRINK = mpmath.mpf("1.4")
RIDDERS_TABLE = 10
RIDDERS_SAFE = 2

DERIVATIVE_BASE = "log_{1/eps}"


@dataclass(frozen=True)
class LogDerivativeResult:
    x: Real
    h: Real
    value: Real
    two_sided_gap: Real
    right: Real
    left: Real
    error: Optional[Real] = None  # Ridders error estimate when extrapolated


@dataclass(frozen=True)
class IntegralResult:
    epsilon: Fraction
    v_epsilon: Real
    value: Real


@dataclass(frozen=True)
class LocalConstancyReport:
    level: int
    max_variation: Fraction
    gap_values: Tuple[Fraction, ...]
    jumps: Tuple[Fraction, ...]  # between consecutive gap values, 0 and 1 included

    @property
    def distinct_values(self) -> int:
        return len(set(self.gap_values))


@dataclass(frozen=True)
class DerivativeSample:
    x: Fraction
    value: Optional[Real]
    valid: bool
    one_sided: bool = False
    base: str = DERIVATIVE_BASE


def _log_of(f: FunctionHandle, x) -> mpmath.mpf:
    fx = f(x)
    if fx <= 0:
        raise DomainError(f"function is not positive at x={mpmath.nstr(to_mpf(x), 15)}")
    return mpmath.log(to_mpf(fx))


def _ridders(g: Callable[[mpmath.mpf], mpmath.mpf], h: mpmath.mpf) -> Tuple[mpmath.mpf, mpmath.mpf]:
    """Ridders' extrapolation of the central difference of g at 0."""
    con2 = RIDDERS_SHRINK**2
    a = {}
    hh = h
    a[0, 0] = (g(hh) - g(-hh)) / (2 * hh)
    err = mpmath.inf
    result = a[0, 0]
    for i in range(1, RIDDERS_TABLE):
        hh = hh / RIDDERS_SHRINK
        a[0, i] = (g(hh) - g(-hh)) / (2 * hh)
        fac = con2
        for j in range(1, i + 1):
            a[j, i] = (a[j - 1, i] * fac - a[j - 1, i - 1]) / (fac - 1)
            fac = con2 * fac
            errt = max(abs(a[j, i] - a[j - 1, i]), abs(a[j, i] - a[j - 1, i - 1]))
            if errt <= err:
                err = errt
                result = a[j, i]
        if abs(a[i, i] - a[i - 1, i - 1]) >= RIDDERS_SAFE * err:
            break
    return result, err


def scale_derivative(
    f: FunctionHandle,
    x,
    h=DEFAULT_LOG_STEP,
    richardson: bool = False,
    precision_digits: Optional[int] = None,
) -> LogDerivativeResult:
    """
    Logarithmic derivative d log f / d log |x| by central differences in log coordinates.

    Args:
        f: Function handle, positive around x
        x: Evaluation point (nonzero; negative x is sampled as x * e^t)
        h: Log step (> 0)
        richardson: Refine the central difference by Ridders extrapolation
        precision_digits: Working precision. If None, uses Settings.PRECISION_DIGITS.

    Returns:
        LogDerivativeResult; `two_sided_gap` = |right - left| of the one-sided differences
    """
    prec = precision_digits or get_settings().PRECISION_DIGITS
    with mpmath.workdps(prec + GUARD_DIGITS):
        x0 = to_mpf(x)
        h = to_mpf(h)
        if h <= 0:
            raise DomainError(f"log step must be positive, got {h}")
        if x0 == 0:
            raise DomainError("logarithmic derivative is undefined at x=0")

        def g(t):
            return _log_of(f, x0 * mpmath.exp(t))

        g0, g_plus, g_minus = g(0), g(h), g(-h)
        right = (g_plus - g0) / h
        left = (g0 - g_minus) / h
        value = (g_plus - g_minus) / (2 * h)
        gap = abs(right - left)
        error = None
        if richardson:
            value, error = _ridders(g, h)

    return LogDerivativeResult(
        x=x,
        h=h,
        value=value,
        two_sided_gap=gap,
        right=right,
        left=left,
        error=error,
    )


def locally_constant_check(spec: IfsSpec, n: int) -> LocalConstancyReport:
    """
    Evaluate the staircase at the left end, middle and right end of every gap deleted
    up to level n. The variation |x * dv/dx| inside each gap is exactly 0; the jumps
    between consecutive gap values show v is not constant overall.
    """
    if n < 1:
        raise DomainError(f"level must be >= 1, got {n}")

    max_variation = Fraction(0)
    values: List[Fraction] = []
    for gap in level(spec, n).gaps:
        left = cantor_function(spec, gap.lo).y
        mid = cantor_function(spec, gap.midpoint).y
        right = cantor_function(spec, gap.hi).y
        for (a, fa), (b, fb) in (((gap.lo, left), (gap.midpoint, mid)), ((gap.midpoint, mid), (gap.hi, right))):
            variation = abs(gap.midpoint * (fb - fa) / (b - a))
            max_variation = max(max_variation, variation)
        values.append(mid)

    bounds = [Fraction(0)] + values + [Fraction(1)]
    jumps = tuple(b - a for a, b in zip(bounds, bounds[1:]))
    if max_variation != 0:
        logger.warning(f"staircase varies inside a level-{n} gap: {max_variation}")
    return LocalConstancyReport(level=n, max_variation=max_variation, gap_values=tuple(values), jumps=jumps)


def valuation_derivative_check(
    scale: Scale,
    samples: Sequence,
    h=DEFAULT_LOG_STEP,
    precision_digits: Optional[int] = None,
) -> List[DerivativeSample]:
    """
    dv / d log_{1/eps}(1/x) for v(x) = log_{1/eps}(eps/x), expected to be 1.

    Samples outside (0, eps] are flagged invalid. At x = eps, and wherever the upper
    sample would leave the domain, a one-sided difference is used.
    """
    prec = precision_digits or get_settings().PRECISION_DIGITS
    results = []
    with mpmath.workdps(prec + GUARD_DIGITS):
        eps = to_mpf(scale.epsilon)
        h = to_mpf(h)
        log_inv = mpmath.log(1 / eps)

        def v(y):
            return mpmath.log(eps / y) / log_inv

        for sample in samples:
            x = Fraction(sample)
            if not 0 < x <= scale.epsilon:
                logger.warning(f"valuation derivative sample {x} outside (0, {scale.epsilon}]")
                results.append(DerivativeSample(x=x, value=None, valid=False))
                continue

            # u = log_{1/eps}(1/x) moves by +-h under x -> x * eps^(+-h)
            xm = to_mpf(x)
            lower = xm * eps**h
            upper = xm * eps ** (-h)
            if upper <= eps:
                value = (v(lower) - v(upper)) / (2 * h)
                results.append(DerivativeSample(x=x, value=value, valid=True))
            else:
                value = (v(lower) - v(xm)) / h
                results.append(DerivativeSample(x=x, value=value, valid=True, one_sided=True))
    return results


def mvt_residual(
    f: FunctionHandle,
    x0,
    x,
    norm_gap,
    h=DEFAULT_LOG_STEP,
    precision_digits: Optional[int] = None,
) -> Real:
    """
    |log f(X) - log f(X0) - f'(X0) * norm_gap| with f' the logarithmic derivative at X0.

    Power laws have zero residual for norm_gap = log(X/X0); smooth-in-log functions
    leave a remainder quadratic in norm_gap.
    """
    prec = precision_digits or get_settings().PRECISION_DIGITS
    derivative = scale_derivative(f, x0, h, richardson=True, precision_digits=prec).value
    with mpmath.workdps(prec + GUARD_DIGITS):
        return abs(_log_of(f, to_mpf(x)) - _log_of(f, to_mpf(x0)) - derivative * to_mpf(norm_gap))


def corrected_integral(epsilon, v_epsilon) -> IntegralResult:
    """
    1 - eps + v(eps): the integral of dx over [0, 1] with scales below eps replaced by
    the valued scales eps^(1+v(eps)), whose contribution is v(eps).
    """
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {eps}")
    if v_epsilon < 0:
        raise DomainError(f"v(epsilon) must be >= 0, got {v_epsilon}")
    return IntegralResult(epsilon=eps, v_epsilon=v_epsilon, value=real_add(1 - eps, v_epsilon))


def corrected_integral_sequence(epsilons: Sequence, v_epsilon) -> List[IntegralResult]:
    """corrected_integral along eps -> 0 with v fixed; values tend to 1 + v."""
    return [corrected_integral(eps, v_epsilon) for eps in epsilons]


def valued_scale(epsilon, v_epsilon, precision_digits: Optional[int] = None) -> Real:
    """eps^(1+v), the scale replacing everything below eps."""
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {eps}")
    return real_power(eps, real_add(1, v_epsilon, precision_digits), precision_digits)


def inversion_hop(norm, alpha, precision_digits: Optional[int] = None) -> Real:
    """||X2|| = ||X1||^alpha, 0 < alpha < 1: a hop to a larger norm at a coarser scale."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < norm < 1:
        raise DomainError(f"norm must lie in (0, 1), got {norm}")
    return real_power(norm, alpha, precision_digits)
