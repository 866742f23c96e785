"""
Valuation service: the non-archimedean valuation v(x) = log_{1/eps}(eps/x) on relative
infinitesimals, valued zero-sets, the norm ||.|| on the Cantor set and multiplicative
neighbours.
"""

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import mpmath
import pandas as pd

from config.settings import get_settings
from services.cantor_service import (
    IfsSpec,
    InGapAt,
    RationalInterval,
    UndecidedAt,
    expansion,
    hausdorff_dimension,
    level,
    membership,
)
from services.numeric_service import (
    GUARD_DIGITS,
    Real,
    log_ratio,
    real_add,
    real_max,
    real_mul,
    real_power,
    to_mpf,
)
from services.staircase_service import cantor_function
from utils.errors import DomainError
from utils.parsers import format_rational

logger = logging.getLogger(__name__)

# Scaling factors alpha tried by the scaling-invariance check when none are supplied
DEFAULT_SCALING_FACTORS = (Fraction(1, 2), Fraction(3, 2), Fraction(3))

# Digits compared when locating the smallest canonical interval holding two points
SEPARATION_DEPTH = 64


@dataclass(frozen=True)
class Scale:
    epsilon: Fraction

    def __post_init__(self):
        eps = Fraction(self.epsilon)
        if not 0 < eps < 1:
            raise DomainError(f"scale must lie in (0, 1), got {eps}")
        object.__setattr__(self, "epsilon", eps)


@dataclass(frozen=True)
class ValuedInfinitesimal:
    x_tilde: Fraction
    scale: Scale
    v: Real
    lambda_: Fraction  # x_tilde / epsilon

    @property
    def is_exact(self) -> bool:
        return isinstance(self.v, Fraction)

    def reconstruct(self, precision_digits: Optional[int] = None) -> Real:
        """eps^(1+v), which recovers x_tilde."""
        return real_power(self.scale.epsilon, real_add(1, self.v, precision_digits), precision_digits)


@dataclass(frozen=True)
class PairCheck:
    x1: Fraction
    x2: Fraction
    valid: bool
    positivity: Optional[bool] = None
    scaling_invariance: Optional[bool] = None
    strong_triangle: Optional[bool] = None
    note: str = ""
    # (alpha, v(x), v(alpha * x)) for plain multiplication by alpha, where alpha * x <= eps
    linear_scaling: Tuple[Tuple[Real, Real, Real], ...] = ()

    @property
    def passed(self) -> bool:
        return self.valid and bool(self.positivity and self.scaling_invariance and self.strong_triangle)


@dataclass(frozen=True)
class AxiomReport:
    scale: Scale
    checks: Tuple[PairCheck, ...]

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks if c.valid)

    @property
    def invalid_count(self) -> int:
        return sum(1 for c in self.checks if not c.valid)

    def failures(self) -> List[PairCheck]:
        return [c for c in self.checks if c.valid and not c.passed]

    @property
    def max_linear_drift(self) -> Real:
        """
        Largest |v(alpha x) - v(x)| under plain multiplication. Informational: it equals
        log(1/alpha) / log(1/eps) and shrinks only as eps -> 0.
        """
        drift: Real = Fraction(0)
        for check in self.checks:
            for _, v, v_scaled in check.linear_scaling:
                drift = real_max(drift, abs(real_add(v_scaled, real_mul(-1, v))))
        return drift


@dataclass(frozen=True)
class ZeroSetEntry:
    gap: RationalInterval
    value: Fraction


@dataclass(frozen=True)
class ValuedZeroSet:
    spec: IfsSpec
    level: int
    entries: Tuple[ZeroSetEntry, ...]
    note: str = ""

    @property
    def values(self) -> Tuple[Fraction, ...]:
        return tuple(e.value for e in self.entries)

    @property
    def full_set(self) -> Tuple[Fraction, ...]:
        """Values including the implicit 0."""
        return (Fraction(0),) + self.values

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "level": self.level,
                    "gap_lo": format_rational(e.gap.lo),
                    "gap_hi": format_rational(e.gap.hi),
                    "value": format_rational(e.value),
                }
                for e in self.entries
            ],
            columns=["level", "gap_lo", "gap_hi", "value"],
        )


@dataclass(frozen=True)
class NeighborPair:
    x: Fraction
    exponent: Real
    x_plus: Real
    x_minus: Real
    sigma: Optional[Real] = None
    j: Optional[Real] = None


@dataclass(frozen=True)
class ValuationProfile:
    """Constants of v(x) = alpha_n * eps^s0; the default is alpha = (1,), s0 = s."""

    alpha_values: Tuple[Real, ...]
    s0: Real
    scale: Scale

    def __post_init__(self):
        if not self.alpha_values:
            raise DomainError("profile needs at least one alpha value")
        if any(a <= 0 for a in self.alpha_values):
            raise DomainError("profile alpha values must be positive")


@dataclass(frozen=True)
class NeighborLimit:
    """Finite-k quantities of the multiplicative-neighbour limit construction."""

    x: Fraction
    k: int
    x_minus: Fraction
    x_plus: Fraction
    upper_gap: Fraction  # r^k (x+ - x)
    lower_gap: Fraction  # r^k (x - x-)
    staircase_upper_gap: Fraction  # p^k (X+ - X)
    staircase_lower_gap: Fraction  # p^k (X - X-)
    balanced: bool
    sigma_plus: Real
    sigma_minus: Real
    xprime_plus: Real
    xprime_minus: Real
    observed_j: Optional[Real] = None


def valuation_value(x, epsilon, precision_digits: Optional[int] = None) -> Real:
    """v(x) = log_{1/eps}(eps/x) for rational or real arguments."""
    if isinstance(x, (Fraction, int)) and isinstance(epsilon, (Fraction, int)):
        return log_ratio(Fraction(epsilon) / Fraction(x), 1 / Fraction(epsilon), precision_digits)
    prec = precision_digits or get_settings().PRECISION_DIGITS
    with mpmath.workdps(prec + GUARD_DIGITS):
        eps = to_mpf(epsilon)
        return log_ratio(eps / to_mpf(x), 1 / eps, prec)


def infinitesimal_valuation(x_tilde, scale: Scale, precision_digits: Optional[int] = None) -> ValuedInfinitesimal:
    """
    Value a relative infinitesimal 0 < x_tilde <= eps.

    Returns:
        ValuedInfinitesimal with v exact (Fraction) when eps/x_tilde is a rational
        power of 1/eps, e.g. eps = 1/9, x_tilde = 1/27 gives v = 1/2
    """
    x = Fraction(x_tilde)
    eps = scale.epsilon
    if not 0 < x <= eps:
        raise DomainError(f"x_tilde={x} is not a relative infinitesimal for scale {eps}")
    v = valuation_value(x, eps, precision_digits)
    return ValuedInfinitesimal(x_tilde=x, scale=scale, v=v, lambda_=x / eps)


def _close(a: Real, b: Real, prec: int) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    with mpmath.workdps(prec + GUARD_DIGITS):
        return abs(to_mpf(a) - to_mpf(b)) <= mpmath.mpf(10) ** (-(prec - 2))


def _not_above(a: Real, b: Real, prec: int) -> bool:
    """a <= b up to the working tolerance."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a <= b
    with mpmath.workdps(prec + GUARD_DIGITS):
        return to_mpf(a) <= to_mpf(b) + mpmath.mpf(10) ** (-(prec - 2))


def _check_pair(
    x1: Fraction,
    x2: Fraction,
    scale: Scale,
    factors: Sequence,
    prec: int,
) -> PairCheck:
    eps = scale.epsilon
    if not 0 < x1 <= x2:
        return PairCheck(x1, x2, valid=False, note="needs 0 < x1 <= x2")
    if x1 + x2 > eps:
        return PairCheck(x1, x2, valid=False, note="x1 + x2 exceeds the scale")

    v1 = valuation_value(x1, eps, prec)
    v2 = valuation_value(x2, eps, prec)
    v12 = valuation_value(x1 + x2, eps, prec)

    # (a) v >= 0, with v = 0 exactly at x = eps
    positivity = True
    for x, v in ((x1, v1), (x2, v2), (x1 + x2, v12)):
        if x == eps:
            positivity = positivity and v == 0
        else:
            positivity = positivity and v > 0

    # (b) a real factor alpha acts in log coordinates: (x, eps) -> (x^alpha, eps^alpha).
    # Plain alpha * x is recorded separately in linear_scaling.
    scaling = True
    for alpha in factors:
        eps_a = real_power(eps, alpha, prec)
        for x, v in ((x1, v1), (x2, v2)):
            scaled = valuation_value(real_power(x, alpha, prec), eps_a, prec)
            scaling = scaling and _close(scaled, v, prec)

    linear = []
    for alpha in factors:
        for x, v in ((x1, v1), (x2, v2)):
            ax = real_mul(alpha, x, prec)
            if _not_above(ax, eps, prec):
                linear.append((alpha, v, valuation_value(ax, eps, prec)))

    # (c) v(x1 + x2) <= max(v(x1), v(x2))
    strong = _not_above(v12, real_max(v1, v2), prec)

    return PairCheck(x1, x2, True, positivity, scaling, strong, linear_scaling=tuple(linear))


def ultrametric_axiom_report(
    scale: Scale,
    samples: Sequence[Tuple],
    precision_digits: Optional[int] = None,
    scaling_factors: Sequence = DEFAULT_SCALING_FACTORS,
) -> AxiomReport:
    """
    Check positivity, scaling invariance and the strong triangle inequality.

    Args:
        scale: Scale eps
        samples: Pairs (x1, x2) with 0 < x1 <= x2 and x1 + x2 <= eps; other pairs are
            flagged invalid and not evaluated
        precision_digits: Working precision. If None, uses Settings.PRECISION_DIGITS.
        scaling_factors: Real factors alpha used for the scaling check

    Returns:
        AxiomReport
    """
    prec = precision_digits or get_settings().PRECISION_DIGITS
    checks = tuple(
        _check_pair(Fraction(x1), Fraction(x2), scale, scaling_factors, prec) for x1, x2 in samples
    )
    report = AxiomReport(scale=scale, checks=checks)
    if not report.all_pass:
        logger.warning(f"Ultrametric axioms failed for {len(report.failures())} pair(s) at scale {scale.epsilon}")
    return report


def refine_values(values: Sequence[Fraction]) -> List[Fraction]:
    """Add the mean of every two consecutive values (0 and 1 included as bounds)."""
    bounds = [Fraction(0)] + list(values) + [Fraction(1)]
    means = [(a + b) / 2 for a, b in zip(bounds, bounds[1:])]
    return sorted(set(values) | set(means))


def valued_zero_set(spec: IfsSpec, n: int) -> ValuedZeroSet:
    """
    Label the gaps deleted at levels 1..n with their constant values.

    For p = 2 the values are built by mean-of-consecutive refinement; for other p
    the generalized staircase value on each gap is used and a note is attached.
    """
    if n < 1:
        raise DomainError(f"level must be >= 1, got {n}")
    gaps = level(spec, n).gaps

    if spec.p == 2:
        values: List[Fraction] = []
        for _ in range(n):
            values = refine_values(values)
        note = ""
    else:
        values = [cantor_function(spec, gap.lo).y for gap in gaps]
        note = f"generalized staircase values (p={spec.p})"
        logger.warning(f"valued_zero_set: {note}")

    entries = tuple(ZeroSetEntry(gap, value) for gap, value in zip(gaps, values))
    return ValuedZeroSet(spec=spec, level=n, entries=entries, note=note)


def interval_norm(spec: IfsSpec, n: int) -> Fraction:
    """||F_nk|| = r^(-n s) = p^-n for every retained level-n interval."""
    if n < 0:
        raise DomainError(f"level must be >= 0, got {n}")
    return Fraction(1, spec.p**n)


def scale_to_dimension(epsilon, spec: IfsSpec, precision_digits: Optional[int] = None) -> Real:
    """
    eps^s, substituting p = r^s: exact p^-t whenever eps = r^-t for rational t.
    """
    eps = Fraction(epsilon)
    t = log_ratio(1 / eps, Fraction(spec.r), precision_digits)
    if isinstance(t, Fraction):
        return real_power(Fraction(spec.p), -t, precision_digits)
    return real_power(eps, hausdorff_dimension(spec, precision_digits), precision_digits)


def default_profile(spec: IfsSpec, scale: Scale, precision_digits: Optional[int] = None) -> ValuationProfile:
    return ValuationProfile(
        alpha_values=(Fraction(1),),
        s0=hausdorff_dimension(spec, precision_digits),
        scale=scale,
    )


def point_norm(
    x,
    scale: Scale,
    spec: IfsSpec,
    profile: Optional[ValuationProfile] = None,
    verify_level: int = 64,
    precision_digits: Optional[int] = None,
) -> Real:
    """
    ||x|| = inf_n alpha_n eps^s0 for x in C; eps^s with the default profile.
    """
    x = Fraction(x)
    status = membership(spec, x, verify_level)
    if isinstance(status, InGapAt):
        raise DomainError(f"x={x} is not in C (gap at level {status.level})")
    if isinstance(status, UndecidedAt):
        raise DomainError(f"x={x} not shown to lie in C within {status.max_level} digits")

    if profile is None:
        return scale_to_dimension(scale.epsilon, spec, precision_digits)

    s = hausdorff_dimension(spec, precision_digits)
    prec = precision_digits or get_settings().PRECISION_DIGITS
    if all(a == 1 for a in profile.alpha_values) and _close(profile.s0, s, prec):
        return scale_to_dimension(scale.epsilon, spec, precision_digits)
    alpha = min(profile.alpha_values, key=to_mpf)
    return real_mul(alpha, real_power(scale.epsilon, profile.s0, precision_digits), precision_digits)


def multiplicative_neighbors(x, exponent, precision_digits: Optional[int] = None) -> NeighborPair:
    """
    X+ = x^(1+e), X- = x^(1-e); X+ < x < X- for e > 0 and X+ * X- = x^2.
    """
    x = Fraction(x)
    if not 0 < x < 1:
        raise DomainError(f"x={x} outside (0, 1)")
    if exponent < 0:
        raise DomainError(f"exponent must be >= 0, got {exponent}")
    x_plus = real_power(x, real_add(1, exponent, precision_digits), precision_digits)
    x_minus = real_power(x, real_add(1, -exponent, precision_digits), precision_digits)
    return NeighborPair(x=x, exponent=exponent, x_plus=x_plus, x_minus=x_minus)


def sigma_neighbors(x, sigma, j, precision_digits: Optional[int] = None) -> NeighborPair:
    """X+- = x * sigma^(+-j), with the equivalent exponent j * log(sigma) / log(x)."""
    x = Fraction(x)
    if not 0 < x < 1:
        raise DomainError(f"x={x} outside (0, 1)")
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    exponent = real_mul(j, log_ratio(sigma, x, precision_digits), precision_digits) if sigma != 1 else Fraction(0)
    x_plus = real_mul(x, real_power(sigma, j, precision_digits), precision_digits)
    x_minus = real_mul(x, real_power(sigma, -j, precision_digits), precision_digits)
    return NeighborPair(x=x, exponent=exponent, x_plus=x_plus, x_minus=x_minus, sigma=sigma, j=j)


def neighbor_limit_construction(
    spec: IfsSpec,
    x,
    k: int,
    precision_digits: Optional[int] = None,
) -> NeighborLimit:
    """
    Bracket x in C by its level-k retained interval [x-, x+] and report the scaled
    gaps on both sides, in x and in the staircase. The balance
    p^k (X+ - X-) = r^k (x+ - x-) holds exactly at every k.
    """
    x = Fraction(x)
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    status = membership(spec, x, max(k, 64))
    if isinstance(status, InGapAt):
        raise DomainError(f"x={x} lies in the gap [{status.gap.lo}, {status.gap.hi}]")
    if isinstance(status, UndecidedAt):
        raise DomainError(f"x={x} not shown to lie in C within {status.max_level} digits")

    digits = expansion(spec, x, k)
    x_minus = sum(
        (Fraction(d, spec.r**i) for i, d in digits.iter_digits(k)),
        Fraction(0),
    )
    x_plus = x_minus + Fraction(1, spec.r**k)

    fx = cantor_function(spec, x).y
    f_minus = cantor_function(spec, x_minus).y
    f_plus = cantor_function(spec, x_plus).y

    upper = spec.r**k * (x_plus - x)
    lower = spec.r**k * (x - x_minus)
    s_upper = spec.p**k * (f_plus - fx)
    s_lower = spec.p**k * (fx - f_minus)

    prec = precision_digits or get_settings().PRECISION_DIGITS
    with mpmath.workdps(prec + GUARD_DIGITS):
        sigma_plus = mpmath.exp(to_mpf(upper) / k)
        sigma_minus = mpmath.exp(to_mpf(lower) / k)
        xprime_plus = mpmath.exp(to_mpf(s_upper) / k)
        xprime_minus = mpmath.exp(to_mpf(s_lower) / k)
        observed_j = None
        if upper != 0:
            observed_j = mpmath.log(xprime_plus) / mpmath.log(sigma_plus) - 1

    return NeighborLimit(
        x=x,
        k=k,
        x_minus=x_minus,
        x_plus=x_plus,
        upper_gap=upper,
        lower_gap=lower,
        staircase_upper_gap=s_upper,
        staircase_lower_gap=s_lower,
        balanced=(s_upper + s_lower == upper + lower),
        sigma_plus=sigma_plus,
        sigma_minus=sigma_minus,
        xprime_plus=xprime_plus,
        xprime_minus=xprime_minus,
        observed_j=observed_j,
    )


def real_like_limit(alpha, epsilons: Sequence, precision_digits: Optional[int] = None) -> List[Real]:
    """log_{1/eps}(alpha/eps) along a sequence eps -> alpha; tends to 0."""
    alpha = Fraction(alpha)
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return [valuation_value(alpha, Scale(eps).epsilon, precision_digits) for eps in epsilons]


def valuation_exponent(v, scale: Scale, precision_digits: Optional[int] = None) -> Real:
    """a(x) with v(x) = eps^a(x), i.e. a = log_eps v."""
    if v <= 0:
        raise DomainError(f"valuation must be positive, got {v}")
    return log_ratio(v, scale.epsilon, precision_digits)


def common_prefix_level(spec: IfsSpec, x, y, depth: int = SEPARATION_DEPTH) -> int:
    """Number of leading base-r digits shared by x and y (capped at depth)."""
    dx = expansion(spec, x, depth)
    dy = expansion(spec, y, depth)
    k = 0
    for i in range(1, depth + 1):
        a, b = dx.digit(i), dy.digit(i)
        if a is None or b is None or a != b:
            break
        k = i
    return k


def separation_scale(spec: IfsSpec, x, y, depth: int = SEPARATION_DEPTH) -> Fraction:
    """Length of the smallest canonical interval containing both x and y."""
    return Fraction(1, spec.r ** common_prefix_level(spec, x, y, depth))


def ultrametric_distance(spec: IfsSpec, x, y, depth: int = SEPARATION_DEPTH) -> Fraction:
    """||x - y||: the norm p^-k of the smallest canonical interval separating x, y."""
    if Fraction(x) == Fraction(y):
        return Fraction(0)
    return interval_norm(spec, common_prefix_level(spec, x, y, depth))


def random_admissible_pairs(scale: Scale, count: int, seed: int = 0, resolution: int = 10**6) -> List[Tuple[Fraction, Fraction]]:
    """
    `count` pairs 0 < x1 <= x2 with x1 + x2 <= eps, on the grid eps * k / (2 * resolution).
    """
    rng = random.Random(seed)
    pairs = []
    for _ in range(count):
        a, b = sorted((rng.randint(1, resolution), rng.randint(1, resolution)))
        pairs.append((scale.epsilon * Fraction(a, 2 * resolution), scale.epsilon * Fraction(b, 2 * resolution)))
    return pairs
