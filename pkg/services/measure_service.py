"""
Measure service: Hausdorff s-measure and valued measure estimates over canonical
clopen covers of a target made of retained intervals.

Every cover element at level n has diameter r^-n, so with p = r^s each term
(r^-n)^s is the exact rational p^-n and the headline identity mu_v = mu_s = 1 on C
is checked without floating logarithms.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import mpmath
import pandas as pd

from config.settings import get_settings
from services.cantor_service import (
    IfsSpec,
    RationalInterval,
    check_cap,
    hausdorff_dimension,
    is_canonical,
    level,
)
from services.numeric_service import GUARD_DIGITS, Real, real_mul, real_power, to_mpf
from services.valuation_service import Scale, interval_norm, point_norm, scale_to_dimension
from utils.errors import ResourceCapError, SpecValidationError
from utils.parsers import format_number

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoverElement:
    interval: RationalInterval
    euclid_diameter: Fraction
    na_diameter: Real
    scale_used: Fraction


@dataclass(frozen=True)
class MeasureReport:
    target: Tuple[RationalInterval, ...]
    level: int
    cover: Tuple[CoverElement, ...]
    mu_s_sum: Real
    mu_v_sum: Real
    s_used: Real

    @property
    def count(self) -> int:
        return len(self.cover)

    @property
    def ratio(self) -> Real:
        """mu_v / mu_s, reported as 0 for an empty target."""
        if self.mu_s_sum == 0:
            return Fraction(0)
        if isinstance(self.mu_s_sum, Fraction) and isinstance(self.mu_v_sum, Fraction):
            return self.mu_v_sum / self.mu_s_sum
        with mpmath.workdps(get_settings().PRECISION_DIGITS + GUARD_DIGITS):
            return to_mpf(self.mu_v_sum) / to_mpf(self.mu_s_sum)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    count: int
    mu_s_sum: Real
    mu_v_sum: Real
    ratio: Real


def _target_level(spec: IfsSpec, iv: RationalInterval) -> int:
    m = is_canonical(spec, iv)
    if m is None:
        raise SpecValidationError(f"target interval [{iv.lo}, {iv.hi}] is not a canonical retained interval")
    return m


def _validate_target(spec: IfsSpec, target: Sequence[RationalInterval]) -> List[Tuple[RationalInterval, int]]:
    """Canonical levels of the target pieces, sorted; overlapping pieces are rejected."""
    pieces = sorted(((iv, _target_level(spec, iv)) for iv in target), key=lambda t: (t[0].lo, t[0].hi))
    for (a, _), (b, _) in zip(pieces, pieces[1:]):
        if b.lo < a.hi:
            raise SpecValidationError(f"target intervals [{a.lo}, {a.hi}] and [{b.lo}, {b.hi}] overlap")
    return pieces


def target_level(spec: IfsSpec, target: Sequence[RationalInterval]) -> int:
    """Deepest canonical level among the target pieces (0 for an empty target)."""
    return max((m for _, m in _validate_target(spec, target)), default=0)


@lru_cache(maxsize=4096)
def _diameter_power(length: Fraction, p: int, r: int, exponent: Optional[Real], prec: int) -> Real:
    """
    length^exponent for length = r^-n. With no exponent (s itself) this is p^-n exactly.
    """
    if exponent is None:
        n = 0
        den = length.denominator
        while den > 1:
            den //= r
            n += 1
        return Fraction(1, p**n)
    return real_power(length, exponent, prec)


@lru_cache(maxsize=4096)
def _valued_diameter(spec: IfsSpec, scale: Fraction, exponent: Optional[Real], prec: int) -> Real:
    """
    Non-archimedean diameter of a cover element at scale eps: eps^s through the
    valuation norm, or eps^exponent for an off-dimension exponent.
    """
    if exponent is None:
        return scale_to_dimension(scale, spec, prec)
    return real_power(scale, exponent, prec)


def _refine(spec: IfsSpec, iv: RationalInterval, depth: int) -> List[RationalInterval]:
    """Retained level-(m + depth) intervals inside the level-m interval iv."""
    children = level(spec, depth).retained
    return [RationalInterval(iv.lo + iv.length * c.lo, iv.lo + iv.length * c.hi) for c in children]


def _element(spec: IfsSpec, iv: RationalInterval, exponent: Optional[Real], prec: int) -> CoverElement:
    scale = iv.length
    return CoverElement(
        interval=iv,
        euclid_diameter=iv.length,
        na_diameter=_valued_diameter(spec, scale, exponent, prec),
        scale_used=scale,
    )


def _total(values: Sequence[Real]) -> Real:
    if all(isinstance(v, Fraction) for v in values):
        return sum(values, Fraction(0))
    with mpmath.workdps(get_settings().PRECISION_DIGITS + GUARD_DIGITS):
        return mpmath.fsum(to_mpf(v) for v in values)


def _cover_report(
    spec: IfsSpec,
    target: Sequence[RationalInterval],
    n: int,
    exponent: Optional[Real] = None,
) -> MeasureReport:
    pieces = _validate_target(spec, target)
    for iv, m in pieces:
        if m > n:
            raise SpecValidationError(f"target interval [{iv.lo}, {iv.hi}] is finer than level {n}")
    total = sum(spec.p ** (n - m) for _, m in pieces)
    cap = get_settings().MAX_INTERVALS
    if total > cap:
        raise ResourceCapError(f"cover at level {n} needs {total} intervals, above the cap of {cap}")

    intervals = [child for iv, m in pieces for child in _refine(spec, iv, n - m)]

    prec = get_settings().PRECISION_DIGITS
    workers = get_settings().MEASURE_WORKERS
    if workers > 1 and len(intervals) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            cover = list(executor.map(lambda iv: _element(spec, iv, exponent, prec), intervals))
    else:
        cover = [_element(spec, iv, exponent, prec) for iv in intervals]

    mu_s = _total([_diameter_power(e.euclid_diameter, spec.p, spec.r, exponent, prec) for e in cover])
    mu_v = _total([e.na_diameter for e in cover])
    s_used = exponent if exponent is not None else hausdorff_dimension(spec)

    logger.debug(f"cover at level {n}: {len(cover)} elements, mu_s={mu_s}, mu_v={mu_v}")
    return MeasureReport(
        target=tuple(iv for iv, _ in pieces),
        level=n,
        cover=tuple(cover),
        mu_s_sum=mu_s,
        mu_v_sum=mu_v,
        s_used=s_used,
    )


def whole_set() -> List[RationalInterval]:
    """Target covering all of C."""
    return [RationalInterval(Fraction(0), Fraction(1))]


def hausdorff_measure_estimate(
    spec: IfsSpec,
    target: Sequence[RationalInterval],
    n: int,
    exponent: Optional[Real] = None,
) -> MeasureReport:
    """
    Sum of d(U)^s over the level-n canonical refinement of the target.

    Args:
        spec: IFS spec
        target: Canonical retained intervals (possibly of different levels <= n)
        n: Cover level
        exponent: Exponent used instead of s. If None, s itself (exact sums).

    Returns:
        MeasureReport; mu_s_sum = count * p^-n for exponent s
    """
    return _cover_report(spec, target, n, exponent)


def valued_measure_estimate(
    spec: IfsSpec,
    target: Sequence[RationalInterval],
    n: int,
    exponent: Optional[Real] = None,
) -> MeasureReport:
    """Sum of eps_i^s over the clopen cover, eps_i the scale of each element."""
    return _cover_report(spec, target, n, exponent)


def measure_convergence_table(
    spec: IfsSpec,
    target: Sequence[RationalInterval],
    n_max: int,
    exponent: Optional[Real] = None,
) -> List[ConvergenceRow]:
    """
    One row per level from max(1, target level) to n_max.
    """
    check_cap(spec, n_max)
    start = max(1, target_level(spec, target))
    rows = []
    for n in range(start, n_max + 1):
        report = _cover_report(spec, target, n, exponent)
        rows.append(ConvergenceRow(n, report.count, report.mu_s_sum, report.mu_v_sum, report.ratio))
    return rows


def convergence_frame(rows: Sequence[ConvergenceRow], digits: Optional[int] = None) -> pd.DataFrame:
    digits = digits or get_settings().PRECISION_DIGITS
    return pd.DataFrame(
        [
            {
                "n": row.n,
                "count": row.count,
                "mu_s": format_number(row.mu_s_sum, digits),
                "mu_v": format_number(row.mu_v_sum, digits),
                "ratio": format_number(row.ratio, digits),
            }
            for row in rows
        ],
        columns=["n", "count", "mu_s", "mu_v", "ratio"],
    )


def level_sum(spec: IfsSpec, n: int, exponent: Optional[Real] = None) -> Real:
    """p^n * r^(-n * exponent); exactly 1 when exponent is s."""
    if exponent is None:
        return spec.p**n * interval_norm(spec, n)
    return real_mul(spec.p**n, real_power(Fraction(spec.r), real_mul(-n, exponent)))


def initial_segment_measure(x, scale: Scale, spec: IfsSpec) -> Real:
    """mu_v[(0, x)] = ||x|| for x in C."""
    return point_norm(x, scale, spec)
