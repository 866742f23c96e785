"""
Cantor service for (p, q, r) Cantor sets: IFS specs, exact level-n approximations,
membership tests and the Hausdorff dimension.

The unit interval is cut into r slots of length 1/r; the slots flagged "keep" are the
images of the p similitudes, the "gap" slots are deleted. Adjacent gap slots are merged
into one deleted interval.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import FrozenSet, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from config.settings import get_settings
from services.numeric_service import DigitSequence, Real, digits_base_r, log_ratio
from utils.errors import DomainError, ResourceCapError, SpecValidationError
from utils.normalize import GAP, KEEP, normalize_slot

logger = logging.getLogger(__name__)


class IfsSpec(BaseModel):
    """
    (p, q, r) similitude family: p retained slots and q deleted slots out of r,
    each similitude contracting by 1/r.
    """

    model_config = ConfigDict(frozen=True)

    p: int
    q: int
    r: int
    gap_pattern: Tuple[str, ...]

    @field_validator("gap_pattern", mode="before")
    @classmethod
    def _normalize_pattern(cls, value):
        return tuple(normalize_slot(t) for t in value)

    @model_validator(mode="after")
    def _check_invariants(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.p + self.q != self.r:
            raise ValueError("p+q must equal r")
        if len(self.gap_pattern) != self.r:
            raise ValueError(f"gap_pattern must have r={self.r} entries, got {len(self.gap_pattern)}")
        if sum(1 for s in self.gap_pattern if s == KEEP) != self.p:
            raise ValueError(f"gap_pattern must retain exactly p={self.p} slots")
        if self.gap_pattern[0] != KEEP or self.gap_pattern[-1] != KEEP:
            raise ValueError("gap_pattern must retain the first and last slots")
        return self

    @property
    def keep_slots(self) -> Tuple[int, ...]:
        """Slot indices of the retained subintervals, left to right."""
        return tuple(i for i, s in enumerate(self.gap_pattern) if s == KEEP)

    @property
    def gap_slots(self) -> FrozenSet[int]:
        return frozenset(i for i, s in enumerate(self.gap_pattern) if s == GAP)

    @property
    def is_triadic(self) -> bool:
        return (self.p, self.q, self.r) == (2, 1, 3)

    def branch_index(self, slot: int) -> int:
        """Rank of a retained slot among the retained slots (0..p-1)."""
        return self.keep_slots.index(slot)

    def keeps_before(self, slot: int) -> int:
        """Number of retained slots strictly left of `slot`."""
        return sum(1 for k in self.keep_slots if k < slot)

    def to_json(self) -> str:
        return self.model_dump_json()

    @classmethod
    def from_json(cls, text: str) -> "IfsSpec":
        try:
            return cls.model_validate_json(text)
        except ValidationError as e:
            raise SpecValidationError(_first_message(e)) from e


class IntervalKind(str, Enum):
    RETAINED = "retained"
    GAP = "gap"


@dataclass(frozen=True, order=True)
class RationalInterval:
    lo: Fraction
    hi: Fraction
    kind: IntervalKind = IntervalKind.RETAINED

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi <= 1:
            raise DomainError(f"interval [{self.lo}, {self.hi}] not inside [0, 1]")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def interior_contains(self, x) -> bool:
        return self.lo < x < self.hi


@dataclass(frozen=True)
class CantorApproximation:
    """
    Level-n approximation: p^n retained intervals F_nk of length r^-n and all
    gaps I_nk deleted at levels 1..n, both sorted left to right.
    """

    spec: IfsSpec
    level: int
    retained: Tuple[RationalInterval, ...]
    gaps: Tuple[RationalInterval, ...] = field(default_factory=tuple)

    @property
    def retained_length(self) -> Fraction:
        return sum((iv.length for iv in self.retained), Fraction(0))


# Membership outcomes
@dataclass(frozen=True)
class InC:
    proof: str  # "periodic" or "terminating"


@dataclass(frozen=True)
class InGapAt:
    level: int
    gap: RationalInterval


@dataclass(frozen=True)
class UndecidedAt:
    max_level: int


Membership = Union[InC, InGapAt, UndecidedAt]


def _first_message(error: ValidationError) -> str:
    msg = error.errors()[0].get("msg", str(error))
    return msg.removeprefix("Value error, ")


def default_pattern(p: int, q: int) -> List[str]:
    """
    Spread q deletions over the p-1 openings between retained slots,
    round-robin from the left (so q < p gives alternating keep/gap from slot 2).
    """
    if p < 2:
        raise SpecValidationError(f"cannot retain both ends with p={p}")
    openings = p - 1
    pattern = [KEEP]
    for i in range(openings):
        width = q // openings + (1 if i < q % openings else 0)
        pattern.extend([GAP] * width)
        pattern.append(KEEP)
    return pattern


def make_spec(p: int, q: int, r: int, gap_pattern: Optional[Sequence] = None) -> IfsSpec:
    """
    Build a validated IfsSpec.

    Args:
        p: Retained intervals per step
        q: Deleted open intervals per step
        r: Subdivision count, must equal p + q
        gap_pattern: Optional keep/gap flags of length r. If None, the deletions
            are spread between the retained ends.

    Returns:
        IfsSpec
    """
    if p + q != r:
        raise SpecValidationError("p+q must equal r")
    if gap_pattern is None:
        gap_pattern = default_pattern(p, q)
    try:
        return IfsSpec(p=p, q=q, r=r, gap_pattern=tuple(gap_pattern))
    except ValidationError as e:
        raise SpecValidationError(_first_message(e)) from e


def triadic() -> IfsSpec:
    """The middle-thirds Cantor set, f1(x) = x/3, f2(x) = (x+2)/3."""
    return make_spec(2, 1, 3)


def load_spec(path: str) -> IfsSpec:
    """Read an IfsSpec from a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise SpecValidationError(f"cannot read spec {path}: {e}") from e
    return IfsSpec.from_json(text)


def hausdorff_dimension(spec: IfsSpec, precision_digits: Optional[int] = None) -> Real:
    """s = log p / log r (exact when p is a rational power of r)."""
    return log_ratio(Fraction(spec.p), Fraction(spec.r), precision_digits)


def similitudes(spec: IfsSpec) -> List[Tuple[Fraction, Fraction]]:
    """The p maps f_i(x) = (x + c_i)/r as (scale, offset) pairs, left to right."""
    return [(Fraction(1, spec.r), Fraction(slot, spec.r)) for slot in spec.keep_slots]


def apply_similitudes(spec: IfsSpec, intervals: Sequence[RationalInterval]) -> List[RationalInterval]:
    """One IFS step: the union of f_i(intervals), sorted."""
    out = [
        RationalInterval(scale * iv.lo + offset, scale * iv.hi + offset, iv.kind)
        for scale, offset in similitudes(spec)
        for iv in intervals
    ]
    return sorted(out, key=lambda iv: (iv.lo, iv.hi))


def check_cap(spec: IfsSpec, n: int, cap: Optional[int] = None) -> None:
    if cap is None:
        cap = get_settings().MAX_INTERVALS
    if spec.p**n > cap:
        raise ResourceCapError(
            f"level {n} needs {spec.p}^{n} = {spec.p ** n} intervals, above the cap of {cap}"
        )


def _split(spec: IfsSpec, iv: RationalInterval) -> Tuple[List[RationalInterval], List[RationalInterval]]:
    """Subdivide one retained interval into its retained children and merged gaps."""
    width = iv.length / spec.r
    children = [
        RationalInterval(iv.lo + slot * width, iv.lo + (slot + 1) * width)
        for slot in spec.keep_slots
    ]
    gaps = []
    slot = 0
    while slot < spec.r:
        if spec.gap_pattern[slot] == GAP:
            start = slot
            while slot < spec.r and spec.gap_pattern[slot] == GAP:
                slot += 1
            gaps.append(RationalInterval(iv.lo + start * width, iv.lo + slot * width, IntervalKind.GAP))
        else:
            slot += 1
    return children, gaps


def level(spec: IfsSpec, n: int, cap: Optional[int] = None) -> CantorApproximation:
    """
    Construct the level-n approximation with exact endpoints.

    Args:
        spec: IFS spec
        n: Level (>= 0)
        cap: Maximum retained intervals. If None, uses Settings.MAX_INTERVALS.

    Returns:
        CantorApproximation
    """
    if n < 0:
        raise DomainError(f"level must be >= 0, got {n}")
    check_cap(spec, n, cap)

    retained = [RationalInterval(Fraction(0), Fraction(1))]
    gaps: List[RationalInterval] = []
    for _ in range(n):
        next_retained = []
        for iv in retained:
            children, new_gaps = _split(spec, iv)
            next_retained.extend(children)
            gaps.extend(new_gaps)
        retained = next_retained

    gaps.sort(key=lambda iv: iv.lo)
    logger.debug(f"level {n}: {len(retained)} retained, {len(gaps)} gaps")
    return CantorApproximation(spec=spec, level=n, retained=tuple(retained), gaps=tuple(gaps))


def retained_interval(spec: IfsSpec, k: int, j: int) -> RationalInterval:
    """
    The j-th (1-based) retained level-k interval, from the base-p digits of j-1.
    """
    if k < 0:
        raise DomainError(f"level must be >= 0, got {k}")
    if not 1 <= j <= spec.p**k:
        raise DomainError(f"j={j} outside 1..{spec.p ** k}")

    index = j - 1
    branches = []
    for _ in range(k):
        branches.append(index % spec.p)
        index //= spec.p
    branches.reverse()

    lo = Fraction(0)
    for i, b in enumerate(branches, start=1):
        lo += Fraction(spec.keep_slots[b], spec.r**i)
    return RationalInterval(lo, lo + Fraction(1, spec.r**k))


def is_canonical(spec: IfsSpec, iv: RationalInterval) -> Optional[int]:
    """
    Level m when `iv` is a retained level-m interval, else None.
    """
    length = iv.length
    if length <= 0 or length.numerator != 1:
        return None
    m = 0
    den = length.denominator
    while den % spec.r == 0:
        den //= spec.r
        m += 1
    if den != 1:
        return None

    scaled = iv.lo * spec.r**m
    if scaled.denominator != 1:
        return None
    index = scaled.numerator
    for _ in range(m):
        if spec.gap_pattern[index % spec.r] != KEEP:
            return None
        index //= spec.r
    return m


def expansion(spec: IfsSpec, x, count: int) -> DigitSequence:
    """Base-r digits of x, preferring the representation that avoids gap slots."""
    return digits_base_r(Fraction(x), spec.r, count, avoid=spec.gap_slots)


def gap_at(spec: IfsSpec, prefix: Sequence[int], slot: int) -> RationalInterval:
    """Merged gap containing `slot` inside the retained interval addressed by `prefix`."""
    i = len(prefix) + 1
    lo = Fraction(0)
    for depth, d in enumerate(prefix, start=1):
        lo += Fraction(d, spec.r**depth)
    start = slot
    while start > 0 and spec.gap_pattern[start - 1] == GAP:
        start -= 1
    end = slot
    while end + 1 < spec.r and spec.gap_pattern[end + 1] == GAP:
        end += 1
    width = Fraction(1, spec.r**i)
    return RationalInterval(lo + start * width, lo + (end + 1) * width, IntervalKind.GAP)


def membership(spec: IfsSpec, x, max_level: int) -> Membership:
    """
    Decide whether x lies in the Cantor set.

    Returns:
        InC when every digit of an exact expansion is a retained slot,
        InGapAt(level, gap) for the first (largest) deleted interval containing x,
        UndecidedAt(max_level) when neither is settled within max_level digits
    """
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise DomainError(f"x={x} outside [0, 1]")

    d = expansion(spec, x, max(max_level, 1))
    prefix: List[int] = []
    for i, digit in d.iter_digits(max_level):
        if digit in spec.gap_slots:
            return InGapAt(i, gap_at(spec, prefix, digit))
        prefix.append(digit)

    if d.exact and not any(digit in spec.gap_slots for digit in d.digits):
        return InC("periodic" if d.repeating_suffix else "terminating")
    return UndecidedAt(max_level)


def is_member(spec: IfsSpec, x, max_level: int = 64) -> bool:
    return isinstance(membership(spec, x, max_level), InC)

