"""
Cantor Reproduction Pipeline
Batch run of the headline checks on the triadic Cantor set: dimension, measure identity,
valued zero-sets, staircase increments, ultrametric axioms, local constancy, dimension
selection and the scale-invariant calculus.
"""

import sys
from fractions import Fraction
from typing import Callable, List, Tuple

import mpmath

from config.settings import get_settings
from services.calculus_service import corrected_integral, locally_constant_check, mvt_residual, scale_derivative
from services.cantor_service import hausdorff_dimension, level, triadic
from services.function_catalog import absolute, logsq, power
from services.measure_service import level_sum, measure_convergence_table, whole_set
from services.numeric_service import GUARD_DIGITS, to_mpf
from services.run_logger import run_logger
from services.staircase_service import staircase_increment
from services.valuation_service import (
    Scale,
    infinitesimal_valuation,
    interval_norm,
    random_admissible_pairs,
    ultrametric_axiom_report,
    valued_zero_set,
)

AXIOM_SCALES = (Fraction(1, 3), Fraction(1, 9), Fraction(1, 100))
AXIOM_PAIRS = 10_000
RECONSTRUCTION_SAMPLES = 1_000


def check_dimension() -> Tuple[bool, str]:
    prec = get_settings().PRECISION_DIGITS
    s = hausdorff_dimension(triadic())
    with mpmath.workdps(prec + GUARD_DIGITS):
        error = abs(to_mpf(s) - mpmath.log(2) / mpmath.log(3))
        ok = error <= mpmath.mpf(10) ** -25
    return ok, f"s = {mpmath.nstr(s, 20)}, error {mpmath.nstr(error, 3)}"


def check_measure_identity() -> Tuple[bool, str]:
    rows = measure_convergence_table(triadic(), whole_set(), 12)
    ok = len(rows) == 12 and all(r.mu_s_sum == 1 and r.mu_v_sum == 1 and r.ratio == 1 for r in rows)
    return ok, f"mu_s = mu_v = 1 for n = 1..{len(rows)}"


def check_zero_sets() -> Tuple[bool, str]:
    spec = triadic()
    z1 = valued_zero_set(spec, 1)
    z2 = valued_zero_set(spec, 2)
    gaps = [(g.lo, g.hi) for g in level(spec, 2).gaps]
    ok = (
        z1.values == (Fraction(1, 2),)
        and z2.values == (Fraction(1, 4), Fraction(2, 4), Fraction(3, 4))
        and gaps == [
            (Fraction(1, 9), Fraction(2, 9)),
            (Fraction(3, 9), Fraction(6, 9)),
            (Fraction(7, 9), Fraction(8, 9)),
        ]
        and interval_norm(spec, 2) == Fraction(1, 4)
    )
    return ok, "0_1 = {0, 1/2}, 0_2 = {0, 1/4, 2/4, 3/4}, ||F_2i|| = 1/4"


def check_increments() -> Tuple[bool, str]:
    spec = triadic()
    checked = 0
    for k in range(1, 11):
        for j in range(1, 2**k + 1):
            if staircase_increment(spec, k, j) != Fraction(1, 2**k):
                return False, f"increment at k={k}, j={j}"
            checked += 1
    return True, f"{checked} intervals, k = 1..10"


def check_ultrametric(pairs: int) -> Tuple[bool, str]:
    prec = get_settings().PRECISION_DIGITS
    for eps in AXIOM_SCALES:
        scale = Scale(eps)
        report = ultrametric_axiom_report(scale, random_admissible_pairs(scale, pairs, seed=1))
        if not report.all_pass or report.invalid_count:
            return False, f"scale {eps}: {len(report.failures())} failure(s), {report.invalid_count} invalid"

        worst = mpmath.mpf(0)
        for x1, _ in random_admissible_pairs(scale, RECONSTRUCTION_SAMPLES, seed=2):
            vi = infinitesimal_valuation(x1, scale, prec)
            with mpmath.workdps(prec + GUARD_DIGITS):
                worst = max(worst, abs(to_mpf(vi.reconstruct(prec)) - to_mpf(x1)))
        if worst > mpmath.mpf(10) ** -28:
            return False, f"scale {eps}: reconstruction error {mpmath.nstr(worst, 3)}"
    return True, f"{pairs} pairs per scale, reconstruction within 1e-28"


def check_local_constancy() -> Tuple[bool, str]:
    spec = triadic()
    for n in range(1, 11):
        report = locally_constant_check(spec, n)
        if report.max_variation != 0:
            return False, f"level {n}: variation {report.max_variation}"
    distinct = len(set(valued_zero_set(spec, 1).full_set))
    return distinct >= 2, f"zero variation for n = 1..10, {distinct} distinct global values at n = 1"


def check_dimension_selection() -> Tuple[bool, str]:
    spec = triadic()
    with mpmath.workdps(get_settings().PRECISION_DIGITS + GUARD_DIGITS):
        s = to_mpf(hausdorff_dimension(spec))
        s_below, s_above = s - mpmath.mpf("0.05"), s + mpmath.mpf("0.05")
    below = [level_sum(spec, n, s_below) for n in range(1, 11)]
    above = [level_sum(spec, n, s_above) for n in range(1, 11)]
    ok = all(a < b for a, b in zip(below, below[1:])) and all(a > b for a, b in zip(above, above[1:]))
    return ok, "s - 0.05 diverges, s + 0.05 vanishes"


def check_calculus() -> Tuple[bool, str]:
    tol = mpmath.mpf("1e-6")
    for a in (Fraction(-2), Fraction(1, 2), Fraction(3)):
        res = scale_derivative(power(a), Fraction(1, 5), mpmath.mpf("1e-4"))
        if abs(res.value - to_mpf(a)) > tol:
            return False, f"d log x^{a} / d log x = {mpmath.nstr(res.value, 10)}"

    for x in (mpmath.mpf("1e-6"), mpmath.mpf("-1e-6")):
        if scale_derivative(absolute(), x).two_sided_gap > tol:
            return False, f"|x| two-sided gap at {x}"

    if corrected_integral(Fraction(1, 1000), Fraction(1, 2)).value != Fraction(1499, 1000):
        return False, "corrected integral"

    x0, g = Fraction(1, 2), mpmath.mpf("0.01")
    f = logsq()
    with mpmath.workdps(get_settings().PRECISION_DIGITS + GUARD_DIGITS):
        r_full = mvt_residual(f, x0, to_mpf(x0) * mpmath.exp(g), g)
        r_half = mvt_residual(f, x0, to_mpf(x0) * mpmath.exp(g / 2), g / 2)
        ratio = r_full / r_half
    ok = 3.5 <= ratio <= 4.5
    return ok, f"power laws, |x| gap, 1499/1000, halving ratio {mpmath.nstr(ratio, 6)}"


def main():
    """
    Run every check in order and stop at the first failure.

    Steps:
    1. Hausdorff dimension of the triadic set
    2. Measure identity mu_v = mu_s = 1 for n = 1..12
    3. Valued zero-sets at levels 1 and 2
    4. Staircase increment law
    5. Ultrametric axioms and valuation reconstruction
    6. Local constancy of the staircase
    7. Dimension selection
    8. Scale-invariant calculus
    """
    print("=" * 60)
    print("Cantor Reproduction Pipeline")
    print("=" * 60)

    quick = "--quick" in sys.argv
    pairs = AXIOM_PAIRS // 10 if quick else AXIOM_PAIRS
    if quick:
        print(f"\n[INFO] Quick run: {pairs} axiom pairs per scale (--quick flag)")

    run_logger.configure()
    steps: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
        ("Hausdorff dimension", check_dimension),
        ("Measure identity", check_measure_identity),
        ("Valued zero-sets", check_zero_sets),
        ("Staircase increments", check_increments),
        ("Ultrametric axioms", lambda: check_ultrametric(pairs)),
        ("Local constancy", check_local_constancy),
        ("Dimension selection", check_dimension_selection),
        ("Calculus", check_calculus),
    ]

    total = len(steps)
    for i, (name, check) in enumerate(steps, start=1):
        print(f"\n[{i}/{total}] {name}...")
        try:
            ok, details = check()
        except Exception as e:
            ok, details = False, f"{type(e).__name__}: {e}"
        run_logger.log_step(i, total, name, ok, details)
        if not ok:
            print(f"✗ {name} failed: {details}")
            return 1
        print(f"✓ {details}")

    print("\n" + "=" * 60)
    print("✓ Pipeline completed successfully")
    print("=" * 60)
    return 0


if __name__ == "__main__":
    sys.exit(main())
