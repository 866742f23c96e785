from fractions import Fraction

import mpmath
import pytest

from services.calculus_service import (
    corrected_integral,
    corrected_integral_sequence,
    inversion_hop,
    locally_constant_check,
    mvt_residual,
    scale_derivative,
    valuation_derivative_check,
    valued_scale,
)
from services.function_catalog import absolute, logsq, power
from services.numeric_service import to_mpf
from services.valuation_service import Scale
from utils.errors import DomainError

F = Fraction


def wobble(x):
    return mpmath.exp(mpmath.sin(mpmath.log(x)))


@pytest.mark.parametrize("a", [F(-2), F(1, 2), F(3)])
def test_power_laws(a):
    result = scale_derivative(power(a), F(1, 5), mpmath.mpf("1e-4"))
    assert abs(result.value - to_mpf(a)) < mpmath.mpf("1e-6")
    assert result.error is None


def test_constant_has_zero_derivative():
    result = scale_derivative(lambda x: mpmath.mpf(5), F(1, 3))
    assert abs(result.value) < mpmath.mpf("1e-20")


@pytest.mark.parametrize("x", ["1e-6", "-1e-6"])
def test_absolute_value_is_smooth_in_log(x):
    result = scale_derivative(absolute(), mpmath.mpf(x))
    assert abs(result.value - 1) < mpmath.mpf("1e-6")
    assert result.two_sided_gap < mpmath.mpf("1e-6")


def test_central_difference_error_is_quadratic():
    x = F(1, 2)
    with mpmath.workdps(40):
        exact = mpmath.cos(mpmath.log(mpmath.mpf("0.5")))
    coarse = abs(scale_derivative(wobble, x, mpmath.mpf("0.01")).value - exact)
    fine = abs(scale_derivative(wobble, x, mpmath.mpf("0.005")).value - exact)
    assert 3.9 < coarse / fine < 4.1


def test_ridders_extrapolation():
    with mpmath.workdps(40):
        exact = mpmath.cos(mpmath.log(mpmath.mpf("0.5")))
    result = scale_derivative(wobble, F(1, 2), mpmath.mpf("0.1"), richardson=True)
    assert result.error is not None
    assert abs(result.value - exact) < mpmath.mpf("1e-12")


def test_derivative_domain():
    with pytest.raises(DomainError):
        scale_derivative(power(F(2)), 0)
    with pytest.raises(DomainError):
        scale_derivative(power(F(2)), F(1, 2), 0)
    with pytest.raises(DomainError):
        scale_derivative(lambda x: mpmath.mpf(-1), F(1, 2))


def test_staircase_locally_constant(triadic):
    report = locally_constant_check(triadic, 2)
    assert report.max_variation == 0
    assert report.gap_values == (F(1, 4), F(1, 2), F(3, 4))
    assert report.jumps == (F(1, 4),) * 4
    assert report.distinct_values == 3


@pytest.mark.parametrize("n", range(1, 7))
def test_variation_vanishes_at_every_level(triadic, n):
    report = locally_constant_check(triadic, n)
    assert report.max_variation == 0
    assert report.gap_values == tuple(F(j, 2**n) for j in range(1, 2**n))


def test_local_constancy_level_domain(triadic):
    with pytest.raises(DomainError):
        locally_constant_check(triadic, 0)


def test_valuation_derivative_is_one():
    samples = valuation_derivative_check(Scale(F(1, 3)), [F(1, 9), F(1, 3), F(1, 2)])
    interior, boundary, outside = samples
    assert interior.valid and not interior.one_sided
    assert abs(interior.value - 1) < mpmath.mpf("1e-20")
    assert boundary.one_sided
    assert abs(boundary.value - 1) < mpmath.mpf("1e-20")
    assert not outside.valid and outside.value is None
    assert interior.base == "log_{1/eps}"


def test_mvt_power_law_is_exact():
    f = power(F(3))
    with mpmath.workdps(40):
        g = mpmath.mpf("0.3")
        x = mpmath.mpf("0.5") * mpmath.exp(g)
    assert mvt_residual(f, F(1, 2), x, g) < mpmath.mpf("1e-20")
    assert mvt_residual(f, F(1, 2), F(1, 2), 0) < mpmath.mpf("1e-20")


def test_mvt_remainder_is_quadratic():
    f = logsq()
    with mpmath.workdps(40):
        g = mpmath.mpf("0.01")
        far = mpmath.mpf("0.5") * mpmath.exp(g)
        near = mpmath.mpf("0.5") * mpmath.exp(g / 2)
    ratio = mvt_residual(f, F(1, 2), far, g) / mvt_residual(f, F(1, 2), near, g / 2)
    assert 3.5 <= ratio <= 4.5


def test_corrected_integral():
    assert corrected_integral(F(1, 1000), 0).value == F(999, 1000)
    assert corrected_integral(F(1, 1000), F(1, 2)).value == F(1499, 1000)
    real = corrected_integral(F(1, 10), mpmath.mpf("0.5")).value
    with mpmath.workdps(40):
        assert abs(real - to_mpf(F(7, 5))) < mpmath.mpf("1e-25")


def test_corrected_integral_domain():
    with pytest.raises(DomainError):
        corrected_integral(F(1), F(1, 2))
    with pytest.raises(DomainError):
        corrected_integral(F(1, 10), F(-1, 2))


def test_corrected_integral_sequence_tends_to_one_plus_v():
    results = corrected_integral_sequence([F(1, 10), F(1, 100), F(1, 1000)], F(1, 2))
    assert [r.value for r in results] == [F(14, 10), F(149, 100), F(1499, 1000)]


def test_valued_scale_and_hop():
    assert valued_scale(F(1, 9), F(1, 2)) == F(1, 27)
    assert inversion_hop(F(1, 4), F(1, 2)) == F(1, 2)
    with pytest.raises(DomainError):
        inversion_hop(F(1, 4), 1)
    with pytest.raises(DomainError):
        valued_scale(F(3, 2), F(1, 2))
