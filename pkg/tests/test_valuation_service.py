from fractions import Fraction

import hypothesis.strategies as st
import mpmath
import pytest
from hypothesis import given, settings as hyp_settings

from services.cantor_service import make_spec
from services.numeric_service import to_mpf
from services.staircase_service import staircase_value
from services.valuation_service import (
    Scale,
    ValuationProfile,
    default_profile,
    infinitesimal_valuation,
    interval_norm,
    multiplicative_neighbors,
    neighbor_limit_construction,
    point_norm,
    random_admissible_pairs,
    real_like_limit,
    refine_values,
    separation_scale,
    sigma_neighbors,
    ultrametric_axiom_report,
    ultrametric_distance,
    valuation_exponent,
    valued_zero_set,
)
from utils.errors import DomainError

F = Fraction
TOL = mpmath.mpf(10) ** -25


def close(a, b, tol=TOL):
    with mpmath.workdps(50):
        return abs(to_mpf(a) - to_mpf(b)) <= tol


def test_scale_bounds():
    with pytest.raises(DomainError):
        Scale(F(1))
    with pytest.raises(DomainError):
        Scale(F(0))
    assert Scale("1/3").epsilon == F(1, 3)


def test_exact_valuation():
    vi = infinitesimal_valuation(F(1, 27), Scale(F(1, 9)))
    assert vi.v == F(1, 2)
    assert vi.is_exact
    assert vi.lambda_ == F(1, 3)
    assert vi.reconstruct() == F(1, 27)


def test_valuation_at_scale_and_below():
    scale = Scale(F(1, 9))
    assert infinitesimal_valuation(F(1, 9), scale).v == 0
    assert infinitesimal_valuation(F(1, 81), scale).v == 1


def test_valuation_domain():
    scale = Scale(F(1, 9))
    with pytest.raises(DomainError):
        infinitesimal_valuation(F(1, 8), scale)
    with pytest.raises(DomainError):
        infinitesimal_valuation(0, scale)


@given(
    eps=st.sampled_from([F(1, 3), F(1, 9), F(1, 100), F(2, 7)]),
    t=st.fractions(min_value=F(1, 10**6), max_value=1, max_denominator=10**6),
)
def test_reconstruction(eps, t):
    x = eps * t
    vi = infinitesimal_valuation(x, Scale(eps))
    assert close(vi.reconstruct(), x, mpmath.mpf(10) ** -28)


def test_axioms_on_examples():
    report = ultrametric_axiom_report(Scale(F(1, 3)), [(F(1, 27), F(1, 27)), (F(1, 9), F(1, 5))])
    assert report.all_pass
    assert report.invalid_count == 0

    boundary = ultrametric_axiom_report(Scale(F(1, 2)), [(F(1, 4), F(1, 4))])
    assert boundary.all_pass
    assert boundary.checks[0].positivity


def test_inadmissible_pairs_flagged():
    report = ultrametric_axiom_report(Scale(F(1, 3)), [(F(1, 5), F(1, 5)), (F(1, 9), F(1, 27))])
    assert report.invalid_count == 2
    assert report.all_pass
    assert not report.checks[0].passed
    assert "exceeds" in report.checks[0].note


def test_plain_multiplication_is_recorded_not_checked():
    report = ultrametric_axiom_report(Scale(F(1, 9)), [(F(1, 27), F(1, 27))])
    assert report.all_pass
    linear = report.checks[0].linear_scaling
    assert [alpha for alpha, _, _ in linear] == [F(1, 2), F(1, 2), F(3, 2), F(3, 2), F(3), F(3)]
    assert all(v == F(1, 2) for _, v, _ in linear)
    with mpmath.workdps(50):
        assert close(linear[0][2], mpmath.log(6) / mpmath.log(9))
        assert close(linear[2][2], mpmath.log(2) / mpmath.log(9))
    assert linear[4][2] == 0
    assert report.max_linear_drift == F(1, 2)


def test_plain_multiplication_skips_points_past_the_scale():
    report = ultrametric_axiom_report(Scale(F(1, 3)), [(F(1, 9), F(2, 9))], scaling_factors=(F(2),))
    linear = report.checks[0].linear_scaling
    assert len(linear) == 1
    assert linear[0][:2] == (F(2), F(1))


@hyp_settings(max_examples=25, deadline=None)
@given(
    eps=st.sampled_from([F(1, 3), F(1, 9), F(1, 100), F(2, 7)]),
    seed=st.integers(min_value=0, max_value=10**6),
)
def test_axioms_on_random_pairs(eps, seed):
    scale = Scale(eps)
    report = ultrametric_axiom_report(scale, random_admissible_pairs(scale, 20, seed=seed))
    assert report.invalid_count == 0
    assert report.all_pass


def test_zero_set_levels(triadic):
    assert valued_zero_set(triadic, 1).values == (F(1, 2),)
    z2 = valued_zero_set(triadic, 2)
    assert z2.values == (F(1, 4), F(1, 2), F(3, 4))
    assert z2.full_set == (0, F(1, 4), F(1, 2), F(3, 4))
    assert [(e.gap.lo, e.gap.hi) for e in z2.entries] == [(F(1, 9), F(2, 9)), (F(1, 3), F(2, 3)), (F(7, 9), F(8, 9))]


@pytest.mark.parametrize("n", range(1, 7))
def test_zero_set_matches_staircase(triadic, n):
    zs = valued_zero_set(triadic, n)
    assert zs.values == tuple(F(j, 2**n) for j in range(1, 2**n))
    for entry in zs.entries:
        assert entry.value == staircase_value(triadic, entry.gap.midpoint)
    assert set(valued_zero_set(triadic, n - 1).values if n > 1 else ()) <= set(zs.values)


def test_zero_set_other_p(quintic):
    zs = valued_zero_set(quintic, 1)
    assert zs.values == (F(1, 3), F(2, 3))
    assert zs.note


def test_zero_set_frame(triadic):
    df = valued_zero_set(triadic, 2).to_frame()
    assert list(df.columns) == ["level", "gap_lo", "gap_hi", "value"]
    assert list(df["value"]) == ["1/4", "1/2", "3/4"]


def test_refine_values():
    assert refine_values([]) == [F(1, 2)]
    assert refine_values([F(1, 2)]) == [F(1, 4), F(1, 2), F(3, 4)]


def test_interval_norm(triadic):
    assert interval_norm(triadic, 0) == 1
    assert interval_norm(triadic, 2) == F(1, 4)
    with pytest.raises(DomainError):
        interval_norm(triadic, -1)


def test_point_norm(triadic):
    assert point_norm(0, Scale(F(1, 9)), triadic) == F(1, 4)
    assert point_norm(F(1, 4), Scale(F(1, 3)), triadic) == F(1, 2)
    with mpmath.workdps(40):
        expected = mpmath.power(mpmath.mpf(1) / 2, mpmath.log(2) / mpmath.log(3))
    assert close(point_norm(0, Scale(F(1, 2)), triadic), expected)
    with pytest.raises(DomainError):
        point_norm(F(1, 2), Scale(F(1, 9)), triadic)


def test_point_norm_profiles(triadic):
    scale = Scale(F(1, 9))
    assert point_norm(0, scale, triadic, default_profile(triadic, scale)) == F(1, 4)
    profile = ValuationProfile(alpha_values=(F(2), F(1, 2)), s0=F(1), scale=scale)
    assert point_norm(0, scale, triadic, profile) == F(1, 18)
    with pytest.raises(DomainError):
        ValuationProfile(alpha_values=(F(0),), s0=F(1), scale=scale)


def test_multiplicative_neighbors():
    pair = multiplicative_neighbors(F(1, 2), F(1, 10))
    assert close(pair.x_plus, mpmath.mpf("0.46651649576840370"), mpmath.mpf(10) ** -15)
    with mpmath.workdps(50):
        product = pair.x_plus * pair.x_minus
    assert close(product, F(1, 4))
    same = multiplicative_neighbors(F(1, 2), 0)
    assert same.x_plus == same.x_minus == F(1, 2)
    with pytest.raises(DomainError):
        multiplicative_neighbors(F(3, 2), F(1, 10))


@given(
    x=st.fractions(min_value=F(1, 1000), max_value=F(999, 1000), max_denominator=1000),
    e=st.fractions(min_value=F(1, 100), max_value=F(9, 10), max_denominator=100),
)
def test_neighbors_bracket_point(x, e):
    pair = multiplicative_neighbors(x, e)
    with mpmath.workdps(40):
        assert to_mpf(pair.x_plus) < to_mpf(x) < to_mpf(pair.x_minus)


def test_sigma_neighbors():
    pair = sigma_neighbors(F(1, 2), F(9, 10), 1)
    assert pair.x_plus == F(9, 20)
    assert pair.x_minus == F(5, 9)
    with mpmath.workdps(40):
        assert close(pair.exponent, mpmath.log(mpmath.mpf("0.9")) / mpmath.log(mpmath.mpf("0.5")))
    with pytest.raises(DomainError):
        sigma_neighbors(F(1, 2), 0, 1)


def test_neighbor_limit_at_zero(triadic):
    limit = neighbor_limit_construction(triadic, 0, 3)
    assert (limit.x_minus, limit.x_plus) == (0, F(1, 27))
    assert limit.upper_gap == 1 and limit.staircase_upper_gap == 1
    assert limit.balanced
    assert close(limit.observed_j, 0)


def test_neighbor_limit_at_right_end(triadic):
    limit = neighbor_limit_construction(triadic, F(1, 3), 2)
    assert (limit.x_minus, limit.x_plus) == (F(2, 9), F(1, 3))
    assert limit.upper_gap == 0
    assert limit.staircase_lower_gap == 1
    assert limit.observed_j is None


def test_neighbor_limit_rejects_gap_point(triadic):
    with pytest.raises(DomainError):
        neighbor_limit_construction(triadic, F(1, 2), 2)


@given(st.lists(st.sampled_from([0, 2]), min_size=1, max_size=10), st.integers(min_value=1, max_value=6))
def test_neighbor_limit_balance(word, k):
    spec = make_spec(2, 1, 3)
    x = sum(F(d, 3**i) for i, d in enumerate(word, start=1))
    limit = neighbor_limit_construction(spec, x, k)
    assert limit.x_minus <= x <= limit.x_plus
    assert limit.balanced


def test_real_like_limit():
    values = real_like_limit(F(1, 2), [F(1, 2) + F(1, 10**k) for k in range(1, 7)])
    magnitudes = [abs(to_mpf(v)) for v in values]
    assert all(a > b for a, b in zip(magnitudes, magnitudes[1:]))
    assert magnitudes[-1] < mpmath.mpf("1e-5")


def test_valuation_exponent():
    assert valuation_exponent(F(1, 3), Scale(F(1, 9))) == F(1, 2)
    with pytest.raises(DomainError):
        valuation_exponent(0, Scale(F(1, 9)))


def test_separation(triadic):
    assert separation_scale(triadic, 0, F(1, 9)) == F(1, 9)
    assert ultrametric_distance(triadic, 0, F(1, 9)) == F(1, 4)
    assert ultrametric_distance(triadic, F(1, 4), F(1, 4)) == 0
    assert ultrametric_distance(triadic, 0, 1) == 1


@given(st.lists(st.lists(st.sampled_from([0, 2]), min_size=1, max_size=8), min_size=3, max_size=3))
def test_distance_is_ultrametric(words):
    spec = make_spec(2, 1, 3)
    x, y, z = (sum(F(d, 3**i) for i, d in enumerate(w, start=1)) for w in words)
    assert ultrametric_distance(spec, x, z) <= max(ultrametric_distance(spec, x, y), ultrametric_distance(spec, y, z))


def test_random_pairs_are_admissible():
    scale = Scale(F(1, 100))
    pairs = random_admissible_pairs(scale, 200, seed=7)
    assert pairs == random_admissible_pairs(scale, 200, seed=7)
    assert all(0 < a <= b and a + b <= scale.epsilon for a, b in pairs)


def test_undecided_points_are_rejected(triadic, settings):
    settings(DIGIT_SCAN_LIMIT=5)
    with pytest.raises(DomainError, match="not shown to lie in C"):
        point_norm(F(1, 82), Scale(F(1, 9)), triadic)
    with pytest.raises(DomainError, match="not shown to lie in C"):
        neighbor_limit_construction(triadic, F(1, 82), 3)
