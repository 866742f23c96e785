import random
from fractions import Fraction

import hypothesis.strategies as st
import mpmath
import pytest
from hypothesis import given, settings as hyp_settings

from services.cantor_service import IntervalKind, level, make_spec
from services.staircase_service import (
    cantor_function,
    inverse_staircase,
    product_function,
    sample_staircase,
    staircase_increment,
    staircase_real,
    staircase_value,
)
from utils.errors import DomainError

F = Fraction


@pytest.mark.parametrize(
    "x, y",
    [(F(0), F(0)), (F(1), F(1)), (F(1, 3), F(1, 2)), (F(2, 3), F(1, 2)), (F(1, 2), F(1, 2)), (F(1, 4), F(1, 3)), (F(3, 4), F(2, 3))],
)
def test_triadic_values(triadic, x, y):
    value = cantor_function(triadic, x)
    assert value.exact
    assert value.y == y


def test_quintic_gap_values(quintic):
    assert staircase_value(quintic, F(1, 5)) == F(1, 3)
    assert staircase_value(quintic, F(3, 10)) == F(1, 3)
    assert staircase_value(quintic, F(3, 5)) == F(2, 3)


def test_rejects_outside_unit_interval(triadic):
    with pytest.raises(DomainError):
        cantor_function(triadic, F(5, 4))


@given(st.integers(min_value=1, max_value=4), st.data())
def test_constant_on_gaps(n, data):
    spec = make_spec(2, 1, 3)
    gap = data.draw(st.sampled_from(level(spec, n).gaps))
    t = data.draw(st.fractions(min_value=0, max_value=1, max_denominator=40))
    x = gap.lo + t * gap.length
    assert staircase_value(spec, x) == staircase_value(spec, gap.lo) == staircase_value(spec, gap.hi)


def test_monotone_on_grid(triadic):
    ys = [v.y for v in sample_staircase(triadic, 82)]
    assert all(a <= b for a, b in zip(ys, ys[1:]))
    assert ys[0] == 0 and ys[-1] == 1


@pytest.mark.parametrize("k", range(1, 7))
def test_increment_law(triadic, quintic, k):
    for spec in (triadic, quintic):
        for j in range(1, spec.p**k + 1):
            assert staircase_increment(spec, k, j) == F(1, spec.p**k)


def test_increment_needs_positive_level(triadic):
    with pytest.raises(DomainError):
        staircase_increment(triadic, 0, 1)


def test_inverse_of_gap_value(triadic):
    iv = inverse_staircase(triadic, F(1, 2))
    assert (iv.lo, iv.hi, iv.kind) == (F(1, 3), F(2, 3), IntervalKind.GAP)
    iv = inverse_staircase(triadic, F(1, 4))
    assert (iv.lo, iv.hi) == (F(1, 9), F(2, 9))


def test_inverse_of_non_dyadic_value(triadic):
    iv = inverse_staircase(triadic, F(1, 3))
    assert (iv.lo, iv.hi) == (F(1, 4), F(1, 4))
    assert inverse_staircase(triadic, 0).hi == 0
    assert inverse_staircase(triadic, 1).lo == 1


@hyp_settings(deadline=None)
@given(st.fractions(min_value=0, max_value=1, max_denominator=200))
def test_inverse_lands_on_value(y):
    spec = make_spec(2, 1, 3)
    iv = inverse_staircase(spec, y)
    assert staircase_value(spec, iv.lo) == y
    assert staircase_value(spec, iv.hi) == y


def test_product_function(triadic):
    assert product_function(triadic, F(1, 3)) == F(1, 6)
    assert product_function(triadic, F(1, 2)) == F(1, 4)


def test_sample_grid(triadic):
    samples = sample_staircase(triadic, 3)
    assert [(v.x, v.y) for v in samples] == [(0, 0), (F(1, 2), F(1, 2)), (1, 1)]
    with pytest.raises(DomainError):
        sample_staircase(triadic, 1)


def test_real_evaluation(triadic):
    with mpmath.workdps(30):
        assert abs(staircase_real(triadic, mpmath.mpf("0.25")) - mpmath.mpf(1) / 3) < mpmath.mpf(10) ** -15
        assert staircase_real(triadic, mpmath.mpf("0.5")) == mpmath.mpf("0.5")
        assert staircase_real(triadic, 1) == 1
    with pytest.raises(DomainError):
        staircase_real(triadic, 2)


@given(
    x=st.fractions(min_value=0, max_value=1, max_denominator=500),
    spec=st.sampled_from([make_spec(2, 1, 3), make_spec(3, 2, 5)]),
)
def test_self_similarity(x, spec):
    y = staircase_value(spec, x)
    assert staircase_value(spec, x / spec.r) == y / spec.p
    last = spec.keep_slots[-1]
    assert staircase_value(spec, (x + last) / spec.r) == (spec.p - 1 + y) / spec.p


@given(
    a=st.fractions(min_value=0, max_value=1, max_denominator=1000),
    b=st.fractions(min_value=0, max_value=1, max_denominator=1000),
)
def test_monotone_on_random_pairs(a, b):
    spec = make_spec(2, 1, 3)
    lo, hi = sorted((a, b))
    assert staircase_value(spec, lo) <= staircase_value(spec, hi)


def test_monotone_on_ten_thousand_seeded_pairs(triadic):
    rng = random.Random(7)
    for _ in range(10_000):
        den = rng.randint(1, 200)
        lo, hi = sorted((F(rng.randint(0, den), den), F(rng.randint(0, den), den)))
        assert staircase_value(triadic, lo) <= staircase_value(triadic, hi)


@given(st.integers(min_value=1, max_value=6), st.data())
def test_rise_over_retained_interval_is_scaled_run(k, data):
    for spec in (make_spec(2, 1, 3), make_spec(3, 2, 5)):
        iv = data.draw(st.sampled_from(level(spec, k).retained))
        rise = staircase_value(spec, iv.hi) - staircase_value(spec, iv.lo)
        assert rise == F(spec.r**k, spec.p**k) * iv.length == F(1, spec.p**k)
