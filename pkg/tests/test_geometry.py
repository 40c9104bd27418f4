import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from heisenlat import geometry as g
from heisenlat.errors import CapacityError

ints = st.integers(-20, 20)


def point(q):
    return st.builds(lambda v, w: g.HeisenbergPoint(tuple(v), w),
                     st.lists(ints, min_size=2 * q, max_size=2 * q), ints)


def test_norm_examples():
    e1 = (1, 0, 0, 0, 0, 0)
    assert g.ck_norm(g.HeisenbergPoint((0,) * 6, 1)) == 1
    assert g.ck_norm(g.HeisenbergPoint(e1, 1)) == pytest.approx(2**0.25)
    assert g.ck_norm(g.HeisenbergPoint(e1, 0)) == 1


def test_odd_length_rejected():
    with pytest.raises(ValueError):
        g.HeisenbergPoint((1, 2, 3), 0)


@given(point(3), st.floats(0.1, 10))
def test_norm_is_homogeneous(p, x):
    assert g.ck_norm(g.dilate(p, x)) == pytest.approx(x * g.ck_norm(p), rel=1e-12)


@given(point(2), point(2), point(2))
def test_group_law_associative(a, b, c):
    assert g.group_mul(g.group_mul(a, b), c) == g.group_mul(a, g.group_mul(b, c))


@given(point(3))
def test_group_inverse(p):
    inv = g.HeisenbergPoint(tuple(-c for c in p.v), -p.w)
    assert g.group_mul(p, inv) == g.HeisenbergPoint((0,) * 6, 0)


def test_volume_q3_closed_form():
    assert g.ball_volume(3) == pytest.approx(math.pi**4 / 16, rel=1e-15)


@pytest.mark.parametrize("q", range(3, 9))
def test_volume_oracles(q):
    v = g.ball_volume(q)
    assert g.ball_volume_quadrature(q) == pytest.approx(v, rel=1e-10)
    with mpmath.workdps(30):
        ref = mpmath.quad(lambda r: 4 * mpmath.pi**q / mpmath.gamma(q) * r ** (2 * q - 1)
                          * mpmath.sqrt(1 - r**4), [0, 1])
    assert float(g.ball_volume_mp(q)) == pytest.approx(float(ref), rel=1e-14)
    assert v == pytest.approx(float(ref), rel=1e-14)


def test_volume_monte_carlo():
    est, se = g.ball_volume_montecarlo(3, n=2_000_000, seed=1)
    assert abs(est - g.ball_volume(3)) < 5 * se


@pytest.mark.parametrize("x,want", [(1, 15), (0.5, 1), (2, 1565)])
def test_brute_examples(x, want):
    assert g.brute_force_count(3, x) == want


def test_naive_matches_brute():
    for t in range(1, 4):
        assert g.brute_force_count_naive(2, 0, x4=t) == g.brute_force_count(2, 0, x4=t)
    assert g.brute_force_count_naive(3, 1) == 15


def test_naive_refuses_large():
    with pytest.raises(CapacityError):
        g.brute_force_count_naive(5, 3)


@given(st.fractions(min_value=0, max_value=50, max_denominator=16))
def test_quartic_exact(x):
    assert g.quartic(x) == x**4
    assert g.quartic_floor(x) == math.floor(x**4)
