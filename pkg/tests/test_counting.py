import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from heisenlat import budgets, counting as c, geometry as g

VOL3 = math.pi**4 / 16


@pytest.mark.parametrize("x,want", [(1, 15), (Fraction(9, 10), 1), (Fraction(1, 2), 1)])
def test_count_examples(x, want):
    assert c.fast_count(3, x=x) == want


def test_count_matches_brute_at_six():
    assert c.fast_count(3, x=6) == g.brute_force_count(3, 6)


@given(st.sampled_from([3, 4, 5]), st.fractions(min_value=0, max_value=200, max_denominator=7))
def test_count_matches_brute(q, t):
    assert c.fast_count(q, x4=t) == g.brute_force_count(q, 0, x4=t)


@given(st.integers(3, 5), st.integers(0, 3000), st.integers(0, 3000))
def test_count_monotone(q, a, b):
    lo, hi = sorted((a, b))
    assert c.fast_count(q, x4=lo) <= c.fast_count(q, x4=hi)


def test_error_term_anchors():
    s = c.error_term(3, x=1)
    assert s.count == 15
    assert s.main == pytest.approx(VOL3, rel=1e-15)
    assert s.err == pytest.approx(8.911931810374847, rel=1e-15)
    assert c.error_term(3, x=Fraction(1, 2)).err == pytest.approx(1 - VOL3 / 256, rel=1e-15)


def test_normalized_delta_anchor():
    assert c.normalized_delta(3, 1) == pytest.approx(-8.911931810374847 / 8, rel=1e-15)


@given(st.integers(3, 5), st.integers(1, 5000))
def test_error_decomposition(q, t):
    s = c.error_term(q, x4=t)
    assert s.count - s.main == pytest.approx(s.err, abs=4e-16 * max(1.0, s.main))


def test_error_keeps_digits_at_large_x():
    # the main term is about 6e14 here; err is computed at 50 digits before rounding
    t = 10**7 + 1
    s = c.error_term(3, x4=t)
    with mpmath.workdps(60):
        exact = s.count - g.ball_volume_mp(3, 60) * t**2  # x^8 = t^2
    assert s.err == pytest.approx(float(exact), rel=1e-12)


def test_scan_order_and_threads():
    ts = list(range(1, 300, 7))
    one = c.scan(3, ts, threads=1)
    many = c.scan(3, ts, threads=6)
    assert one == many
    assert [s.x4 for s in one] == ts


@pytest.mark.parametrize("q", [3, 4])
def test_jump_schedule_masses(q):
    T = 5000
    sched = c.JumpSchedule(q, T, block=777)
    counts = [c.fast_count(q, x4=t) for t in range(T + 1)]
    diffs = np.diff([0] + counts)
    got = np.zeros(T + 1, dtype=np.int64)
    for ts, ms in sched.blocks():
        got[ts] = ms
    assert np.array_equal(got, diffs)


def test_count_constant_between_jumps():
    assert c.fast_count(3, x4=Fraction(5, 2)) == c.fast_count(3, x4=2)
    assert c.fast_count(3, x4=Fraction(2999, 1000)) == c.fast_count(3, x4=2)


@pytest.mark.parametrize("q", range(3, 9))
def test_volume_assembly(q):
    assert c.volume_assembly(q) == pytest.approx(g.ball_volume(q), rel=1e-12)
    assert c.alpha_flat(q) == pytest.approx(c.alpha_flat_integral(q), rel=1e-12)


def test_weighted_sum_small_Y():
    w = c.weighted_sum(3, "S", Y=0.99)
    assert w.value == 1
    assert w.main == pytest.approx(math.pi**3 * 0.99**3 / 24)


@pytest.mark.parametrize("Y", [30, 100, 250, 390])
def test_weighted_sum_residual_budget(Y):
    w = c.weighted_sum(3, "S", Y=Y)
    assert abs(w.residual) <= budgets.get("weighted_C") * Y * math.log(Y)


def test_weighted_star_direct_summation():
    Y = 400.0
    r = c.rep_table(3, 20).r(3)
    direct = sum(int(r[m]) * (1 - m * m / Y) for m in range(21))
    assert c.weighted_sum(3, "S*", Y=Y, k=1).value == pytest.approx(direct, rel=1e-14)


@given(st.integers(3, 5), st.fractions(min_value=1, max_value=3000, max_denominator=5))
def test_slicing_decomposition(q, t):
    d = c.slicing_decomposition(q, x4=t)
    assert d["rhs"] == pytest.approx(d["count"], abs=1e-6 * d["count"] + 1e-6)


@pytest.mark.parametrize("kind", ["flat", "sharp"])
def test_flat_sharp_main_terms(kind):
    w = c.weighted_sum(3, kind, x4=40**4)
    assert abs(w.residual) / w.main < 1e-2
