import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from heisenlat import geometry, moments


def test_constants():
    c3, g3 = moments.second_moment_constants(3)
    assert c3 == Fraction(2047, 11)
    assert moments.second_moment_constants(4)[0] == Fraction(32767, 15)
    assert g3 == pytest.approx(2047 / 22 * (math.pi**2 / 4) ** 2, rel=1e-15)
    assert g3 == pytest.approx(566.4670720073948, rel=1e-15)
    with mpmath.workdps(50):
        ref = mpmath.mpf(2047) / 22 * (mpmath.pi**2 / 4) ** 2
    assert abs(g3 - float(ref)) / float(ref) < 1e-12


def test_constants_reject_small_q():
    with pytest.raises(ValueError):
        moments.second_moment_constants(2)


def test_single_piece_closed_form():
    # below the first lattice jump beyond the origin the count is 1, so
    # integrate (1 - c x^p)^2 on [X, 2X] with 2X < 1 against the expansion
    q, X = 3, Fraction(1, 4)
    c, p = geometry.ball_volume(q), 2 * q + 2
    a, b = float(X), float(2 * X)
    val = (b - a) - 2 * c * (b ** (p + 1) - a ** (p + 1)) / (p + 1) \
        + c * c * (b ** (2 * p + 1) - a ** (2 * p + 1)) / (2 * p + 1)
    assert moments.mean_square_exact(q, X) == pytest.approx(val / a, rel=1e-13)


def test_q3_X4_against_quadrature():
    a = moments.mean_square_exact(3, 4)
    b = moments.mean_square_quadrature(3, 4)
    assert abs(a - b) / b <= 1e-9


@given(st.sampled_from([3, 4, 5]), st.integers(4, 24))
def test_additivity(q, k):
    X = Fraction(k, 4)
    whole = moments.mean_square_integral(q, X, 2 * X)
    parts = moments.mean_square_integral(q, X, Fraction(3, 2) * X) \
        + moments.mean_square_integral(q, Fraction(3, 2) * X, 2 * X)
    assert parts == pytest.approx(whole, rel=1e-12)


def test_threads_do_not_change_result(monkeypatch):
    monkeypatch.setattr(moments, "BLOCK", 1 << 12)
    a = moments.mean_square_exact(3, 9, threads=1)
    b = moments.mean_square_exact(3, 9, threads=4)
    assert a == b


def test_mean_square_nonnegative():
    assert moments.mean_square_exact(5, Fraction(3, 2)) >= 0


def test_bad_interval():
    with pytest.raises(ValueError):
        moments.mean_square_integral(3, 2, 1)


@pytest.fixture(scope="module")
def series3():
    return moments.singular_series(3, tol=1e-6)


def test_series_anchor(series3):
    s = series3
    assert s.branch == "odd"
    assert s.schedule_gap <= 1e-6
    assert s.value == pytest.approx(17.950252601555498, abs=2e-6)
    assert s.tail_bound >= 0
    assert abs(s.tail_estimate) < s.tail_bound


def test_series_terms_nonnegative_and_partial_monotone():
    W, total = moments._weights_dmajor(3, 4096)
    assert np.all(W >= 0)
    W2, total2 = moments._weights_dmajor(3, 8192)
    assert total2 >= total


def test_series_zero_for_non_sums_of_squares():
    W, _ = moments._weights_dmajor(3, 1000)
    for m in (3, 6, 7, 11, 12, 14, 15, 19, 21):
        assert W[m] == 0


def test_series_unreachable_tol():
    from heisenlat.errors import CapacityError
    with pytest.raises(CapacityError):
        moments.singular_series(3, tol=1e-15, M0=1 << 12, M_cap=1 << 14)


def test_report_shape(series3):
    reps = moments.moment_report(3, [6, 8], series3)
    assert [r.X for r in reps] == [6.0, 8.0]
    for r in reps:
        assert r.ratio > 0 and r.mean_square >= 0
        assert r.prediction == pytest.approx(566.4670720073948 * series3.value * r.X**10)


def test_report_requires_ascending(series3):
    with pytest.raises(ValueError):
        moments.moment_report(3, [8, 6], series3)


def test_loglog_slope():
    xs = [1, 2, 4, 8]
    assert moments.loglog_slope(xs, [3 * x**10 for x in xs]) == pytest.approx(10)
