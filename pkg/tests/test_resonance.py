import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heisenlat import budgets, resonance as rs
from heisenlat.arithmetic import xi_array
from heisenlat.errors import NotFound


@given(st.floats(1, 50), st.floats(-3, 3))
def test_fejer_nonnegative(P, w):
    assert rs.FejerKernel(P)(w) >= 0


def test_fejer_at_zero():
    assert rs.FejerKernel(7)(0.0) == 7


@pytest.mark.parametrize("P", [1, 3, 10, 40])
def test_fejer_mass(P):
    v = rs.fejer_integral(P)
    assert 1 - 2 / (math.pi**2 * P) <= v <= 1


def test_fejer_example():
    val, pred = rs.fejer_identity_check(10, 2, 0)
    assert pred == pytest.approx(0.8)
    assert abs(val - pred) <= 0.5 / 2


@pytest.mark.parametrize("P,theta,gamma", [(8, 3, 0.3), (12, 25, 0.0), (6, 6, 2.0), (15, 0.7, math.pi / 2)])
def test_fejer_budget(P, theta, gamma):
    val, pred = rs.fejer_identity_check(P, theta, gamma)
    assert abs(val - pred) <= budgets.get("fejer_C") / abs(theta)
    if abs(theta) >= P or gamma == math.pi / 2:
        assert pred == pytest.approx(0, abs=1e-15)


def test_fejer_theta_zero_rejected():
    with pytest.raises(ValueError):
        rs.fejer_identity_check(5, 0, 0)


def test_D0_anchor():
    assert rs.choose_D0(3) == 23
    for q in (3, 4, 5, 6):
        D0 = rs.choose_D0(q)
        assert rs.script_L(q, D0) > 0
        assert D0 == 2 or rs.script_L(q, D0 - 1) <= 0


def test_L_small_D_negative():
    assert rs.script_L(3, 1) <= 0


@pytest.mark.parametrize("q", [4, 6])
def test_L_limit_even(q):
    lim = rs.script_L_limit(q)
    D = 1000
    d = np.arange(1, D + 1)
    gap = 2 * math.pi / D * math.fsum(np.abs(xi_array(d, q)) / d.astype(float) ** (q - 1))
    # L(D) differs from its limit by the 2 pi / D term plus tails of order D^{-2}
    assert abs(rs.script_L(q, D) + gap - lim) < 1e-5
    assert abs(rs.script_L(q, 10**6) - lim) < 1e-5
    from mpmath import zeta
    assert lim >= 3 / 2**2.5 * float(zeta(q - 1))


def test_omega_q():
    assert rs.omega_q(3) == pytest.approx(4 * math.pi / 3, rel=1e-14)
    for q in range(3, 9):
        assert rs.omega_q(q) > 0
        assert rs.omega_q(q) == pytest.approx(rs.omega_q_quadrature(q), rel=1e-10)


@pytest.mark.parametrize("d,P", [(1, 100), (2, 500), (4, 300), (5, 700)])
def test_sqrt_sum_budget(d, P):
    main = rs.omega_q(3) * math.sqrt(P / d)
    assert abs(rs.sqrt_sum(3, d, P) - main) <= budgets.get("sqrt_sum_O1")


def test_resonance_set_example():
    assert rs.resonance_set(3, 2, 1) == [1, 2, 4]


def test_resonance_set_dedup_and_range():
    A = rs.resonance_set(3, 3, 4)
    assert len(A) == len(set(A))
    assert all(0 < s <= 9 for s in A)
    assert Fraction(4, 4) in A and A.count(Fraction(1)) == 1


@given(st.integers(1, 4), st.integers(1, 4))
def test_resonance_set_brute(P, D0):
    want = set()
    for d in range(1, D0 + 1):
        for a in range(-d * P, d * P + 1):
            for b in range(-d * P, d * P + 1):
                m = a * a + b * b
                if m and b % d == 0 and m <= d * d * P * P:
                    want.add(Fraction(m, d * d))
    assert set(rs.resonance_set(3, P, D0)) == want
    two_square = sum(1 for m in range(1, D0 * D0 * P * P + 1)
                     if any(math.isqrt(m - b * b) ** 2 == m - b * b for b in range(math.isqrt(m) + 1)))
    assert len(want) <= D0 * two_square


def test_dirichlet_integers():
    assert rs.dirichlet_search([Fraction(1), Fraction(4)], 7, 13, 100) == 13


def test_dirichlet_sqrt2():
    X = rs.dirichlet_search([Fraction(2)], 5, 1, 100)
    assert X == 2
    assert rs.dist_sqrt_times(Fraction(2), 5) <= 0.2
    brute = next(x for x in range(1, 100) if abs(math.sqrt(2) * x - round(math.sqrt(2) * x)) <= 0.2)
    assert X == brute


@given(st.lists(st.integers(2, 30), min_size=1, max_size=4), st.integers(2, 6))
def test_dirichlet_matches_scan(ms, D0):
    A = [Fraction(m) for m in ms]
    X = rs.dirichlet_search(A, D0, 1, 10**6)
    assert rs.max_violation(A, D0, X) <= 1e-9
    for y in range(1, min(X, 3000)):
        assert rs.max_violation(A, D0, y) > 0


def test_dirichlet_not_found():
    with pytest.raises(NotFound):
        rs.dirichlet_search([Fraction(2), Fraction(3), Fraction(5)], 1000, 1, 50)


def test_rational_lattice_point():
    A = [Fraction(1, 4), Fraction(9, 25), Fraction(2)]
    X = rs.rational_lattice_point(A, 7)
    assert X == 10
    assert rs.dist_sqrt_times(Fraction(1, 4), X) == 0 and rs.dist_sqrt_times(Fraction(9, 25), X) == 0


def test_certificate_small_P_runs():
    c = rs.omega_hunt(3, 1, X_cap=10**5)
    assert c.D0 == 23
    assert c.threshold == pytest.approx(0.5 * rs.omega_q(3) * rs.script_L(3, 23))
    assert c.status in ("PASS", "FAILED")
    if c.status == "PASS":
        assert c.max_violation <= 1e-9 and c.achieved >= c.threshold


@given(st.floats(1, 30), st.floats(0.02, 5), st.floats(0, 2 * math.pi))
def test_fejer_budget_property(P, ratio, gamma):
    theta = ratio * P
    val, pred = rs.fejer_identity_check(P, theta, gamma)
    assert abs(val - pred) <= budgets.get("fejer_C") / theta
