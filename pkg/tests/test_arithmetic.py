import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from heisenlat import arithmetic as ar


def naive_counts(k, M):
    """#{v in Z^k : |v|^2 = m} for m <= M, by enumerating every vector."""
    R = math.isqrt(M)
    out = [0] * (M + 1)
    for v in itertools.product(range(-R, R + 1), repeat=k):
        s = sum(c * c for c in v)
        if s <= M:
            out[s] += 1
    return out


def test_small_tables():
    t = ar.build_rep_tables(3, 1)
    assert list(t.r2[:2]) == [1, 4]
    assert list(t.r(3)[:2]) == [1, 12]
    assert list(ar.build_rep_tables(3, 0).r(3)) == [1]


@pytest.mark.parametrize("k,M", [(1, 60), (2, 40), (3, 20)])
def test_tables_match_enumeration(k, M):
    t = ar.build_rep_tables(k, M)
    assert list(t.r(k)[: M + 1]) == naive_counts(2 * k, M)


def test_prefix_sums():
    t = ar.build_rep_tables(4, 500)
    assert np.array_equal(t.cumulative(4), np.cumsum(t.r(4)))


@pytest.mark.parametrize("q,m,want", [(3, 1, 12), (3, 2, 60), (4, 1, 16)])
def test_rho_examples(q, m, want):
    assert ar.rho_2q(q, m) == want


@given(st.integers(1, 3000), st.sampled_from([3, 4]))
def test_rho_matches_table(m, q):
    assert ar.rho_2q(q, m) == ar.build_rep_tables(q, 3000).r(q)[m]


def test_rho_rejects_other_q():
    with pytest.raises(ValueError):
        ar.rho_2q(5, 3)


def test_r2_weighted_examples():
    assert ar.r2_weighted(1, 1, 3) == pytest.approx(2)
    assert ar.r2_weighted(2, 1, 3) == pytest.approx(2)
    assert ar.r2_weighted(25, 1, 3, chi_twist=True) == pytest.approx(14 / 25)
    assert ar.r2_weighted(3, 1, 3) == 0
    assert ar.r2_weighted(3, 1, 3, chi_twist=True) == 0


def brute_weighted(m, d, q, twist):
    total = 0.0
    R = math.isqrt(m)
    for a in range(-R, R + 1):
        for b in range(-R, R + 1):
            if a * a + b * b == m and b % d == 0:
                w = (abs(a) / math.sqrt(m)) ** (q - 1)
                total += w * (ar.chi(abs(a)) if twist else 1)
    return total


@given(st.integers(1, 400), st.integers(1, 6), st.integers(3, 6), st.booleans())
def test_r2_weighted_brute(m, d, q, twist):
    assert ar.r2_weighted(m, d, q, twist) == pytest.approx(brute_weighted(m, d, q, twist), abs=1e-12)


@given(st.integers(1, 6), st.integers(3, 5))
def test_r2_weighted_table_agrees(d, q):
    plain, tw = ar.r2_weighted_table(300, d, q)
    for m in range(1, 301):
        assert plain[m] == pytest.approx(ar.r2_weighted(m, d, q), abs=1e-12)
        assert tw[m] == pytest.approx(ar.r2_weighted(m, d, q, True), abs=1e-12)
        assert abs(tw[m]) <= plain[m] + 1e-12


def test_characters():
    assert [ar.chi(n) for n in range(8)] == [0, 1, 0, -1, 0, 1, 0, -1]
    assert [ar.lam(h) for h in range(8)] == [1, 0, -1, 0, 1, 0, -1, 0]
    assert list(ar.chi(np.arange(-4, 4))) == [ar.chi(n) for n in range(-4, 4)]


def test_xi_even_only():
    with pytest.raises(ValueError):
        ar.xi(4, 3)
    d = np.arange(1, 50)
    for q in (4, 6):
        assert list(ar.xi_array(d, q)) == [ar.xi(int(k), q) for k in d]


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_sawtooth_and_distance(t):
    p = ar.psi(t)
    assert -0.5 <= p < 0.5
    assert 0 <= ar.dist_int(t) <= 0.5
    assert ar.dist_int(t) == pytest.approx(min(t % 1, 1 - t % 1), abs=1e-9)


def test_psi_at_integers():
    assert ar.psi(3.0) == -0.5


def test_e_unit_modulus():
    assert abs(ar.e(0.25) - 1j) < 1e-15
    assert abs(ar.e(1e9 + 0.5) + 1) < 1e-6


def test_zeta_values():
    z, err = ar.zeta(2)
    assert abs(z - math.pi**2 / 6) <= max(err, 1e-15) * 4
    L, _ = ar.dirichlet_L(3)
    assert L == pytest.approx(math.pi**3 / 32, rel=1e-13)


@given(st.floats(1.5, 8), st.integers(0, 200))
def test_zeta_tail_bound(s, N):
    v, err = ar.zeta_tail(s, N)
    with mpmath.workdps(30):
        ref = float(mpmath.zeta(s, N + 1))
    assert abs(v - ref) <= err + 4e-16 * ref


def test_varrho_constants():
    assert ar.dirichlet_values(3).varrho_chi_q == pytest.approx(ar.VARRHO_CHI_3, rel=1e-12)
    assert ar.dirichlet_values(4).varrho_q == pytest.approx(ar.VARRHO_4, rel=1e-12)
    assert ar.varrho_for(3) == pytest.approx(4, rel=1e-12)
