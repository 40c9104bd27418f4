"""Exact arithmetic for lattice counts on the Heisenberg group.

Representation counts r_k(m) are built by exact additive convolution of the
one-square indicator, so they are valid for every q (no cusp-form correction
is needed).  The divisor-sum formula for rho_{2q} is kept only as a cross-check
for q = 3, 4 where it is exact.

Also here: the character chi mod 4, lambda, xi, the sawtooth psi, e(t), the
distance to the nearest integer, and the constants varrho_q, varrho_{chi,q}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import CapacityError

# Largest number of table entries (over all k <= q) a RepTable may hold.
MAX_TABLE_ENTRIES = 60_000_000

_CHI = np.array([0, 1, 0, -1], dtype=np.int64)
_INT64_SAFE = float(2**62)


# ---------------------------------------------------------------------------
# Characters and small pure functions
# ---------------------------------------------------------------------------

def chi(n):
    """Non-principal character mod 4, extended 4-periodically.

    Works on Python ints and on integer numpy arrays.
    """
    if isinstance(n, np.ndarray):
        return _CHI[np.mod(n, 4)]
    return (0, 1, 0, -1)[n % 4]


def lam(h):
    """lambda(h) = 1 if h = 0 mod 4, -1 if h = 2 mod 4, else 0."""
    if isinstance(h, np.ndarray):
        return np.array([1, 0, -1, 0], dtype=np.int64)[np.mod(h, 4)]
    return (1, 0, -1, 0)[h % 4]


def xi(d: int, q: int) -> int:
    """The three-indicator weight xi(d) attached to even q."""
    if q % 2:
        raise ValueError("xi is defined for even q only")
    s = (-1) ** (q // 2)
    val = 1 if d % 2 else -s
    if d % 4 == 0:
        val += s * 2**q
    return val


def xi_array(d: np.ndarray, q: int) -> np.ndarray:
    if q % 2:
        raise ValueError("xi is defined for even q only")
    s = (-1) ** (q // 2)
    d = np.asarray(d, dtype=np.int64)
    out = np.where(d % 2 == 1, 1, -s).astype(np.int64)
    return out + np.where(d % 4 == 0, s * 2**q, 0)


def psi(t):
    """Sawtooth t - floor(t) - 1/2; equals -1/2 at integers."""
    frac = np.minimum(t - np.floor(t), np.nextafter(1.0, 0.0))  # tiny negative t rounds up to 1
    return frac - 0.5


def e(t):
    """exp(2 pi i t) with the argument reduced mod 1 first."""
    r = np.asarray(t, dtype=float) % 1.0
    out = np.cos(2 * np.pi * r) + 1j * np.sin(2 * np.pi * r)
    return out if out.ndim else complex(out)


def dist_int(t):
    """||t||, the distance from t to the nearest integer."""
    r = np.asarray(t, dtype=float) % 1.0
    out = np.minimum(r, 1.0 - r)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Representation tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RepTable:
    """r_{2k}(m) for 1 <= k <= q and 0 <= m <= limit, with prefix sums.

    ``r2q[k]`` holds r_{2k}; ``r2q[1]`` is r_2.  Arrays are int64 unless a
    value would not fit, in which case they are object arrays of Python ints.
    """

    limit: int
    q: int
    r2q: dict = field(repr=False)
    prefix: dict = field(repr=False)

    @property
    def r2(self) -> np.ndarray:
        return self.r2q[1]

    def r(self, k: int | None = None) -> np.ndarray:
        return self.r2q[self.q if k is None else k]

    def cumulative(self, k: int | None = None) -> np.ndarray:
        return self.prefix[self.q if k is None else k]


def _one_square(M: int) -> np.ndarray:
    r1 = np.zeros(M + 1, dtype=np.int64)
    s = np.arange(math.isqrt(M) + 1, dtype=np.int64) ** 2
    r1[s] = 2
    r1[0] = 1
    return r1


def _convolve_r1(old: np.ndarray, M: int) -> np.ndarray:
    """Exact convolution of ``old`` with r_1 truncated at M.

    r_1 is supported on squares, so the product costs O(M^{3/2}).  A float
    shadow predicts overflow; on overflow the work is redone with Python ints.
    """
    roots = range(math.isqrt(M) + 1)
    if old.dtype != object:
        shadow = np.zeros(M + 1)
        oldf = old.astype(float)
        for j in roots:
            k = j * j
            shadow[k:] += (1 if j == 0 else 2) * oldf[: M + 1 - k]
        if shadow.max(initial=0.0) < _INT64_SAFE:
            new = np.zeros(M + 1, dtype=np.int64)
            for j in roots:
                k = j * j
                new[k:] += (1 if j == 0 else 2) * old[: M + 1 - k]
            return new
        old = old.astype(object)
    new = np.zeros(M + 1, dtype=object)
    for j in roots:
        k = j * j
        new[k:] += (1 if j == 0 else 2) * old[: M + 1 - k]
    return new


def build_rep_tables(q: int, M: int, budget: int = MAX_TABLE_ENTRIES) -> RepTable:
    """Tables of r_2, r_4, ..., r_{2q} on 0..M by exact convolution."""
    if q < 1:
        raise ValueError("q must be positive")
    if M < 0:
        raise ValueError("M must be non-negative")
    if q * (M + 1) > budget:
        raise CapacityError(f"RepTable q={q}, M={M} exceeds budget of {budget} entries")
    r1 = _one_square(M)
    cur = r1
    tables, prefix = {}, {}
    for k in range(1, q + 1):
        cur = _convolve_r1(_convolve_r1(cur, M), M) if k > 1 else _convolve_r1(r1, M)
        tables[k] = cur
        prefix[k] = np.cumsum(cur) if cur.dtype != object else np.array(
            list(_accumulate(cur)), dtype=object)
    return RepTable(limit=M, q=q, r2q=tables, prefix=prefix)


def _accumulate(arr):
    s = 0
    for v in arr:
        s += v
        yield s


# ---------------------------------------------------------------------------
# Divisor-sum cross-check for q = 3, 4
# ---------------------------------------------------------------------------

# Rational values of the leading constants, checked numerically in the tests.
VARRHO_CHI_3 = Fraction(4)
VARRHO_4 = Fraction(16)


def _divisors(m: int) -> list[int]:
    small, large = [], []
    for d in range(1, math.isqrt(m) + 1):
        if m % d == 0:
            small.append(d)
            if d * d != m:
                large.append(m // d)
    return small + large[::-1]


def rho_2q(q: int, m: int) -> int:
    """Divisor-sum expression for r_{2q}(m), exact for q in {3, 4}."""
    if q not in (3, 4):
        raise ValueError("divisor formula is only exact for q = 3, 4")
    if m < 1:
        raise ValueError("m must be at least 1")
    divs = _divisors(m)
    if q == 3:
        # varrho m^2 {4 sum chi(d) d^-2 - sum chi(m/d) d^-2}, with m^2/d^2 = (m/d)^2
        s1 = sum(chi(d) * (m // d) ** 2 for d in divs)
        s2 = sum(chi(m // d) * (m // d) ** 2 for d in divs)
        val = VARRHO_CHI_3 * (4 * s1 - s2)
    else:
        s_odd = sum((m // d) ** 3 for d in divs if d % 2)
        s_even = sum((-1) ** (m // d) * (m // d) ** 3 for d in divs if d % 2 == 0)
        val = VARRHO_4 * (s_odd + s_even)
    assert val.denominator == 1
    return int(val)


# ---------------------------------------------------------------------------
# Weighted two-square counts
# ---------------------------------------------------------------------------

def r2_weighted(m: int, d: int, q: int, chi_twist: bool = False) -> float:
    """Sum over m = a^2 + b^2 with d | b of (|a|/sqrt(m))^{q-1}, optionally times chi(|a|)."""
    if m < 1 or d < 1:
        raise ValueError("m and d must be positive")
    total = 0.0
    for b in range(0, math.isqrt(m) + 1, d):
        a2 = m - b * b
        a = math.isqrt(a2)
        if a * a != a2 or a == 0:
            continue  # a = 0 has weight 0 since q >= 2
        mult = 2 * (1 if b == 0 else 2)
        if chi_twist:
            mult *= chi(a)
        total += mult * (a2 / m) ** ((q - 1) / 2)
    return total


def r2_weighted_table(M: int, d: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (r2(m,d;q), r2chi(m,d;q)) for 0 <= m <= M; index 0 is unused."""
    plain = np.zeros(M + 1)
    twisted = np.zeros(M + 1)
    bmax = math.isqrt(M)
    ms, ws, cs = [], [], []
    for b in range(0, bmax + 1, d):
        amax = math.isqrt(M - b * b)
        if amax < 1:
            continue
        a = np.arange(1, amax + 1, dtype=np.int64)
        m = a * a + b * b
        w = (a * a / m) ** ((q - 1) / 2) * (2.0 if b == 0 else 4.0)
        ms.append(m)
        ws.append(w)
        cs.append(w * chi(a))
    if ms:
        m = np.concatenate(ms)
        plain += np.bincount(m, weights=np.concatenate(ws), minlength=M + 1)
        twisted += np.bincount(m, weights=np.concatenate(cs), minlength=M + 1)
    return plain, twisted


# ---------------------------------------------------------------------------
# Zeta and L values with explicit truncation bounds
# ---------------------------------------------------------------------------

def zeta_tail(s: float, N: int, tol: float = 1e-15) -> tuple[float, float]:
    """Sum_{n > N} n^{-s} and a rigorous bound on the truncation error.

    Direct summation up to a cutoff, then Euler-Maclaurin with the B_2 term;
    the remainder is bounded by |f'''(M)|/720 for f(t) = t^{-s}.
    """
    if s <= 1:
        raise ValueError("s must exceed 1")
    c = s * (s + 1) * (s + 2) / 720
    M = max(N + 1, 16, math.ceil((c / tol) ** (1 / (s + 3))))
    head = 0.0
    if M > N + 1:
        n = np.arange(N + 1, M, dtype=float)
        head = math.fsum(n ** (-s))
    fM = M ** (-s)
    tail = M ** (1 - s) / (s - 1) + fM / 2 + s * M ** (-s - 1) / 12
    err = c * M ** (-s - 3)
    return head + tail, err


def zeta(s: float, tol: float = 1e-15) -> tuple[float, float]:
    """zeta(s) for s > 1 with error bound."""
    return zeta_tail(s, 0, tol)


def dirichlet_L(s: float, tol: float = 1e-15) -> tuple[float, float]:
    """L(s, chi) for the character mod 4, by grouped alternating summation.

    L(s) = sum_k [(4k+1)^{-s} - (4k+3)^{-s}]; summands decrease, so the tail
    after K pairs is below (4K+1)^{-s}.
    """
    if s <= 1:
        raise ValueError("s must exceed 1")
    K = 1
    while (4 * K + 1) ** (-s) > 2 * tol and K < 10**8:
        K *= 2
    k = np.arange(K, dtype=float)
    pairs = (4 * k + 1) ** (-s) - (4 * k + 3) ** (-s)
    val = math.fsum(pairs)
    bound = (4 * K + 1) ** (-s)
    return val, bound


class DirichletValues(NamedTuple):
    zeta_qm1: float
    zeta_q: float
    L_chi_q: float
    varrho_q: float
    varrho_chi_q: float
    error: float


def dirichlet_values(q: int, tol: float = 1e-13) -> DirichletValues:
    """zeta(q-1), zeta(q), L(q,chi) and the two varrho constants."""
    if q < 3:
        raise ValueError("q must be at least 3")
    z1, e1 = zeta(q - 1, tol / 100)
    z2, e2 = zeta(q, tol / 100)
    L, e3 = dirichlet_L(q, tol / 100)
    err = max(e1, e2, e3)
    if err > tol:
        raise ArithmeticError(f"requested tol {tol} not met ({err})")
    pq = math.pi**q
    g = math.gamma(q)
    varrho = pq / ((1 - 2.0 ** (-q)) * g * z2)
    varrho_chi = pq / (2 ** (q - 1) * g * L)
    return DirichletValues(z1, z2, L, varrho, varrho_chi, err)


def varrho_for(q: int) -> float:
    """The parity-appropriate constant: varrho_q for even q, varrho_{chi,q} for odd q."""
    dv = dirichlet_values(q)
    return dv.varrho_q if q % 2 == 0 else dv.varrho_chi_q
