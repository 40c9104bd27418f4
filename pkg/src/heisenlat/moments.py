"""Second moment of E_q over dyadic intervals and its predicted leading term.

The count is a step function of x^4 with jumps at integers t, so on each
piece [t^{1/4}, (t+1)^{1/4}) the integrand is (N - c x^p)^2 with p = 2q + 2.
Writing x = a + s on a piece [a, b] and h = b - a, the integral is

    E_a^2 h - 2 E_a c G1 + c^2 G2,   E_a = N - c a^p,

where G1 = int_0^h ((a+s)^p - a^p) ds and G2 = int_0^h ((a+s)^p - a^p)^2 ds
are evaluated as polynomials in h/a without cancellation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import NamedTuple

import mpmath
import numpy as np
from scipy import integrate

from . import counting, geometry
from .arithmetic import chi, zeta_tail
from .errors import CapacityError

_LD = np.longdouble
BLOCK = 1 << 20


# ---------------------------------------------------------------------------
# Exact integral
# ---------------------------------------------------------------------------

def _ld(v) -> np.longdouble:
    v = Fraction(v)
    return _LD(v.numerator) / _LD(v.denominator)


def _volume_ld(q: int) -> np.longdouble:
    with mpmath.workdps(40):
        return _LD(mpmath.nstr(geometry.ball_volume_mp(q), 30))


def _poly_coeffs(p: int):
    c1 = np.array([math.comb(p, k) / (k + 1) for k in range(1, p + 1)], dtype=_LD)
    c2 = np.array([(math.comb(2 * p, s) - 2 * (math.comb(p, s) if s <= p else 0)) / (s + 1)
                   for s in range(1, 2 * p + 1)], dtype=_LD)
    return c1, c2


def _horner(coef, r):
    """sum_k coef[k-1] r^k for k >= 1."""
    acc = np.zeros_like(r)
    for c in coef[::-1]:
        acc = (acc + c) * r
    return acc


def _pieces_integral(q: int, A, B, N, c) -> np.longdouble:
    """sum of int_{A^{1/4}}^{B^{1/4}} (N - c x^p)^2 dx over arrays of piece ends in x^4."""
    p = 2 * q + 2
    c1, c2 = _poly_coeffs(p)
    a = A ** _LD(0.25)
    b = B ** _LD(0.25)
    h = (B - A) / ((a + b) * (a * a + b * b))
    ap = A ** ((q + 1) // 2) * (np.sqrt(A) if q % 2 == 0 else 1)  # a^p = A^{(q+1)/2}
    r = h / a
    Ea = N - c * ap
    G1 = ap * h * _horner(c1, r)
    G2 = ap * ap * h * _horner(c2, r)
    return np.sum(Ea * Ea * h - 2 * Ea * c * G1 + c * c * G2)


def _block_integral(q: int, lo: int, hi: int, L: Fraction, U: Fraction, c) -> np.longdouble:
    """Integral over x^4 in [max(L, lo), min(U, hi+1)] for integer block [lo, hi]."""
    sched = counting.JumpSchedule(q, hi)
    mass = sched.masses(lo, hi).astype(_LD)
    base = _LD(counting.fast_count(q, x4=lo - 1)) if lo > 0 else _LD(0)
    N = base + np.cumsum(mass)  # count on [t, t+1)
    t = np.arange(lo, hi + 1, dtype=np.int64).astype(_LD)
    A = t.copy()
    B = t + 1
    if Fraction(lo) < L:
        A[0] = _ld(L)
    if Fraction(hi + 1) > U:
        B[-1] = _ld(U)
    keep = B > A
    return _pieces_integral(q, A[keep], B[keep], N[keep], c)


def mean_square_integral(q: int, X, Y, threads: int = 1) -> float:
    """int_X^Y E_q(x)^2 dx, exact up to extended-precision rounding."""
    L = geometry.quartic(X)
    U = geometry.quartic(Y)
    if not 0 < L < U:
        raise ValueError("need 0 < X < Y")
    c = _volume_ld(q)
    counting.rep_table(q, math.isqrt(math.ceil(U)))
    lo0, hi0 = math.floor(L), math.ceil(U) - 1
    blocks = [(s, min(hi0, s + BLOCK - 1)) for s in range(lo0, hi0 + 1, BLOCK)]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(lambda bl: _block_integral(q, bl[0], bl[1], L, U, c), blocks))
    total = _LD(0)
    for v in parts:  # fixed order, independent of thread count
        total += v
    return float(total)


def mean_square_exact(q: int, X, threads: int = 1) -> float:
    """(1/X) int_X^{2X} E_q(x)^2 dx."""
    X = Fraction(X)
    return mean_square_integral(q, X, 2 * X, threads) / float(X)


def mean_square_quadrature(q: int, X, epsrel: float = 1e-13) -> float:
    """Oracle: adaptive quadrature on every piece, counts from fast_count directly."""
    X = Fraction(X)
    L, U = X**4, (2 * X) ** 4
    vol = geometry.ball_volume(q)
    p = 2 * q + 2
    edges = [L] + [Fraction(t) for t in range(math.floor(L) + 1, math.ceil(U))] + [U]
    total = []
    for A, B in zip(edges[:-1], edges[1:]):
        N = counting.fast_count(q, x4=A)
        f = lambda x, N=N: (N - vol * x**p) ** 2
        val, _ = integrate.quad(f, float(A) ** 0.25, float(B) ** 0.25, epsabs=0, epsrel=epsrel, limit=100)
        total.append(val)
    return math.fsum(total) / float(X)


# ---------------------------------------------------------------------------
# Predicted leading term
# ---------------------------------------------------------------------------

def second_moment_constants(q: int) -> tuple[Fraction, float]:
    """(c_q, gamma_q) with c_q = (2^{4q-1} - 1)/(4q - 1) exact."""
    if q < 3:
        raise ValueError("q must be at least 3")
    cq = Fraction(2 ** (4 * q - 1) - 1, 4 * q - 1)
    gamma = float(cq) / 2 * (math.pi ** (q - 1) / (2 * math.gamma(q))) ** 2
    return cq, gamma


class SeriesValue(NamedTuple):
    q: int
    value: float          # partial sum plus tail_estimate
    truncation: tuple     # (D_max, M_max)
    partial: float
    tail_estimate: float  # fitted-model remainder in m
    tail_bound: float     # rigorous but loose bound on the whole remainder
    schedule_gap: float   # |d-major result - m-major result at half the m range|
    branch: str           # 'even' or 'odd'


def _branch_factor(q: int, d: int) -> float:
    return 1.0 if d % 2 else 2.0 ** (2 * q)


def _weights_dmajor(q: int, M: int) -> tuple[np.ndarray, float]:
    """W(m) = m^{3/2} sum_{d <= sqrt M} (branch term at (m, d)) and the d-major total.

    The d-major total sums, for each d in turn, the terms with m <= M.
    """
    odd = q % 2 == 1
    us, vs, dtotal = [], [], []
    for d in range(1, math.isqrt(M) + 1):
        if d % 4 == 2:
            continue
        ms, ws = [], []
        for j in range(0, math.isqrt(M) // d + 1):
            b = d * j
            amax = math.isqrt(M - b * b)
            a = np.arange(1, amax + 1, dtype=np.int64)
            m = a * a + b * b
            w = (a * a / m) ** ((q - 1) / 2) * (2.0 if b == 0 else 4.0)
            if d % 4 == 0 and odd:
                w = w * chi(a)
            ms.append(m)
            ws.append(w)
        m = np.concatenate(ms)
        u, inv = np.unique(m, return_inverse=True)
        r = np.bincount(inv, weights=np.concatenate(ws))
        keep = np.gcd(u, d) == 1
        vals = _branch_factor(q, d) * r[keep] ** 2 / d ** (2 * q - 3)
        dtotal.append(math.fsum(vals / u[keep].astype(float) ** 1.5))
        us.append(u[keep])
        vs.append(vals)
    W = np.bincount(np.concatenate(us), weights=np.concatenate(vs), minlength=M + 1)
    return W, math.fsum(dtotal)


def _square_d_tail(q: int, M: int, d_lo: int, D_sq: int) -> float:
    """Terms with m = k^2 <= M and d_lo < d <= D_sq, where d_lo >= sqrt(M).

    For d > sqrt(m) only the representations with b = 0 survive.
    """
    s = 2 * q - 3
    k = np.arange(1, math.isqrt(M) + 1, dtype=np.int64)
    total = []
    for d in range(d_lo + 1, D_sq + 1):
        if d % 4 == 2:
            continue
        kk = k[np.gcd(k, d) == 1]
        total.append(_branch_factor(q, d) * 4.0 * math.fsum(kk.astype(float) ** -3.0) / d**s)
    return math.fsum(total)


def _fitted_tail(S: np.ndarray, M: int) -> float:
    """Remainder sum_{m > M} w(m) m^{-3/2}, modelling S(x) = a x log x + b x beyond M.

    By parts: -S(M) M^{-3/2} + (3/2) int_M^inf S(t) t^{-5/2} dt, the model
    fitted to the exact cumulative weights on [M/16, M].
    """
    xs = np.arange(max(1, M // 16), M + 1)
    A = np.vstack([xs * np.log(xs), xs]).T
    (a, b), *_ = np.linalg.lstsq(A, S[xs], rcond=None)
    L, r = math.log(M), math.sqrt(M)
    return -S[M] / M**1.5 + 1.5 * (a * (2 * L + 4) / r + 2 * b / r)


def _rigorous_tail(q: int, M: int, D_sq: int) -> float:
    """r2(m,d;q) <= r2(m) <= 4 d(m), d(m)^2 <= d_4(m), sum_{n<=x} d_4(n) <= x(1 + log x)^3."""
    s = 2 * q - 3
    zs = zeta_tail(s, 0)[0]
    dsum = (1 - 2.0**-s) * zs + 2.0 ** (2 * q) * 4.0**-s * zs
    L1 = 1 + math.log(M)
    m_tail = 16 * 1.5 * 2 * math.exp(-math.log(M) / 2) * (L1**3 + 6 * L1**2 + 24 * L1 + 48)
    d_tail = 4 * zeta_tail(3, 0)[0] * (1 + 2.0 ** (2 * q)) * sum(zeta_tail(s, D_sq))
    return m_tail * dsum + d_tail


def singular_series(q: int, tol: float = 1e-6, M0: int = 1 << 18, M_cap: int = 1 << 23,
                    D_sq: int = 20_000) -> SeriesValue:
    """The bracketed double series of the second-moment prediction.

    Two schedules are compared: a d-major sum over m <= M and an m-major
    cumulative sum over m <= M/2, each completed with the fitted m-tail.  M
    doubles from M0 until they agree within ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = M0
    while True:
        W, dmajor = _weights_dmajor(q, M)
        sq = _square_d_tail(q, M, math.isqrt(M), D_sq)
        m = np.arange(M + 1, dtype=float)
        m[0] = 1.0
        S = np.cumsum(W)
        Mh = M // 2
        mmajor = math.fsum(W[1:Mh + 1] / m[1:Mh + 1] ** 1.5)
        sq_h = _square_d_tail(q, Mh, math.isqrt(M), D_sq)  # W already holds d <= sqrt(M)
        va = dmajor + sq + _fitted_tail(S, M)
        vb = mmajor + sq_h + _fitted_tail(S, Mh)
        gap = abs(va - vb)
        if gap <= tol:
            break
        if 2 * M > M_cap:
            raise CapacityError(f"series schedules differ by {gap:.3g} > {tol} at M = {M}")
        M *= 2
    tail_est = _fitted_tail(S, M)
    return SeriesValue(q, va, (D_sq, M), dmajor + sq, tail_est, _rigorous_tail(q, M, D_sq), gap,
                       "odd" if q % 2 else "even")


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

class MomentReport(NamedTuple):
    q: int
    X: float
    mean_square: float
    prediction: float
    ratio: float
    slope: float


def loglog_slope(xs, ys) -> float:
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


def moment_report(q: int, X_grid, series: SeriesValue | None = None, threads: int = 1) -> list[MomentReport]:
    grid = [Fraction(x) for x in X_grid]
    if grid != sorted(grid) or not grid:
        raise ValueError("X grid must be non-empty and ascending")
    series = series or singular_series(q)
    _, gamma = second_moment_constants(q)
    ms = [mean_square_exact(q, X, threads) for X in grid]
    slope = loglog_slope([float(x) for x in grid], ms) if len(grid) > 1 else float("nan")
    out = []
    for X, v in zip(grid, ms):
        pred = gamma * series.value * float(X) ** (2 * (2 * q - 1))
        out.append(MomentReport(q, float(X), v, pred, v / pred, slope))
    return out
