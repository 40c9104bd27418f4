"""Exact lattice counts by slicing, the error term E_q(x), and the weighted sums.

Slicing along the central coordinate gives

    |Z^{2q+1} cap delta_x B| = sum_{m^2 + n^2 <= x^4} r_{2q}(m),

so one count costs O(x^2) table lookups.  Dilations are passed either as a
float x or, preferably, with x^4 given exactly (``x4``); all boundary tests
are done in integers against floor(x^4).
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple

import mpmath
import numpy as np
from scipy import integrate

from . import geometry
from .arithmetic import RepTable, build_rep_tables, varrho_for
from .errors import TableTooSmall

_MP_DPS = 50

# ---------------------------------------------------------------------------
# Shared representation tables
# ---------------------------------------------------------------------------

_TABLES: dict[int, RepTable] = {}
_TABLE_LOCK = threading.Lock()


def rep_table(q: int, M: int) -> RepTable:
    """A cached RepTable for q covering at least 0..M."""
    with _TABLE_LOCK:
        t = _TABLES.get(q)
        if t is None or t.limit < M:
            grow = max(M, 64, 2 * t.limit if t is not None else 0)
            t = build_rep_tables(q, grow)
            _TABLES[q] = t
        return t


def isqrt_array(a: np.ndarray) -> np.ndarray:
    """Elementwise floor(sqrt(a)) for non-negative int64 arrays, exactly."""
    a = np.asarray(a, dtype=np.int64)
    r = np.floor(np.sqrt(a.astype(float))).astype(np.int64)
    r -= (r * r > a).astype(np.int64)
    r -= (r * r > a).astype(np.int64)
    r += ((r + 1) * (r + 1) <= a).astype(np.int64)
    return r


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------

def fast_count(q: int, x=None, x4=None, table: RepTable | None = None) -> int:
    """|Z^{2q+1} cap delta_x B| via the slicing identity.

    Iterates n over [-x^2, x^2] and adds prefix_{2q}[floor(sqrt(x^4 - n^2))].
    """
    T = geometry.quartic_floor(x, x4)
    if T < 0:
        raise ValueError("x^4 must be non-negative")
    W = math.isqrt(T)
    if table is None:
        table = rep_table(q, W)
    if table.limit < W:
        raise TableTooSmall(f"need r_{2 * q} up to {W}, table has {table.limit}")
    pre = table.cumulative(q)
    n = np.arange(W + 1, dtype=np.int64)
    idx = isqrt_array(T - n * n)
    vals = pre[idx]
    if vals.dtype != object and float(pre[W]) * (2 * W + 1) >= 2.0**62:
        vals = vals.astype(object)
    return int(2 * vals.sum() - vals[0])


class ErrorSample(NamedTuple):
    q: int
    x: float
    count: int
    main: float
    err: float
    x4: Fraction


def main_term_mp(q: int, x4: Fraction) -> mpmath.mpf:
    """vol(B) x^{2q+2} at 50 digits, with x^4 exact."""
    with mpmath.workdps(_MP_DPS):
        t = mpmath.mpf(x4.numerator) / x4.denominator
        return geometry.ball_volume_mp(q, _MP_DPS) * t ** (mpmath.mpf(q + 1) / 2)


def error_term(q: int, x=None, x4=None, table: RepTable | None = None) -> ErrorSample:
    """E_q(x) = count - vol(B) x^{2q+2}; the subtraction is done at 50 digits."""
    X4 = geometry.quartic(x, x4)
    count = fast_count(q, x4=X4, table=table)
    main = main_term_mp(q, X4)
    with mpmath.workdps(_MP_DPS):
        err = float(count - main)
    xf = float(x) if x is not None else float(mpmath.root(mpmath.mpf(X4.numerator) / X4.denominator, 4))
    return ErrorSample(q, xf, count, float(main), err, X4)


def normalized_delta(q: int, x) -> float:
    """Delta_q(x) = -E_q(sqrt(x)) / (2 varrho x^{q-1/2}), parity-selected varrho."""
    if x <= 0:
        raise ValueError("x must be positive")
    s = error_term(q, x4=Fraction(x) ** 2)
    return -s.err / (2 * varrho_for(q) * float(x) ** (q - 0.5))


def scan(q: int, x4_values, threads: int = 1) -> list[ErrorSample]:
    """Error samples at integer values of x^4, returned in input order."""
    ts = [int(t) for t in x4_values]
    if not ts:
        return []
    table = rep_table(q, math.isqrt(max(ts)))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(lambda t: error_term(q, x4=t, table=table), ts))


# ---------------------------------------------------------------------------
# Jump schedule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JumpSchedule:
    """Values t = x^4 = m^2 + n^2 where the count jumps, with mass sum r_{2q}(m).

    Jumps sit at integers t, so a schedule is generated per block of t
    without materializing every (m, n) pair at once.
    """

    q: int
    t_max: int
    block: int = 1 << 20

    def _table(self) -> RepTable:
        return rep_table(self.q, math.isqrt(self.t_max))

    def masses(self, t_lo: int, t_hi: int) -> np.ndarray:
        """Jump mass J(t) for t_lo <= t <= t_hi (dense, possibly zero)."""
        if t_hi > self.t_max:
            raise TableTooSmall("block extends past the schedule range")
        r = self._table().r(self.q)
        size = t_hi - t_lo + 1
        exact = r.dtype == object or float(r[: math.isqrt(t_hi) + 1].max()) * 2 * size >= 2.0**52
        pos_parts, m_parts, w_parts = [], [], []
        for m in range(math.isqrt(t_hi) + 1):
            m2 = m * m
            lo = t_lo - m2
            n0 = 0 if lo <= 0 else math.isqrt(lo - 1) + 1
            n1 = math.isqrt(t_hi - m2)
            if n0 > n1 or r[m] == 0:
                continue
            n = np.arange(n0, n1 + 1, dtype=np.int64)
            pos_parts.append(n * n + m2 - t_lo)
            m_parts.append(np.full(len(n), m, dtype=np.int64))
            w_parts.append(np.where(n == 0, 1, 2))
        if not pos_parts:
            return np.zeros(size, dtype=object if exact else np.int64)
        pos = np.concatenate(pos_parts)
        mm = np.concatenate(m_parts)
        w = np.concatenate(w_parts)
        if exact:
            acc = np.zeros(size, dtype=object)
            np.add.at(acc, pos, w.astype(object) * r[mm].astype(object))
            return acc
        acc = np.bincount(pos, weights=w * r[mm].astype(float), minlength=size)
        return np.rint(acc).astype(np.int64)

    def blocks(self, t_lo: int = 0, t_hi: int | None = None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (t, mass) arrays restricted to non-zero mass, block by block."""
        t_hi = self.t_max if t_hi is None else t_hi
        a = t_lo
        while a <= t_hi:
            b = min(t_hi, a + self.block - 1)
            mass = self.masses(a, b)
            nz = np.nonzero(mass)[0]
            yield a + nz.astype(np.int64), mass[nz]
            a = b + 1

    def radii(self) -> tuple[np.ndarray, np.ndarray]:
        """All jump radii x = t^{1/4} and masses; small schedules only."""
        ts, ms = zip(*self.blocks())
        return np.concatenate(ts).astype(float) ** 0.25, np.concatenate(ms)


# ---------------------------------------------------------------------------
# Weighted sums and their main terms
# ---------------------------------------------------------------------------

def _taylor_sqrt_series(q: int, rtol: float = 1e-15, kmax: int = 10**7) -> float:
    """sum_{k>=1} f^{(k)}(1) / prod_{i<=k}(q/2 + i) with f(y) = sqrt(y).

    The terms alternate in sign from k = 2 on and decrease in size, so the
    average of two consecutive partial sums is within half a term of the limit.
    """
    term = 0.5 / (q / 2 + 1)
    total, k = term, 1
    while k < kmax:
        nxt = term * (0.5 - k) / (q / 2 + k + 1)
        if abs(nxt) > abs(term):
            raise ArithmeticError("series terms stopped decreasing")
        total += nxt
        term, k = nxt, k + 1
        if abs(term) < rtol * abs(total):
            break
    else:
        raise ArithmeticError("series did not converge")
    return total - term / 2


def alpha_flat(q: int) -> float:
    """The constant multiplying x^{2q+2} in S-flat, summed from the sqrt Taylor series."""
    c = math.pi**q / 2 ** ((q + 1) / 2)
    return c / math.gamma(q + 1) * _taylor_sqrt_series(q) + c / math.gamma(q + 2)


def alpha_flat_integral(q: int) -> float:
    """Same constant as a 1-D integral, used as a cross-check."""
    val, _ = integrate.quad(lambda t: t ** (q - 1) * (math.sqrt(1 - t * t) - t),
                            0, 1 / math.sqrt(2), epsabs=0, epsrel=1e-13)
    return math.pi**q / math.gamma(q) * val


def alpha_sharp(q: int) -> float:
    val, _ = integrate.quad(lambda t: (1 - t * t) ** (q / 2) - t**q,
                            0, 1 / math.sqrt(2), epsabs=0, epsrel=1e-13)
    return 2 * math.pi**q / math.gamma(q + 1) * val


def volume_assembly(q: int) -> float:
    """2 alpha_flat + alpha_sharp, which must reproduce vol(B)."""
    return 2 * alpha_flat(q) + alpha_sharp(q)


class WeightedSum(NamedTuple):
    value: float
    main: float
    residual: float


def _r_float(q: int, upto: int) -> np.ndarray:
    return rep_table(q, upto).r(q)[: upto + 1].astype(float)


def weighted_sum(q: int, kind: str, Y=None, x=None, x4=None, k: int = 1) -> WeightedSum:
    """One of the weighted sums S_q(Y), S*_{k,q}(Y), S-flat_q(x), S-sharp_q(x).

    ``kind`` is 'S', 'S*', 'flat' or 'sharp'.  S and S* take Y; the other two
    take x (or exact x4).
    """
    if kind == "S":
        Y = float(Y)
        M = math.floor(Y)
        r = _r_float(q, max(M, 0))
        m = np.arange(M + 1)
        value = math.fsum(r * (1 - m / Y))
        main = math.pi**q / math.gamma(q + 2) * Y**q
    elif kind == "S*":
        Y = float(Y)
        M = math.isqrt(math.floor(Y))
        r = _r_float(q, M)
        m = np.arange(M + 1, dtype=float)
        value = math.fsum(r * (1 - m * m / Y) ** k)
        coef = math.factorial(k) * math.pi**q / math.gamma(q + 1)
        coef /= math.prod(q / 2 + i for i in range(1, k + 1))
        main = coef * Y ** (q / 2)
    elif kind in ("flat", "sharp"):
        X4 = geometry.quartic(x, x4)
        T = math.floor(X4)
        Mh = math.isqrt(math.floor(X4 / 2))  # 2 m^2 <= x^4
        t4 = float(X4)
        if kind == "flat":
            r = _r_float(q, Mh)
            m = np.arange(Mh + 1, dtype=float)
            value = math.fsum(r * (np.sqrt(t4 - m * m) - m))
            main = alpha_flat(q) * t4 ** ((q + 1) / 2)
        else:
            value = _sharp_sum(q, X4, T, Mh)
            main = alpha_sharp(q) * t4 ** ((q + 1) / 2)
    else:
        raise ValueError(f"unknown weighted sum {kind!r}")
    return WeightedSum(float(value), float(main), float(value - main))


def _sharp_sum(q: int, X4: Fraction, T: int, Mh: int) -> int:
    """sum_{0<m<=x^2/sqrt2} r(m) + sum_{|n|<=x^2/sqrt2} sum_{|n|<m<=sqrt(x^4-n^2)} r(m)."""
    W = math.isqrt(T)
    tab = rep_table(q, W)
    pre = tab.cumulative(q)
    total = int(pre[Mh]) - 1
    n = np.arange(Mh + 1, dtype=np.int64)
    top = isqrt_array(T - n * n)
    inner = pre[top] - pre[n]
    total += 2 * int(inner.astype(object).sum()) - int(inner[0])
    return total


def slicing_decomposition(q: int, x=None, x4=None) -> dict:
    """Both sides of count = 2 S-flat - 2 sum r(m) psi(sqrt(x^4 - m^2)) + S-sharp.

    The psi term is evaluated exactly when sqrt(x^4 - m^2) is an integer.
    """
    X4 = geometry.quartic(x, x4)
    T = math.floor(X4)
    Mh = math.isqrt(math.floor(X4 / 2))
    r = rep_table(q, math.isqrt(T)).r(q)[: Mh + 1].astype(float)
    m = np.arange(Mh + 1, dtype=np.int64)
    fl = isqrt_array(T - m * m)  # exact floor of sqrt(x^4 - m^2)
    frac = np.sqrt(float(X4) - (m * m).astype(float)) - fl
    on_lattice = (fl * fl == T - m * m) & (X4.denominator == 1)
    frac = np.where(on_lattice, 0.0, np.clip(frac, 0.0, np.nextafter(1.0, 0)))
    ps = frac - 0.5
    flat = weighted_sum(q, "flat", x4=X4).value
    sharp = _sharp_sum(q, X4, T, Mh)
    rhs = 2 * flat - 2 * math.fsum(r * ps) + sharp
    return {"count": fast_count(q, x4=X4), "rhs": rhs, "flat": flat, "sharp": sharp}
