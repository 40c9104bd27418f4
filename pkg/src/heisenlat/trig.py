"""Vaaler polynomials, psi-sums, B-process identities, coefficient tables and
the approximate trigonometric expressions for E_q(x).

Every phase in this module has the form c * sqrt(P) with c rational and P a
non-negative integer.  ``sqrt_frac`` reduces such a phase mod 1 using the
integer square root, so phases stay accurate when x^2 is in the thousands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import budgets, counting, geometry
from .arithmetic import chi, lam, varrho_for, xi_array
from .errors import CapacityError, PolicyError

MAX_PAIRS = 20_000_000

# ---------------------------------------------------------------------------
# Exact phase reduction
# ---------------------------------------------------------------------------


def sqrt_frac(P, num: int, den: int) -> np.ndarray:
    """frac(num * sqrt(P) / den) for integer P >= 0, computed without losing
    the integer part of num*sqrt(P) to rounding."""
    if np.asarray(P).dtype == object or np.max(P, initial=0) >= 2**62 // max(1, abs(num)):
        return _sqrt_frac_big(P, num, den)
    P = np.asarray(P, dtype=np.int64)
    r = counting.isqrt_array(P)
    rem = (P - r * r).astype(float)
    fr = rem / np.maximum(np.sqrt(P.astype(float)) + r, 1.0)  # sqrt(P) - r, cancellation-free
    whole = np.mod(num * r, den).astype(float) / den
    return np.mod(whole + num * fr / den, 1.0)


def scaled(m: np.ndarray, k: int) -> np.ndarray:
    """m * k for an int64 array m, promoted to Python ints when int64 would overflow."""
    m = np.asarray(m)
    if len(m) and int(np.max(np.abs(m))) * abs(int(k)) >= 2**62:
        return m.astype(object) * int(k)
    return m * k


def _sqrt_frac_big(P, num: int, den: int) -> np.ndarray:
    """Slow path of ``sqrt_frac`` for arguments beyond int64."""
    out = np.empty(len(P))
    for i, p in enumerate(P):
        p = int(p)
        r = math.isqrt(p)
        fr = (p - r * r) / (math.sqrt(p) + r) if p else 0.0
        out[i] = ((num * r) % den) / den + num * fr / den
    return np.mod(out, 1.0)


def _as_square_ratio(Y2: Fraction) -> tuple[int, int]:
    """Write Y^2 = T / D^2 with integers T, D; Y = sqrt(T) / D."""
    a, b = Y2.numerator, Y2.denominator
    D = math.isqrt(b)
    if D * D == b:
        return a, D
    return a * b, b


# ---------------------------------------------------------------------------
# Vaaler's polynomials
# ---------------------------------------------------------------------------


def tau(t):
    """tau(t) = t(1-t)cot(pi t) + t/pi on (0, 1), with tau(0+) = 1/pi."""
    t = np.asarray(t, dtype=float)
    small = t < 1e-3
    ts = np.where(small, 0.5, t)
    big = ts * (1 - ts) / np.tan(np.pi * ts) + ts / np.pi
    # cot(pi t) = 1/(pi t) - pi t/3 - (pi t)^3/45 - ...
    pt = np.pi * t
    series = (1 - t) / np.pi - t * (1 - t) * (pt / 3 + pt**3 / 45) + t / np.pi
    out = np.where(small, series, big)
    return out if out.ndim else float(out)


def tau_star(t):
    t = np.asarray(t, dtype=float)
    out = t * (1 - t)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class VaalerPoly:
    H: float
    coef: np.ndarray = field(repr=False)
    coef_star: np.ndarray = field(repr=False)

    @classmethod
    def of(cls, H: float) -> "VaalerPoly":
        if H < 1:
            raise ValueError("H must be at least 1")
        K = math.floor(H)
        h = np.arange(1, K + 1)
        return cls(H, tau(h / (K + 1)), tau_star(h / (K + 1)))

    def __call__(self, omega, which: str = "psi"):
        w = np.asarray(omega, dtype=float)
        h = np.arange(1, len(self.coef) + 1)
        arg = 2 * np.pi * np.outer(np.mod(w, 1.0).ravel(), h)
        if which == "psi":
            vals = (np.sin(-arg) * (self.coef / h)).sum(axis=1)
        elif which == "psi_star":
            vals = (np.cos(-arg) * (self.coef_star / h)).sum(axis=1)
        else:
            raise ValueError(f"unknown polynomial {which!r}")
        vals = vals.reshape(w.shape)
        return vals if vals.ndim else float(vals)


def vaaler_eval(H: float, omega, which: str = "psi"):
    return VaalerPoly.of(H)(omega, which)


def vaaler_violations(H: float, omegas, slack: float = 1e-12) -> tuple[int, float]:
    """Count of points where |psi - psi_H| > psi*_H + 1/(2[H]+2) + slack, and the worst excess."""
    poly = VaalerPoly.of(H)
    w = np.asarray(omegas, dtype=float)
    lhs = np.abs(w - np.floor(w) - 0.5 - poly(w, "psi"))
    rhs = poly(w, "psi_star") + 1 / (2 * math.floor(H) + 2)
    excess = lhs - rhs
    return int(np.count_nonzero(excess > slack)), float(excess.max())


# ---------------------------------------------------------------------------
# The function triple and psi-sums
# ---------------------------------------------------------------------------


def f_frak(t):
    return np.sqrt(1 - np.asarray(t, dtype=float) ** 2)


def g_frak(t, q: int):
    return (1 - np.asarray(t, dtype=float) ** 2) ** ((q - 1) / 2)


def g_hat(t, q: int):
    return np.asarray(t, dtype=float) ** (q - 1)


def _weight(q: int, which: str, n: np.ndarray, Y2: float) -> np.ndarray:
    t2 = n.astype(float) ** 2 / Y2
    if which == "g":
        return (1 - t2) ** ((q - 1) / 2)
    if which == "ghat":
        return t2 ** ((q - 1) / 2)
    raise ValueError(f"unknown weight {which!r}")


def _apply_phi(phi: str, frac: np.ndarray):
    if phi == "psi":
        return frac - 0.5
    if phi == "e":
        return np.exp(2j * np.pi * frac)
    raise ValueError(f"unknown phi {phi!r}")


def psi_sum(q: int, Y2, u, v=0, variant: str = "plain", weight: str = "g", phi: str = "psi"):
    """S^g_phi(Y; u f + v h) for Y = sqrt(Y2), summed over 0 < n <= Y/sqrt(2).

    Variant 'plain' is the untwisted sum, 'shift' replaces phi by
    sum_a chi(a) phi(. + a/4), 'twist' multiplies the n-th term by chi(n).  ``u`` and ``v`` are rationals.
    """
    Y2 = Fraction(Y2)
    u, v = Fraction(u), Fraction(v)
    N = math.isqrt(math.floor(Y2 / 2))  # n <= Y/sqrt(2)  <=>  2 n^2 <= Y^2
    if N < 1:
        return 0.0 if phi == "psi" else 0j
    T, D = _as_square_ratio(Y2)
    n = np.arange(1, N + 1, dtype=np.int64)
    # u sqrt(Y^2 - n^2) = u sqrt(T - (nD)^2) / D
    base = sqrt_frac(T - scaled(n * n, D * D), u.numerator, u.denominator * D)
    base = np.mod(base + np.mod(v.numerator * n, v.denominator) / v.denominator, 1.0)
    w = _weight(q, weight, n, float(Y2))
    if variant == "plain":
        vals = _apply_phi(phi, base)
    elif variant == "shift":
        vals = sum(chi(a) * _apply_phi(phi, np.mod(base + a / 4, 1.0)) for a in (1, 3))
    elif variant == "twist":
        vals = chi(n) * _apply_phi(phi, base)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    terms = w * vals
    if phi == "psi":
        return math.fsum(terms)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


# ---------------------------------------------------------------------------
# B-process output identities
# ---------------------------------------------------------------------------

KINDS = ("g", "ghat", "ghat_chi")


def bprocess_lhs(q: int, x4, d: int, h: int, kind: str) -> complex:
    X4 = Fraction(x4)
    if kind == "g":
        return psi_sum(q, X4, Fraction(-h, d), weight="g", phi="e")
    if kind == "ghat":
        return psi_sum(q, X4 / d**2, -d * h, weight="ghat", phi="e")
    if kind == "ghat_chi":
        return sum(chi(-a) * psi_sum(q, X4 / d**2, -d * h, Fraction(-a, 4), weight="ghat", phi="e")
                   for a in range(4))
    raise ValueError(f"unknown kind {kind!r}")


def _dual_sum(q: int, X4: Fraction, n: np.ndarray, k: int, mod: int, wfun: str,
              twist: bool) -> complex:
    """sum'' over 0 <= n <= k of w(n/sqrt(n^2+k^2)) (n^2+k^2)^{-3/4} e(-sqrt(n^2+k^2) x^2/mod + 1/8)."""
    m = n * n + k * k
    T, D = _as_square_ratio(X4)  # x^2 = sqrt(T)/D
    # sqrt(m) x^2 / mod = sqrt(m T) / (D mod)
    ph = sqrt_frac(scaled(m, T), 1, D * mod)
    t = n / np.sqrt(m.astype(float))
    w = g_frak(t, q) if wfun == "g" else g_hat(t, q)
    amp = w / m.astype(float) ** 0.75
    amp = np.where((n == 0) | (n == k), amp / 2, amp)
    if twist:
        amp = amp * chi(-n)
    terms = amp * np.exp(2j * np.pi * (-ph + 0.125))
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def bprocess_rhs(q: int, x4, d: int, h: int, kind: str) -> complex:
    X4 = Fraction(x4)
    x = float(X4) ** 0.25
    if kind == "g":
        n = np.arange(0, h + 1, d, dtype=np.int64)
        return x * math.sqrt(d) * h * _dual_sum(q, X4, n, h, d, "g", False)
    if kind == "ghat":
        n = np.arange(0, d * h + 1, dtype=np.int64)
        return x * math.sqrt(d) * h * _dual_sum(q, X4, n, d * h, d, "ghat", False)
    if kind == "ghat_chi":
        n = np.arange(0, 4 * d * h + 1, dtype=np.int64)
        return 4 * x * math.sqrt(4 * d) * h * _dual_sum(q, X4, n, 4 * d * h, 4 * d, "ghat", True)
    raise ValueError(f"unknown kind {kind!r}")


def bprocess_normalizer(x4, d: int, h: int) -> float:
    x2 = math.sqrt(float(Fraction(x4)))
    return math.log(2 * h) + d + h / (d * x2)


def bprocess_discrepancy(q: int, x4, d: int, h: int, kind: str) -> float:
    """|LHS - RHS| / (log 2h + d + h/(d x^2))."""
    diff = bprocess_lhs(q, x4, d, h, kind) - bprocess_rhs(q, x4, d, h, kind)
    return abs(diff) / bprocess_normalizer(x4, d, h)


# ---------------------------------------------------------------------------
# Coefficient tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoeffTable:
    """Per-d sparse coefficients: ``rows[d]`` maps name -> array aligned with ``rows[d]['m']``.

    Names: 'a', 'a_star', 'a_chi', 'b_star'.  Only m with a non-zero entry in
    some map are stored.
    """

    q: int
    H: float
    d_max: int
    rows: dict = field(repr=False)

    def get(self, m: int, d: int, name: str = "a") -> float:
        row = self.rows.get(d)
        if row is None:
            return 0.0
        i = np.searchsorted(row["m"], m)
        if i < len(row["m"]) and row["m"][i] == m:
            return float(row[name][i])
        return 0.0

    def d_star(self, d: int) -> np.ndarray:
        """2^{q-1} a* + 1_{4|d} 4^{q-1} b* (used for odd q)."""
        row = self.rows[d]
        out = 2.0 ** (self.q - 1) * row["a_star"]
        if d % 4 == 0:
            out = out + 4.0 ** (self.q - 1) * row["b_star"]
        return out


def build_coeff_tables(q: int, H: float, d_max: int | None = None) -> CoeffTable:
    """Coefficient maps for 1 <= d <= d_max (default floor(H))."""
    if H < 1:
        raise ValueError("H must be at least 1")
    K = math.floor(H)
    d_max = K if d_max is None else min(int(d_max), K)
    if K * (K + 1) // 2 > MAX_PAIRS:
        raise CapacityError(f"coefficient table for H={H} exceeds the pair budget")
    n, h = (a.astype(np.int64) for a in np.triu_indices(K + 1))  # 0 <= n <= h <= K
    keep = h >= 1
    h, n = h[keep], n[keep]
    m = n * n + h * h
    half = np.where((n == 0) | (n == h), 0.5, 1.0)
    sm = np.sqrt(m.astype(float))
    gA = g_frak(n / sm, q) * half
    gB = g_hat(n / sm, q) * half
    tA = tau(h / (K + 1))
    tsA = tau_star(h / (K + 1))
    chi_h = chi(-h).astype(float)
    chi_n = chi(-n).astype(float)
    lam_h = lam(h).astype(float)
    n4 = (n % 4 == 0).astype(float)
    inv = m.astype(float) ** -0.75

    rows = {}
    for d in range(1, d_max + 1):
        A = (n % d == 0)
        B = (h % d == 0)
        Kd = d * math.floor(H / d) + d
        tB = tau(h / Kd)
        tsB = tau_star(h / Kd)
        sel = A | B
        ms = m[sel]
        uniq, inv_idx = np.unique(ms, return_inverse=True)
        a_ = np.where(A, tA * gA, 0) + np.where(B, tB * gB, 0)
        as_ = np.where(A, tsA * gA, 0) + np.where(B, tsB * gB, 0)
        ac_ = 2 * (np.where(A, chi_h * tA * gA, 0) + np.where(B, chi_n * tB * gB, 0))
        bs_ = 2 * (np.where(A, lam_h * tsA * gA, 0) + np.where(B, 2 * n4 * tsB * gB, 0))
        row = {"m": uniq}
        for name, arr in (("a", a_), ("a_star", as_), ("a_chi", ac_), ("b_star", bs_)):
            row[name] = np.bincount(inv_idx, weights=(arr * inv)[sel], minlength=len(uniq))
        rows[d] = row
    return CoeffTable(q, float(H), d_max, rows)


# ---------------------------------------------------------------------------
# Approximate expressions
# ---------------------------------------------------------------------------


class ApproxResult(NamedTuple):
    mode: str
    H: float
    leading: float
    envelope: float
    trivial: float  # trivial-bound chain (bound mode), otherwise nan
    target: float   # E_q(x), or Delta_q(x) in delta mode


def _phase_sin_cos(m: np.ndarray, x_sq: tuple[int, int], d: int):
    """sin and cos of -2 pi sqrt(m) y/d + pi/4 where y = sqrt(T)/D."""
    T, D = x_sq
    frac = sqrt_frac(scaled(m, T), 1, D * d)
    ang = -2 * np.pi * frac + np.pi / 4
    return np.sin(ang), np.cos(ang)


def _leading_sums(q: int, tab: CoeffTable, y_sq: tuple[int, int], d_hi: int, drop_squares: bool):
    """Return (S_main, S_chi, S_env) summed over d <= d_hi without the x-power prefactor.

    For even q, S_main carries xi(d) and S_env uses |xi(d)| a*; for odd q the
    two leading families and the d* envelope are returned.
    """
    odd = q % 2 == 1
    S_main = S_chi = S_env = 0.0
    xi_vals = None if odd else xi_array(np.arange(1, d_hi + 1), q)
    for d in range(1, d_hi + 1):
        row = tab.rows[d]
        m = row["m"]
        keep = np.ones(len(m), bool)
        if drop_squares:
            r = counting.isqrt_array(m)
            keep = r * r != m
        m = m[keep]
        s, c = _phase_sin_cos(m, y_sq, d)
        wd = d ** -(q - 1.5)
        if odd:
            S_main += 2 ** (q - 1) * chi(d) * wd * math.fsum(row["a"][keep] * s)
            if d % 4 == 0:
                S_chi += (-1) ** ((q + 1) // 2) * 4 ** (q - 1) * wd * math.fsum(row["a_chi"][keep] * c)
            S_env += wd * math.fsum(tab.d_star(d)[keep] * c)
        else:
            xd = int(xi_vals[d - 1])
            S_main += xd * wd * math.fsum(row["a"][keep] * s)
            S_env += abs(xd) * wd * math.fsum(row["a_star"][keep] * c)
    return S_main, S_chi, S_env


def _theta_terms(q: int, H: float, x_sq: tuple[int, int]) -> tuple[float, float, float]:
    """(Theta^H_{q,chi}, Theta^{H,chi}_q, Theta^H_q) without the 2 varrho x^{2q-1} factor.

    The first two carry their leading minus sign.
    """
    T, D = x_sq
    th1 = th2 = th3 = 0.0
    lo = math.floor(math.sqrt(H))
    for d in range(lo + 1, math.floor(H) + 1):
        K = math.floor(H / d)
        if K < 1:
            continue
        h = np.arange(1, K + 1, dtype=np.int64)
        frac = sqrt_frac(scaled(h * h, T), 1, D * d)  # h x^2 / d
        ang = -2 * np.pi * frac + np.pi / 4
        hp = h.astype(float) ** -1.5
        t = tau(h / (K + 1))
        ts = tau_star(h / (K + 1))
        wd = d ** -(q - 1.5)
        th1 -= 2 ** (q - 2) * chi(d) * wd * math.fsum(hp * t * np.sin(ang))
        if d % 4 == 0:
            th2 -= (-1) ** ((q + 1) // 2) * 4 ** (q - 1) * wd * math.fsum(chi(-h) * hp * t * np.cos(ang))
        lam_star = 2 ** (q - 2) + (4 ** (q - 1) * lam(h) if d % 4 == 0 else 0)
        th3 += wd * math.fsum(lam_star * hp * ts * np.cos(ang))
    return th1, th2, th3


def approx_error(q: int, x=None, H: float | None = None, mode: str = "moment", x4=None,
                 X=None, tables: CoeffTable | None = None) -> ApproxResult:
    """Leading trigonometric terms and the computable envelope for E_q or Delta_q.

    moment: x with H = x^2/2 by default (odd q adds the Theta terms at q = 3).
    delta:  Delta_q at rational x near X with H = X/2, square m removed.
    bound:  any 1 <= H < x^2/sqrt(2), default H = x^{2/3}; the envelope is the
            sum of absolute exponential sums over d <= H.
    """
    rho = varrho_for(q)
    odd = q % 2 == 1
    if mode == "delta":
        xf = Fraction(x)
        X = float(x) if X is None else float(X)
        H = X / 2 if H is None else H
        if H < 1:
            raise PolicyError("delta mode needs H = X/2 >= 1")
        y_sq = (xf.numerator ** 2, xf.denominator)  # y = x = sqrt(p^2)/s
        tab = tables or build_coeff_tables(q, H, math.floor(math.sqrt(H)))
        d_hi = math.floor(math.sqrt(H))
        S_main, S_chi, S_env = _leading_sums(q, tab, y_sq, d_hi, drop_squares=True)
        leading = S_main + S_chi
        envelope = S_env + budgets.get("delta_O1")
        target = counting.normalized_delta(q, xf)
        return ApproxResult(mode, H, leading, envelope, float("nan"), target)

    X4 = geometry.quartic(x, x4)
    xf = float(X4) ** 0.25
    x_sq = _as_square_ratio(X4)  # x^2 = sqrt(T)/D
    target = counting.error_term(q, x4=X4).err
    pref = 2 * rho * xf ** (2 * q - 1)
    logsq = math.log(xf) ** 2
    if mode == "moment":
        H = xf**2 / 2 if H is None else H
        d_hi = math.floor(math.sqrt(H))
        tab = tables or build_coeff_tables(q, H, d_hi)
        S_main, S_chi, S_env = _leading_sums(q, tab, x_sq, d_hi, drop_squares=False)
        leading = -pref * (S_main + S_chi)
        envelope = pref * S_env
        if q == 3:
            th1, th2, th3 = _theta_terms(q, H, x_sq)
            leading += pref * (th1 + th2)
            envelope += pref * th3
        envelope += budgets.get("moment_slack") * xf ** (2 * q - 2) * logsq
        return ApproxResult(mode, H, leading, envelope, float("nan"), target)

    if mode == "bound":
        H = xf ** (2 / 3) if H is None else H
        if not (1 <= H < xf**2 / math.sqrt(2)):
            raise PolicyError(f"bound mode needs 1 <= H < x^2/sqrt(2); got H={H}, x={xf}")
        d_hi = math.floor(H)
        tab = tables or build_coeff_tables(q, H, d_hi)
        S_main, S_chi, _ = _leading_sums(q, tab, x_sq, d_hi, drop_squares=False)
        leading = -pref * (S_main + S_chi)
        T, D = x_sq
        env = 0.0
        names = ("a", "a_star", "a_chi", "b_star") if odd else ("a", "a_star")
        for d in range(1, d_hi + 1):
            row = tab.rows[d]
            ph = np.exp(2j * np.pi * sqrt_frac(scaled(row["m"], T), 1, D * d))
            env += d ** -(q - 1.5) * sum(abs(complex(np.sum(row[k] * ph))) for k in names)
        tail = xf ** (2 * q) / H + xf ** (2 * q - 2) * (1 + math.log(xf)) ** 2
        envelope = xf ** (2 * q - 1) * env + tail
        r2 = counting.rep_table(1, math.floor(2 * H * H)).r2[1:].astype(float)
        mm = np.arange(1, len(r2) + 1, dtype=float)
        trivial = xf ** (2 * q - 1) * math.fsum(r2 / mm**0.75) + tail
        return ApproxResult(mode, H, leading, envelope, trivial, target)

    raise ValueError(f"unknown mode {mode!r}")
