"""Fejer smoothing, the resonance set, simultaneous approximation and the
lower-bound certificate for abnormally large values of Delta_q.

Elements of the resonance set are stored by their exact squares: the value
sqrt(s) is represented by the Fraction s = m / d^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from scipy import integrate, special

from . import counting
from .arithmetic import MAX_TABLE_ENTRIES, chi, r2_weighted_table, xi_array, zeta_tail
from .errors import NotFound
from .trig import scaled, sqrt_frac

D0_CAP = 10**6
_MP_DPS = 40


# ---------------------------------------------------------------------------
# Fejer kernel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FejerKernel:
    P: float

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        out = self.P * np.sinc(self.P * w) ** 2  # np.sinc(x) = sin(pi x)/(pi x)
        return out if out.ndim else float(out)


def upsilon(y):
    """Triangular cut-off max(1 - y, 0) for y >= 0."""
    y = np.asarray(y, dtype=float)
    out = np.clip(1 - y, 0.0, None)
    return out if out.ndim else float(out)


def fejer_integral(P: float, theta: float = 0.0, gamma: float = 0.0) -> float:
    F = FejerKernel(P)
    f = lambda w: F(w) * math.cos(2 * math.pi * theta * w + gamma)
    n = int(4 * (abs(theta) + P)) + 50
    val, err = integrate.quad(f, -1, 1, epsabs=1e-10, epsrel=0, limit=max(200, n))
    if err > 1e-8:
        raise ArithmeticError(f"quadrature did not converge (error estimate {err:g})")
    return val


def fejer_identity_check(P: float, theta: float, gamma: float) -> tuple[float, float]:
    """(int_{-1}^{1} F_P(w) cos(2 pi theta w + gamma) dw, upsilon(|theta|/P) cos gamma)."""
    if theta == 0:
        raise ValueError("theta must be non-zero")
    return fejer_integral(P, theta, gamma), upsilon(abs(theta) / P) * math.cos(gamma)


# ---------------------------------------------------------------------------
# L(D), D_0 and omega_q
# ---------------------------------------------------------------------------

def _odd_tail(s: float, D: int) -> float:
    """sum_{d > D, d odd} d^{-s}."""
    return zeta_tail(s, D)[0] - 2.0**-s * zeta_tail(s, D // 2)[0]


def script_L(q: int, D: int) -> float:
    if D < 1:
        raise ValueError("D must be at least 1")
    s = q - 1
    d = np.arange(1, D + 1, dtype=np.int64)
    inv = d.astype(float) ** -s
    if q % 2 == 0:
        x = xi_array(d, q).astype(float)
        sg = (-1) ** (q // 2)
        head = math.fsum(x * inv) / math.sqrt(2) - 2 * math.pi / D * math.fsum(np.abs(x) * inv)
        # |xi| is 1 on odd d, 1 on d = 2 mod 4 and |2^q - 1| on d = 0 mod 4 (sign sg)
        tail = (_odd_tail(s, D) + 2.0**-s * _odd_tail(s, D // 2)
                + abs(sg * (2**q - 1)) * 4.0**-s * zeta_tail(s, D // 4)[0])
        return head - tail
    c = chi(d).astype(float)
    four = (d % 4 == 0)
    head = (math.fsum(c * inv) / math.sqrt(2) - 2 * math.pi / D * math.fsum(np.abs(c) * inv)
            - 2 * math.pi / D * 2**q * math.fsum(inv[four]))
    tail = _odd_tail(s, D) + 2**q * 4.0**-s * zeta_tail(s, D // 4)[0]
    return head - tail


def script_L_limit(q: int) -> float:
    """Limit of L(D): (1/sqrt 2) sum xi(d)/d^{q-1} (even q) or (1/sqrt 2) L(q-1, chi) (odd q)."""
    if q % 2 == 0:
        z = float(mpmath.zeta(q - 1))
        return (1 - 2.0 ** (1 - q) * (1 + (-1) ** (q // 2 + 1))) * z / math.sqrt(2)
    beta = float(mpmath.nsum(lambda k: (-1) ** k / (2 * k + 1) ** (q - 1), [0, mpmath.inf]))
    return beta / math.sqrt(2)


def choose_D0(q: int) -> int:
    """Smallest D >= 2 with L(D) > 0."""
    for D in range(2, D0_CAP + 1):
        if script_L(q, D) > 0:
            return D
    raise ArithmeticError("no D0 below the search cap; L(D) is probably mis-specified")


def omega_q(q: int) -> float:
    """(16(q+1)/3) int_0^1 t^{q-1} sqrt(1 - t^2) dt = (8(q+1)/3) B(q/2, 3/2)."""
    return 8 * (q + 1) / 3 * special.beta(q / 2, 1.5)


def omega_q_quadrature(q: int) -> float:
    val, _ = integrate.quad(lambda t: t ** (q - 1) * math.sqrt(max(0.0, 1 - t * t)), 0, 1,
                            epsabs=0, epsrel=1e-13)
    return 16 * (q + 1) / 3 * val


def sqrt_sum(q: int, d: int, P: float, twisted: bool = False) -> float:
    """sum_m r_2(m,d;q) m^{-3/4} upsilon(sqrt(m)/(dP)), or the chi-twisted weights."""
    M = math.floor((d * P) ** 2)
    if M < 1:
        return 0.0
    plain, tw = r2_weighted_table(M, d, q)
    m = np.arange(1, M + 1, dtype=float)
    w = (tw if twisted else plain)[1:]
    return math.fsum(w * m**-0.75 * upsilon(np.sqrt(m) / (d * P)))


# ---------------------------------------------------------------------------
# Resonance set and simultaneous approximation
# ---------------------------------------------------------------------------

def resonance_set(q: int, P: int, D0: int) -> list[Fraction]:
    """Exact squares s = m/d^2 of the distinct values sqrt(m)/d <= P.

    1 <= d <= D0 and m = a^2 + b^2 with d | b.  The set does not depend on q
    (a square m always has the representation (sqrt m, 0)).
    """
    if P < 1 or D0 < 1:
        raise ValueError("P and D0 must be positive")
    out = set()
    for d in range(1, D0 + 1):
        M = d * d * P * P
        for b in range(0, math.isqrt(M) + 1, d):
            amax = math.isqrt(M - b * b)
            for a in range(0 if b else 1, amax + 1):
                out.add(Fraction(a * a + b * b, d * d))
    return sorted(out)


def _rational_root(s: Fraction) -> Fraction | None:
    n, d = s.numerator, s.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def dist_sqrt_times(s: Fraction, X: int, dps: int = _MP_DPS) -> float:
    """||sqrt(s) X|| evaluated with ``dps`` significant digits."""
    r = _rational_root(s)
    if r is not None:
        v = (r * X) % 1
        return float(min(v, 1 - v))
    with mpmath.workdps(dps):
        t = mpmath.sqrt(mpmath.mpf(s.numerator) / s.denominator) * X
        f = t - mpmath.floor(t)
        return float(min(f, 1 - f))


def _residue_masks(rationals: list[Fraction], D0: int) -> dict[int, np.ndarray]:
    """Per denominator v, the residues X mod v with ||u X / v|| <= 1/D0 for every u/v present."""
    by_den: dict[int, list[int]] = {}
    for r in rationals:
        by_den.setdefault(r.denominator, []).append(r.numerator % r.denominator)
    masks = {}
    for v, us in by_den.items():
        if v == 1:
            continue
        res = np.arange(v, dtype=np.int64)
        ok = np.ones(v, bool)
        for u in set(us):
            k = (u * res) % v
            ok &= D0 * np.minimum(k, v - k) <= v
        masks[v] = ok
    return masks


def dirichlet_search(A: list[Fraction], D0: int, X_min: int, X_cap: int,
                     slack: float = 1e-9, block: int = 1 << 20) -> int:
    """Smallest integer X in [X_min, X_cap] with ||sqrt(s) X|| <= 1/D0 for all s in A.

    Rational roots are screened exactly through residues; irrational ones in
    float64 with a margin, and survivors are confirmed at 40 digits.
    """
    if X_min < 1:
        raise ValueError("X_min must be at least 1")
    rats = [r for r in (_rational_root(s) for s in A) if r is not None]
    irr = [s for s in A if _rational_root(s) is None]
    masks = _residue_masks(rats, D0)
    alphas = np.sqrt(np.array([float(s) for s in irr]))
    bound = 1.0 / D0
    lo = X_min
    while lo <= X_cap:
        hi = min(X_cap, lo + block - 1)
        X = np.arange(lo, hi + 1, dtype=np.int64)
        ok = np.ones(len(X), bool)
        for v, m in masks.items():
            ok &= m[X % v]
        cand = X[ok]
        for a in alphas:
            if len(cand) == 0:
                break
            t = a * cand.astype(float)
            f = t - np.floor(t)
            cand = cand[np.minimum(f, 1 - f) <= bound + 1e-6]
        for x in cand:
            x = int(x)
            if all(dist_sqrt_times(s, x) <= bound + slack for s in irr):
                return x
        lo = hi + 1
    raise NotFound(f"no X in [{X_min}, {X_cap}] meets all {len(A)} constraints")


def max_violation(A: list[Fraction], D0: int, X: int) -> float:
    """Independent re-check: max over A of ||sqrt(s) X|| - 1/D0 at 40 digits."""
    return max(dist_sqrt_times(s, X) for s in A) - 1.0 / D0


def rational_lattice_point(A: list[Fraction], X_min: int) -> int:
    """Smallest multiple of the lcm of the rational denominators that is >= X_min.

    Such an X meets every rational constraint exactly (||alpha X|| = 0).
    """
    L = 1
    for s in A:
        r = _rational_root(s)
        if r is not None:
            L = math.lcm(L, r.denominator)
    return L * max(1, -(-X_min // L))


# ---------------------------------------------------------------------------
# Certificate
# ---------------------------------------------------------------------------

def achieved_sum(q: int, P: int, X: int) -> float:
    """The upsilon-weighted double sum over d <= sqrt(P) evaluated at the integer X."""
    total = []
    odd = q % 2 == 1
    for d in range(1, math.isqrt(P) + 1):
        M = d * d * P * P
        plain, tw = r2_weighted_table(M, d, q)
        m = np.arange(1, M + 1, dtype=np.int64)
        amp = m.astype(float) ** -0.75 * upsilon(np.sqrt(m.astype(float)) / (d * P))
        frac = sqrt_frac(scaled(m, X * X), 1, d)  # sqrt(m) X / d mod 1
        wd = d ** -(q - 1.5)
        if odd:
            cp = np.cos(2 * np.pi * frac + np.pi / 4)
            total.append(chi(d) * wd * math.fsum(plain[1:] * amp * cp))
            if d % 4 == 0:
                cm = np.cos(-2 * np.pi * frac + np.pi / 4)
                total.append((-1) ** ((q - 1) // 2) * 2**q * wd * math.fsum(tw[1:] * amp * cm))
        else:
            xd = int(xi_array(np.array([d]), q)[0])
            cp = np.cos(2 * np.pi * frac + np.pi / 4)
            total.append(xd * wd * math.fsum(plain[1:] * amp * cp))
    return math.fsum(total)


def delta_hat_factor(q: int) -> float:
    """The factor turning sup |Delta_q| into the smoothed quantity bounded below."""
    return 2.0 ** (3 - q) * math.pi if q % 2 else 4 * math.pi


@dataclass(frozen=True)
class ResonanceCertificate:
    q: int
    P: int
    D0: int
    A: tuple
    X: int
    threshold: float
    achieved: float
    witness_x: float
    witness_value: float   # delta_hat_factor * |Delta_q(witness_x)|
    neighborhood_median: float
    max_violation: float
    status: str            # 'PASS' or 'FAILED'
    reason: str


def omega_hunt(q: int, P: int, X_cap: int = 10**7, scan_points: int = 201) -> ResonanceCertificate:
    """Pipeline D0 -> A(P) -> X -> achieved sum vs threshold -> witness scan near X."""
    D0 = choose_D0(q)
    A = resonance_set(q, P, D0)
    threshold = 0.5 * omega_q(q) * script_L(q, D0) * math.sqrt(P)
    reasons = []
    try:
        X = dirichlet_search(A, D0, P * P, X_cap)
        found = True
    except NotFound as exc:
        found = False
        X = rational_lattice_point(A, P * P)
        reasons.append(f"{exc}; evaluated at X={X}, which meets only the rational constraints")
    viol = max_violation(A, D0, X)
    achieved = achieved_sum(q, P, X)
    if achieved < threshold:
        reasons.append(f"achieved {achieved:.6g} < threshold {threshold:.6g}")

    wx = wv = med = float("nan")
    if q * (X + 2) > MAX_TABLE_ENTRIES:
        reasons.append("witness scan skipped: counting near sqrt(X) exceeds the table budget")
    else:
        fac = delta_hat_factor(q)
        n = scan_points // 2
        xs = [Fraction(X) + Fraction(k, n) for k in range(-n, n + 1) if X + Fraction(k, n) > 0]
        vals = np.array([abs(counting.normalized_delta(q, x)) for x in xs])
        i = int(np.argmax(vals))
        wx, wv, med = float(xs[i]), fac * float(vals[i]), fac * float(np.median(vals))
    ok = found and viol <= 1e-9 and achieved >= threshold
    return ResonanceCertificate(q, P, D0, tuple(A), X, threshold, achieved, wx, wv, med, viol,
                                "PASS" if ok else "FAILED", "; ".join(reasons))
