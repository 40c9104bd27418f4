"""Cygan-Koranyi norm, Heisenberg dilations, ball volume, brute-force counts.

Points are (v, w) with v in R^{2q} and w real.  The unit ball is
B = {(v, w) : |v|^4 + w^2 <= 1}, and delta_x(v, w) = (x v, x^2 w).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import CapacityError

# Largest number of half-vectors the brute-force oracle will enumerate.
BRUTE_BUDGET = 20_000_000


@dataclass(frozen=True)
class HeisenbergPoint:
    v: tuple
    w: int | float

    def __post_init__(self):
        if len(self.v) % 2:
            raise ValueError("v must have even length 2q")

    @property
    def q(self) -> int:
        return len(self.v) // 2


def ck_norm(p: HeisenbergPoint) -> float:
    """(|v|^4 + w^2)^{1/4}; the inner sums are exact for integer input."""
    s = sum(c * c for c in p.v)
    return float((s * s + p.w * p.w) ** 0.25)


def dilate(p: HeisenbergPoint, x) -> HeisenbergPoint:
    return HeisenbergPoint(tuple(x * c for c in p.v), x * x * p.w)


def symplectic(v: tuple, vp: tuple) -> float:
    """<Jv, v'> with J = [[0, I], [-I, 0]]."""
    q = len(v) // 2
    return sum(v[q + i] * vp[i] - v[i] * vp[q + i] for i in range(q))


def group_mul(p: HeisenbergPoint, pp: HeisenbergPoint) -> HeisenbergPoint:
    v = tuple(a + b for a, b in zip(p.v, pp.v))
    return HeisenbergPoint(v, p.w + pp.w + 2 * symplectic(p.v, pp.v))


# ---------------------------------------------------------------------------
# Volume
# ---------------------------------------------------------------------------

def ball_volume(q: int) -> float:
    """vol(B) = (pi^q / Gamma(q)) B(q/2, 3/2).

    Polar coordinates in R^{2q}: |S^{2q-1}| = 2 pi^q / Gamma(q) and the fibre
    over |v| = r has length 2 sqrt(1 - r^4).  With u = r^4 the radial integral
    int_0^1 r^{2q-1} 2 sqrt(1 - r^4) dr becomes B(q/2, 3/2) / 2.
    """
    if q < 1:
        raise ValueError("q must be positive")
    return math.pi**q / math.gamma(q) * special.beta(q / 2, 1.5)


def ball_volume_mp(q: int, dps: int = 40) -> mpmath.mpf:
    with mpmath.workdps(dps):
        return mpmath.pi**q / mpmath.gamma(q) * mpmath.beta(mpmath.mpf(q) / 2, mpmath.mpf(3) / 2)


def ball_volume_quadrature(q: int) -> float:
    """Independent 1-D radial quadrature of the same volume."""
    shell = 2 * math.pi**q / math.gamma(q)
    val, _ = integrate.quad(lambda r: r ** (2 * q - 1) * 2 * math.sqrt(max(0.0, 1 - r**4)),
                            0, 1, epsabs=0, epsrel=1e-13, limit=200)
    return shell * val


def ball_volume_montecarlo(q: int, n: int = 10**7, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo estimate (mean, standard error) over the box [-1,1]^{2q+1}."""
    rng = np.random.default_rng(seed)
    hits, done, chunk = 0, 0, 1_000_000
    while done < n:
        k = min(chunk, n - done)
        v = rng.uniform(-1, 1, size=(k, 2 * q))
        w = rng.uniform(-1, 1, size=k)
        s = np.einsum("ij,ij->i", v, v)
        hits += int(np.count_nonzero(s * s + w * w <= 1))
        done += k
    box = 2.0 ** (2 * q + 1)
    p = hits / n
    return box * p, box * math.sqrt(p * (1 - p) / n)


# ---------------------------------------------------------------------------
# Exact handling of the dilation parameter
# ---------------------------------------------------------------------------

def quartic(x, x4=None) -> Fraction:
    """x^4 as an exact rational; ``x4`` overrides when the caller knows it."""
    if x4 is not None:
        return Fraction(x4)
    return Fraction(x) ** 4


def quartic_floor(x, x4=None) -> int:
    return math.floor(quartic(x, x4))


# ---------------------------------------------------------------------------
# Brute force
# ---------------------------------------------------------------------------

def _half_norm_histogram(k: int, R: int) -> np.ndarray:
    """Histogram of |u|^2 over explicitly enumerated u in [-R, R]^k."""
    side = 2 * R + 1
    if side**k > BRUTE_BUDGET:
        raise CapacityError(f"brute force would enumerate {side ** k} half-vectors")
    coords = np.arange(-R, R + 1, dtype=np.int64) ** 2
    norms = np.zeros(1, dtype=np.int64)
    for _ in range(k):
        norms = (norms[:, None] + coords[None, :]).ravel()
    return np.bincount(norms)


def _vector_norm_counts(q: int, R: int) -> np.ndarray:
    """N[s] = #{v in [-R, R]^{2q} : |v|^2 = s}, built from two enumerated halves."""
    h1 = _half_norm_histogram(q, R)
    return np.convolve(h1, h1)


def brute_force_count(q: int, x, x4=None) -> int:
    """|Z^{2q+1} cap delta_x B| by enumeration of lattice vectors."""
    T = quartic_floor(x, x4)
    return brute_force_counts(q, [T])[0]


def brute_force_counts(q: int, x4_values) -> list[int]:
    """Brute-force counts for several integer values of x^4 sharing one enumeration."""
    ts = [int(t) for t in x4_values]
    if not ts:
        return []
    Tmax = max(ts)
    R = math.isqrt(math.isqrt(Tmax))  # |v_i| <= x
    N = _vector_norm_counts(q, R)
    out = []
    for T in ts:
        smax = math.isqrt(T)
        total = 0
        W = math.isqrt(T)
        w = np.arange(-W, W + 1, dtype=np.int64)
        w2 = w * w
        for s in range(0, min(smax, len(N) - 1) + 1):
            if N[s] == 0:
                continue
            nw = int(np.count_nonzero(s * s + w2 <= T))
            total += int(N[s]) * nw
        out.append(total)
    return out


def brute_force_count_naive(q: int, x, x4=None) -> int:
    """Literal loop over every lattice point; only usable for tiny x."""
    T = quartic_floor(x, x4)
    R = math.isqrt(math.isqrt(T))
    W = math.isqrt(T)
    if (2 * R + 1) ** (2 * q) * (2 * W + 1) > 5_000_000:
        raise CapacityError("naive enumeration too large")
    count = 0
    for v in itertools.product(range(-R, R + 1), repeat=2 * q):
        s = sum(c * c for c in v)
        for w in range(-W, W + 1):
            if s * s + w * w <= T:
                count += 1
    return count
