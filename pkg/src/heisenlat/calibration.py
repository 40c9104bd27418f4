"""Refit every budget on its calibration grid.

The frozen values in ``budgets`` were produced by ``freeze(fit())``; rerunning
``fit`` reproduces the fitted column.  Calibration grids never overlap the
grids used by the acceptance checks.
"""

from __future__ import annotations

import math
from fractions import Fraction

from . import budgets, counting, resonance, trig
from .arithmetic import r2_weighted

HEADROOM = 2.0

MOMENT_TEST_X = (16, 20, 24)
MOMENT_CAL_X = tuple(x for x in range(10, 31) if x not in MOMENT_TEST_X)


def nice_ceil(v: float) -> float:
    """Round up to two significant digits."""
    if v <= 0:
        return 0.0
    e = math.floor(math.log10(v)) - 1
    return math.ceil(v / 10**e) * 10**e


def freeze(fitted: float) -> float:
    return nice_ceil(HEADROOM * fitted)


def fit_bprocess(xs=(22, 27, 33), kinds=("g", "ghat")) -> float:
    return max(trig.bprocess_discrepancy(3, x**4, d, h, k)
               for x in xs for d in range(1, 6) for h in range(1, 11) for k in kinds)


def _moment_parts(x: int):
    r = trig.approx_error(3, x4=x**4, mode="moment")
    scale = x**4 * math.log(x) ** 2
    residual = abs(r.target - r.leading)
    bare_env = r.envelope - budgets.get("moment_slack") * scale
    return residual, bare_env, scale


def fit_moment(xs=MOMENT_CAL_X) -> tuple[float, float]:
    """(slack, residual) fits: slack covers residual minus the bare envelope."""
    slack = resid = 0.0
    for x in xs:
        res, env, scale = _moment_parts(x)
        slack = max(slack, (res - env) / scale)
        resid = max(resid, res / scale)
    return slack, resid


def delta_cal_grid():
    return [Fraction(40) + Fraction(7 * k, 3) for k in range(19)]


def fit_delta(grid=None) -> float:
    worst = 0.0
    for x in grid or delta_cal_grid():
        r = trig.approx_error(3, x=x, mode="delta")
        bare = r.envelope - budgets.get("delta_O1")
        worst = max(worst, abs(r.target - r.leading) - bare)
    return worst


def half_grid():
    """x^4 = k + 1/2: the calibration grid for the x^4 <= 1296 scan checks."""
    return [Fraction(2 * k + 1, 2) for k in range(3, 1296)]


def fit_shape(grid=None) -> float:
    grid = grid or [Fraction(2 * k + 1, 2) for k in range(1296)]
    return max(abs(counting.error_term(3, x4=t).err) / float(t) ** (4 / 3) for t in grid)


def fit_bound(grid=None) -> float:
    worst = 0.0
    for t in grid or half_grid():
        r = trig.approx_error(3, x4=t, mode="bound")
        worst = max(worst, abs(r.target - r.leading) / r.envelope)
    return worst


def coeff_ratio(q: int, H: float) -> float:
    tab = trig.build_coeff_tables(q, H, 1)
    worst = 0.0
    for m in range(1, math.floor(H) + 1):
        r = r2_weighted(m, 1, q)
        if r > 0:
            worst = max(worst, abs(4 * math.pi * m**0.75 * tab.get(m, 1) - r) / (m / H**2))
    return worst


def fit_coeff(Hs=(40, 60)) -> float:
    return max(coeff_ratio(3, H) for H in Hs)


def weighted_ratio(Y: float) -> float:
    w = counting.weighted_sum(3, "S", Y=Y)
    return abs(w.residual) / (Y * math.log(Y))


def fit_weighted(Ys=tuple(range(20, 401, 20))) -> float:
    return max(weighted_ratio(Y) for Y in Ys)


def sqrt_sum_residual(q: int, d: int, P: float) -> float:
    main = resonance.omega_q(q) * math.sqrt(P / d)
    return max(abs(resonance.sqrt_sum(q, d, P) - main), abs(resonance.sqrt_sum(q, d, P, True)))


def fit_sqrt_sum(Ps=(50, 200, 1000)) -> float:
    return max(sqrt_sum_residual(3, d, P) for d in range(1, 6) for P in Ps)


def fejer_ratio(P, theta, gamma) -> float:
    val, pred = resonance.fejer_identity_check(P, theta, gamma)
    return abs(val - pred) * abs(theta)


FEJER_RATIOS = (0.05, 0.1, 0.25, 0.5, 0.9, 0.97, 0.99, 1.0, 1.01, 1.03, 1.1, 2, 4)


def fit_fejer(Ps=(5, 10, 20), ratios=FEJER_RATIOS, gammas=(0.0, 1.0, math.pi / 2)) -> float:
    """theta runs over multiples of P; the residual peaks at the kink |theta| = P."""
    return max(fejer_ratio(P, r * P, g) for P in Ps for r in ratios for g in gammas)


def fit() -> dict[str, float]:
    slack, resid = fit_moment()
    return {
        "bprocess": fit_bprocess(),
        "moment_slack": slack,
        "moment_residual": resid,
        "delta_O1": fit_delta(),
        "shape_C": fit_shape(),
        "bound_C": fit_bound(),
        "coeff_C": fit_coeff(),
        "weighted_C": fit_weighted(),
        "sqrt_sum_O1": fit_sqrt_sum(),
        "fejer_C": fit_fejer(),
    }


if __name__ == "__main__":
    for k, v in fit().items():
        print(f"{k:16s} fitted={v:.6g} frozen={freeze(v):.6g}")
