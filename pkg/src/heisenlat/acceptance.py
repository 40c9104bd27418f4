"""The acceptance checks, shared by ``heisenlat verify`` and the test-suite.

Each check returns a ``CriterionResult`` whose ``metrics`` hold only
deterministic values (no timings), so two runs produce identical reports.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from . import budgets, counting, geometry, moments, resonance, trig
from .arithmetic import rho_2q
from .errors import PolicyError


class CriterionResult(NamedTuple):
    number: int
    title: str
    passed: bool
    metrics: dict

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} criterion {self.number}: {self.title}"


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_plain(u) for u in v]
    return v


def _result(number: int, title: str, ok, metrics: dict) -> CriterionResult:
    return CriterionResult(number, title, bool(ok), {k: _plain(v) for k, v in metrics.items()})


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def counting_oracle(fast: bool = False, threads: int = 1) -> CriterionResult:
    tmax = 256 if fast else 1296
    ts = range(1, tmax + 1)
    mism = {}
    for q in (3, 4, 5):
        brute = geometry.brute_force_counts(q, ts)
        quick = [s.count for s in counting.scan(q, ts, threads)]
        mism[f"q{q}_mismatches"] = sum(a != b for a, b in zip(brute, quick))
    ok = all(v == 0 for v in mism.values())
    return _result(1, "fast count equals brute force", ok, {"x4_max": tmax, **mism})


def divisor_formula(fast: bool = False, threads: int = 1) -> CriterionResult:
    M = 10**4 if fast else 10**5
    metrics = {"m_max": M}
    for q in (3, 4):
        tab = counting.rep_table(q, M).r(q)
        metrics[f"q{q}_mismatches"] = sum(rho_2q(q, m) != int(tab[m]) for m in range(1, M + 1))
    ok = metrics["q3_mismatches"] == 0 and metrics["q4_mismatches"] == 0
    return _result(2, "divisor formula equals convolution table", ok, metrics)


def volume_triangulation(fast: bool = False, threads: int = 1) -> CriterionResult:
    quad = max(_rel(geometry.ball_volume_quadrature(q), geometry.ball_volume(q)) for q in range(3, 9))
    asm = max(_rel(counting.volume_assembly(q), geometry.ball_volume(q)) for q in range(3, 9))
    v3 = geometry.ball_volume(3)
    lit = _rel(v3, math.pi**4 / 32)
    metrics = {
        "max_rel_quadrature": quad,
        "max_rel_assembly": asm,
        "vol3": v3,
        "rel_to_pi4_over_32": lit,
        "rel_to_pi4_over_16": _rel(v3, math.pi**4 / 16),
    }
    ok = quad <= 1e-10 and asm <= 1e-8 and lit <= 1e-12
    return _result(3, "volume triangulation (including vol = pi^4/32 at q = 3)", ok, metrics)


def vaaler_inequality(fast: bool = False, threads: int = 1) -> CriterionResult:
    rng = np.random.default_rng(20240601)
    omegas = rng.uniform(-50, 50, 10**4)
    metrics = {}
    for H in (3, 10, 100):
        n, worst = trig.vaaler_violations(H, omegas, 1e-12)
        metrics[f"H{H}_violations"] = n
        metrics[f"H{H}_max_excess"] = worst
    ok = all(metrics[f"H{H}_violations"] == 0 for H in (3, 10, 100))
    return _result(4, "Vaaler inequality", ok, metrics)


def bprocess_identity(fast: bool = False, threads: int = 1) -> CriterionResult:
    worst = max(trig.bprocess_discrepancy(3, x**4, d, h, k)
                for x in (20, 25, 30, 35, 40) for d in range(1, 6) for h in range(1, 11)
                for k in ("g", "ghat"))
    b = budgets.get("bprocess")
    return _result(5, "B-process dual sums", worst <= b and b <= 10,
                   {"max_normalized_discrepancy": worst, "budget": b})


def second_moment(fast: bool = False, threads: int = 1) -> CriterionResult:
    grid = (8, 12, 16, 24, 32)
    series = moments.singular_series(3, tol=1e-6)
    reps = moments.moment_report(3, grid, series, threads)
    slope = reps[0].slope
    ratio = reps[-1].ratio
    metrics = {
        "slope": slope,
        "ratio_at_32": ratio,
        "series": series.value,
        "schedule_gap": series.schedule_gap,
        "series_M": series.truncation[1],
    }
    for r in reps:
        metrics[f"mean_square_X{int(r.X)}"] = r.mean_square
    ok = abs(slope - 10) <= 0.5 and 0.4 <= ratio <= 2.5 and series.schedule_gap <= 1e-6
    return _result(6, "second moment slope and ratio", ok, metrics)


def moment_approximation(fast: bool = False, threads: int = 1) -> CriterionResult:
    metrics = {}
    ok = True
    for x in (16, 20, 24):
        r = trig.approx_error(3, x4=x**4, mode="moment")
        res = abs(r.target - r.leading)
        norm = res / (x**4 * math.log(x) ** 2)
        metrics[f"x{x}_residual"] = res
        metrics[f"x{x}_envelope"] = r.envelope
        metrics[f"x{x}_residual_over_x4log2"] = norm
        ok &= res <= r.envelope and norm <= budgets.get("moment_residual")
    return _result(7, "trigonometric approximation with H = x^2/2", ok, metrics)


def shape_and_bound(fast: bool = False, threads: int = 1) -> CriterionResult:
    tmax = 256 if fast else 1296
    samples = counting.scan(3, range(1, tmax + 1), threads)
    shape = max(abs(s.err) / float(s.x4) ** (4 / 3) for s in samples)
    C = budgets.get("bound_C")
    worst = 0.0
    excluded = []
    trivial_ok = True
    for t in range(1, tmax + 1):
        try:
            r = trig.approx_error(3, x4=t, mode="bound")
        except PolicyError:
            excluded.append(t)
            continue
        worst = max(worst, abs(r.target - r.leading) / r.envelope)
        trivial_ok &= abs(r.leading) <= r.trivial
    metrics = {"x4_max": tmax, "max_abs_E_over_x_16_3": shape, "shape_budget": budgets.get("shape_C"),
               "max_bound_ratio": worst, "bound_C": C, "excluded_x4": excluded,
               "trivial_chain_ok": trivial_ok}
    ok = shape <= budgets.get("shape_C") and worst <= C and trivial_ok
    return _result(8, "x^{2q-2/3} shape and the H = x^{2/3} chain", ok, metrics)


def resonance_certificates(fast: bool = False, threads: int = 1) -> CriterionResult:
    metrics = {}
    ok = True
    for P in (4, 9):
        c = resonance.omega_hunt(3, P)
        metrics[f"P{P}_status"] = c.status
        metrics[f"P{P}_D0"] = c.D0
        metrics[f"P{P}_set_size"] = len(c.A)
        metrics[f"P{P}_X"] = c.X
        metrics[f"P{P}_threshold"] = c.threshold
        metrics[f"P{P}_achieved"] = c.achieved
        metrics[f"P{P}_max_violation"] = c.max_violation
        metrics[f"P{P}_reason"] = c.reason
        passed = c.status == "PASS" and c.max_violation <= 1e-9
        if passed:
            passed = c.witness_value >= 2 * c.neighborhood_median
        ok &= passed
    return _result(9, "resonance certificates for P = 4, 9", ok, metrics)


def integrator_oracle(fast: bool = False, threads: int = 1) -> CriterionResult:
    rng = np.random.default_rng(7)
    n = 3 if fast else 10
    worst = 0.0
    pairs = []
    for _ in range(n):
        q = int(rng.integers(3, 6))
        X = Fraction(int(rng.integers(8, 29)), 8)
        a = moments.mean_square_exact(q, X, threads)
        b = moments.mean_square_quadrature(q, X)
        worst = max(worst, _rel(a, b))
        pairs.append(f"{q}:{X}")
    return _result(10, "piecewise integral equals adaptive quadrature", worst <= 1e-9,
                   {"pairs": pairs, "max_rel": worst})


CHECKS: dict[int, Callable[..., CriterionResult]] = {
    1: counting_oracle,
    2: divisor_formula,
    3: volume_triangulation,
    4: vaaler_inequality,
    5: bprocess_identity,
    6: second_moment,
    7: moment_approximation,
    8: shape_and_bound,
    9: resonance_certificates,
    10: integrator_oracle,
}

FAST_SKIP = (6, 9)


def run_all(fast: bool = False, threads: int = 1, only=None) -> list[CriterionResult]:
    nums = sorted(only) if only else [n for n in CHECKS if not (fast and n in FAST_SKIP)]
    return [CHECKS[n](fast=fast, threads=threads) for n in nums]
