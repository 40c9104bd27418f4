"""Frozen constants standing in for unspecified O(.) terms.

Each entry was fitted once on the listed calibration grid (see
``heisenlat.calibration``), multiplied by a headroom factor and rounded up.
Tests and the CLI only ever read these frozen values.
"""

from __future__ import annotations

from typing import NamedTuple


class Budget(NamedTuple):
    value: float
    fitted: float
    grid: str
    meaning: str


_REGISTRY: dict[str, Budget] = {
    "bprocess": Budget(
        0.74, 0.368653, "q=3, x in {22,27,33}, d<=5, h<=10, kinds g/ghat",
        "max |LHS-RHS| / (log 2h + d + h/(d x^2)) for the dual-sum identities (hard cap 10)"),
    "moment_slack": Budget(
        2.1, 1.03445, "q=3, integer x in 10..30 except 16, 20, 24",
        "C in C x^{2q-2} log^2 x added to the moment-mode envelope"),
    "moment_residual": Budget(
        12.0, 5.70247, "q=3, integer x in 10..30 except 16, 20, 24",
        "max |E_q - leading| / (x^4 log^2 x) in moment mode"),
    "delta_O1": Budget(
        4.4, 2.18787, "q=3, x = 40 + 7k/3 for 0 <= k <= 18",
        "O(1) term added to the delta-mode envelope"),
    "shape_C": Budget(
        29.0, 14.1676, "q=3, x^4 = k + 1/2 for 0 <= k < 1296",
        "max |E_3(x)| / x^{16/3}"),
    "bound_C": Budget(
        11.0, 5.03898, "q=3, x^4 = k + 1/2 for 3 <= k < 1296",
        "C in |E_q - leading| <= C * envelope for the H = x^{2/3} chain"),
    "coeff_C": Budget(
        29.0, 14.077, "q=3, H in {40, 60}, 1 <= m <= H",
        "C in |4 pi m^{3/4} a_H(m,1) - r_2(m,1;q)| <= C m / H^2"),
    "weighted_C": Budget(
        1.2, 0.587929, "q=3, Y in 20..400 step 20",
        "C in |S_q(Y) - main| <= C Y^{q-2} log Y (cap 10)"),
    "sqrt_sum_O1": Budget(
        11.0, 5.03782, "q=3, d in 1..5, P in {50, 200, 1000}",
        "O(1) in sum_m r_2(m,d;q) m^{-3/4} v(sqrt m/(dP)) = omega_q (P/d)^{1/2} + O(1)"),
    "fejer_C": Budget(
        0.11, 0.0506494, "P in {5,10,20}, theta/P in {0.05,...,4} clustered at 1, gamma in {0, 1, pi/2}",
        "C in |integral - predicted| <= C / |theta|"),
}


def get(name: str) -> float:
    return _REGISTRY[name].value


def registry() -> dict[str, dict]:
    """Plain-dict view used for output headers."""
    return {k: b._asdict() for k, b in sorted(_REGISTRY.items())}
