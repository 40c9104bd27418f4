"""Command-line front end.

Every run writes one document: JSON (``"schema": 1`` plus config, budgets and
results) or CSV preceded by ``#`` header lines carrying the same config and
budgets.  Floats are printed with 17 significant digits.  Thread count and
output path are left out of the config so runs that differ only in those
produce identical bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from . import acceptance, budgets, counting, moments, resonance, trig
from .errors import CapacityError, NotFound, PolicyError

SCHEMA = 1
THREADS_ENV = "HEISENLAT_THREADS"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def fmt_float(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        return "null"
    return format(v, ".17g")


def to_json(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, (str, Fraction)):
        return json.dumps(str(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v)).replace("null", "nan")
    return str(v)


def render(config: dict, rows: list[dict], fmt: str, extra: dict | None = None) -> str:
    if fmt == "json":
        doc = {"schema": SCHEMA, "config": config, "budgets": budgets.registry(), "results": rows}
        doc.update(extra or {})
        return to_json(doc) + "\n"
    lines = [f"# schema: {SCHEMA}",
             f"# config: {json.dumps(json.loads(to_json(config)), sort_keys=True)}",
             f"# budgets: {json.dumps(json.loads(to_json(budgets.registry())), sort_keys=True)}"]
    if rows:
        cols = list(rows[0])
        lines.append(",".join(cols))
        lines += [",".join(csv_cell(r[c]) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


def write_atomic(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".heisenlat-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Subcommands; each returns (rows, extra, ok)
# ---------------------------------------------------------------------------

def _positive(v: Fraction, name: str) -> Fraction:
    if v <= 0:
        raise UsageError(f"{name} must be positive")
    return v


def _ascending(vals, name: str):
    if not vals or list(vals) != sorted(set(vals)):
        raise UsageError(f"{name} must be non-empty and strictly ascending")
    return vals


def cmd_count(a):
    if (a.x is None) == (a.x4 is None):
        raise UsageError("give exactly one of --x, --x4")
    if a.x is not None:
        s = counting.error_term(a.q, x=_positive(a.x, "x"))
    else:
        s = counting.error_term(a.q, x4=_positive(a.x4, "x4"))
    return [{"q": a.q, "x": s.x, "x4": s.x4, "count": s.count, "main": s.main, "err": s.err}], {}, True


def cmd_scan(a):
    if not 1 <= a.x4_min <= a.x4_max:
        raise UsageError("need 1 <= x4-min <= x4-max")
    ts = range(a.x4_min, a.x4_max + 1, a.x4_step)
    p = 2 * a.q - Fraction(2, 3)
    rows = [{"q": a.q, "x": s.x, "count": s.count, "main": s.main, "err": s.err,
             "err_over_x_pow": s.err / s.x ** float(p)} for s in counting.scan(a.q, ts, a.threads)]
    return rows, {}, True


def cmd_mean_square(a):
    grid = _ascending(a.X, "X")
    if not a.predict:
        rows = [{"q": a.q, "X": X, "mean_square": moments.mean_square_exact(a.q, _positive(X, "X"), a.threads)}
                for X in grid]
        return rows, {}, True
    series = moments.singular_series(a.q, a.tol)
    reps = moments.moment_report(a.q, grid, series, a.threads)
    return [r._asdict() for r in reps], {"series": series._asdict()}, True


def cmd_series(a):
    if a.tol <= 0:
        raise UsageError("tol must be positive")
    return [moments.singular_series(a.q, a.tol)._asdict()], {}, True


def cmd_approx(a):
    if a.mode == "delta":
        if a.x is None:
            raise UsageError("delta mode needs --x")
        r = trig.approx_error(a.q, x=_positive(a.x, "x"), H=a.H, mode="delta", X=a.X)
    else:
        if (a.x is None) == (a.x4 is None):
            raise UsageError("give exactly one of --x, --x4")
        r = trig.approx_error(a.q, x=a.x, x4=a.x4, H=a.H, mode=a.mode)
    row = {"q": a.q, **r._asdict(), "residual": abs(r.target - r.leading)}
    return [row], {}, row["residual"] <= r.envelope


def cmd_vaaler(a):
    rng = np.random.default_rng(a.seed)
    omegas = rng.uniform(-a.span, a.span, a.n)
    rows = []
    for H in _ascending(a.H, "H"):
        n, worst = trig.vaaler_violations(H, omegas, a.slack)
        rows.append({"H": H, "samples": a.n, "violations": n, "max_excess": worst})
    return rows, {}, all(r["violations"] == 0 for r in rows)


def cmd_bprocess(a):
    rows = []
    for x in _ascending(a.x, "x"):
        for d in range(1, a.d_max + 1):
            for h in range(1, a.h_max + 1):
                for k in a.kind:
                    lhs = trig.bprocess_lhs(a.q, x**4, d, h, k)
                    rhs = trig.bprocess_rhs(a.q, x**4, d, h, k)
                    rows.append({"q": a.q, "x": x, "d": d, "h": h, "kind": k,
                                 "lhs_re": lhs.real, "lhs_im": lhs.imag,
                                 "rhs_re": rhs.real, "rhs_im": rhs.imag,
                                 "normalized": abs(lhs - rhs) / trig.bprocess_normalizer(x**4, d, h)})
    worst = max(r["normalized"] for r in rows)
    return rows, {"max_normalized": worst}, worst <= budgets.get("bprocess")


def cmd_omega(a):
    c = resonance.omega_hunt(a.q, a.P, a.X_cap)
    row = dataclasses.asdict(c)
    row["A"] = [str(s) for s in c.A]
    return [row], {}, c.status == "PASS"


def cmd_verify(a):
    if a.q != 3:
        raise UsageError("verify covers q = 3 (criteria 1 and 2 also sweep q = 4, 5)")
    results = acceptance.run_all(fast=a.fast, threads=a.threads)
    for r in results:
        print(r.line(), file=sys.stderr)
    rows = [{"criterion": r.number, "title": r.title, "passed": r.passed, "metrics": r.metrics}
            for r in results]
    ok = all(r.passed for r in results)
    return rows, {"passed": ok}, ok


COMMANDS = {
    "count": cmd_count, "scan": cmd_scan, "mean-square": cmd_mean_square, "series": cmd_series,
    "approx": cmd_approx, "vaaler": cmd_vaaler, "bprocess": cmd_bprocess, "omega": cmd_omega,
    "verify": cmd_verify,
}

# Subcommands whose rows are flat and fit a CSV table.
CSV_OK = {"count", "scan", "mean-square", "vaaler", "bprocess", "approx"}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _frac(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {s!r}")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=int, default=3)
    common.add_argument("--threads", type=int, default=_default_threads(),
                        help=f"worker threads (default from ${THREADS_ENV}, else 1)")
    common.add_argument("--out", help="output file, written atomically (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="heisenlat", description="Lattice points in Heisenberg norm balls.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("count", parents=[common], help="count, main term and error at one radius")
    s.add_argument("--x", type=_frac)
    s.add_argument("--x4", type=_frac)

    s = sub.add_parser("scan", parents=[common], help="error terms over integer x^4")
    s.add_argument("--x4-min", type=int, default=1)
    s.add_argument("--x4-max", type=int, required=True)
    s.add_argument("--x4-step", type=int, default=1)

    s = sub.add_parser("mean-square", parents=[common], help="(1/X) int_X^{2X} E^2 dx")
    s.add_argument("--X", type=_frac, nargs="+", required=True)
    s.add_argument("--predict", action="store_true", help="add the series prediction and ratio")
    s.add_argument("--tol", type=float, default=1e-6)

    s = sub.add_parser("series", parents=[common], help="the singular series of the second moment")
    s.add_argument("--tol", type=float, default=1e-6)

    s = sub.add_parser("approx", parents=[common], help="trigonometric approximation of the error")
    s.add_argument("--mode", choices=("moment", "bound", "delta"), default="moment")
    s.add_argument("--x", type=_frac)
    s.add_argument("--x4", type=_frac)
    s.add_argument("--H", type=float)
    s.add_argument("--X", type=float, help="delta mode: scale X for H = X/2")

    s = sub.add_parser("vaaler", parents=[common], help="Vaaler inequality on random points")
    s.add_argument("--H", type=float, nargs="+", default=[3, 10, 100])
    s.add_argument("--n", type=int, default=10**4)
    s.add_argument("--span", type=float, default=50.0)
    s.add_argument("--slack", type=float, default=1e-12)

    s = sub.add_parser("bprocess", parents=[common], help="B-process dual-sum discrepancies")
    s.add_argument("--x", type=int, nargs="+", default=[20, 25, 30, 35, 40])
    s.add_argument("--d-max", type=int, default=5)
    s.add_argument("--h-max", type=int, default=10)
    s.add_argument("--kind", choices=trig.KINDS, nargs="+", default=["g", "ghat"])

    s = sub.add_parser("omega", parents=[common], help="resonance certificate")
    s.add_argument("--P", type=int, required=True)
    s.add_argument("--X-cap", type=int, default=10**7)

    s = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    s.add_argument("--fast", action="store_true", help="reduced grids; skips criteria 6 and 9")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.q < 3:
            raise UsageError("q must be at least 3")
        if a.threads < 1:
            raise UsageError("threads must be at least 1")
        if a.format == "csv" and a.command not in CSV_OK:
            raise UsageError(f"{a.command} output is nested; use --format json")
        rows, extra, ok = COMMANDS[a.command](a)
    except UsageError as exc:
        print(f"heisenlat: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except PolicyError as exc:
        print(f"heisenlat: error: {exc}", file=sys.stderr)
        return 2
    except (CapacityError, NotFound, ArithmeticError, ValueError, MemoryError) as exc:
        print(f"heisenlat: computation failed: {exc}", file=sys.stderr)
        return 1
    config = {k: v for k, v in sorted(vars(a).items()) if k not in ("threads", "out", "format")}
    write_atomic(a.out, render(config, rows, a.format, extra))
    if a.command == "verify" and not ok:
        return 1
    return 0


def main() -> None:
    sys.exit(run())
