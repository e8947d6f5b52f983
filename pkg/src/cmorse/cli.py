"""Command-line entry point: JSON problem files in, JSON reports and CSV tables out.

Exit codes: 0 when every selected route agrees, 2 when they disagree,
1 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .conjugate import DomainFamily, T_MIN_FRACTION, scan
from .constraint_matrix import index_limit
from .core import BoundaryCondition, ConstraintFunction, Interval, MorseError, Potential, SchroedingerProblem
from .discrete import DEFAULT_N, morse_index
from .maslov import DEFAULT_GRID, KERNEL_TOL, sweep
from .nls import DELTA, c_table, soliton, verdict, vk_slope

__all__ = ["PROBLEM_SCHEMA", "load_problem", "build_problem", "read_c_table", "run_routes", "main"]

ROUTES = ("direct", "matrix", "maslov", "conjugate")
EXIT_AGREE, EXIT_INPUT, EXIT_DISAGREE = 0, 1, 2

_positive = {"type": "number", "exclusiveMinimum": 0}
_table = {
    "type": "object",
    "properties": {"x": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                   "v": {"type": "array", "items": {"type": "number"}, "minItems": 2}},
    "required": ["x", "v"],
    "additionalProperties": False,
}
_constant = {
    "type": "object",
    "properties": {"value": {"type": "number"}},
    "required": ["value"],
    "additionalProperties": False,
}
_expression = {
    "type": "object",
    "properties": {
        "id": {"enum": ["harmonic", "cosine-series", "sech2"]},
        "scale": {"type": "number"},
        "shift": {"type": "number"},
        "width": _positive,
        "coefficients": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    },
    "required": ["id"],
    "additionalProperties": False,
}


def _kind(name, params):
    return {
        "type": "object",
        "properties": {"kind": {"const": name}, "params": params},
        "required": ["kind", "params"],
        "additionalProperties": False,
    }


PROBLEM_SCHEMA = {
    "type": "object",
    "properties": {
        "interval": {
            "type": "object",
            "properties": {"left": {"type": "number"}, "right": {"type": "number"}},
            "required": ["left", "right"],
            "additionalProperties": False,
        },
        "potential": {"oneOf": [_kind("constant", _constant), _kind("table", _table),
                                _kind("expression-id", _expression)]},
        "bc": {"enum": ["dirichlet", "neumann"]},
        "constraints": {"type": "array", "items": {"oneOf": [_kind("constant", _constant), _kind("table", _table)]}},
        "numerics": {
            "type": "object",
            "properties": {
                "steps": {"type": "integer", "minimum": 16},
                "lambda_grid": {"type": "integer", "minimum": 64},
                "t_grid": {"type": "integer", "minimum": 128},
                "n_interior": {"type": "integer", "minimum": 8},
                "t_min": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "tolerances": {
                    "type": "object",
                    "properties": {"kernel": _positive},
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    },
    "required": ["interval", "potential", "bc"],
    "additionalProperties": False,
}


class InputError(ValueError):
    pass


def _expression_potential(params: dict, interval: Interval) -> Potential:
    ident = params["id"]
    scale = params.get("scale", 1.0)
    shift = params.get("shift", 0.0)
    if ident == "harmonic":
        c = interval.midpoint
        return Potential(lambda x: scale * (x - c) ** 2 + shift, label="harmonic")
    if ident == "sech2":
        width = params.get("width", 1.0)
        c = interval.midpoint
        return Potential(lambda x: -scale / np.cosh((x - c) / width) ** 2 + shift, label="sech2")
    coeffs = np.asarray(params.get("coefficients", [0.0]), dtype=float)
    k = np.arange(len(coeffs))
    a, length = interval.left, interval.length

    def series(x):
        x = np.asarray(x, dtype=float)
        return np.cos(np.multiply.outer(x - a, k * np.pi / length)) @ coeffs + shift

    return Potential(series, label="cosine-series")


def _data(entry: dict, cls, interval):
    params = entry["params"]
    if entry["kind"] == "constant":
        return cls.constant(params["value"])
    if entry["kind"] == "table":
        xs, vs = params["x"], params["v"]
        if len(xs) != len(vs) or np.any(np.diff(xs) <= 0):
            raise InputError("table needs matching lengths and strictly increasing x")
        return cls.from_table(xs, vs)
    return _expression_potential(params, interval)


def build_problem(doc: dict) -> SchroedingerProblem:
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InputError(f"schema violation: {exc.message}") from None
    try:
        interval = Interval(doc["interval"]["left"], doc["interval"]["right"])
        potential = _data(doc["potential"], Potential, interval)
        constraints = tuple(_data(c, ConstraintFunction, interval) for c in doc.get("constraints", []))
        return SchroedingerProblem(interval, potential, BoundaryCondition(doc["bc"]), constraints)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def load_problem(path) -> tuple[SchroedingerProblem, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read problem file: {exc}") from None
    return build_problem(doc), doc.get("numerics", {})


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def run_routes(problem: SchroedingerProblem, routes, numerics: dict, steps: int | None = None) -> dict:
    """Run the selected index routes and collect their results in a report dictionary."""
    steps = steps if steps is not None else numerics.get("steps")
    grid = numerics.get("lambda_grid", DEFAULT_GRID)
    kernel_tol = numerics.get("tolerances", {}).get("kernel", KERNEL_TOL)
    results, indices, skipped = {}, {}, {}
    for route in routes:
        if route == "direct":
            n = morse_index(problem, numerics.get("n_interior", DEFAULT_N))
            results[route] = {"morse_index": n}
        elif route == "maslov":
            rep = sweep(problem, grid, steps, kernel_tol)
            results[route] = rep.as_dict()
            n = rep.morse_index
        elif route == "matrix":
            free = sweep(problem.unconstrained(), grid, steps, kernel_tol).morse_index
            lim = index_limit(problem, steps=steps)
            n = free - lim.limit
            results[route] = {"morse_index": n, "unconstrained_index": free, "index_limit": lim.as_dict()}
        else:
            if problem.bc is not BoundaryCondition.DIRICHLET:
                skipped[route] = "conjugate points are counted for the Dirichlet problem only"
                continue
            family = DomainFamily.about_midpoint(problem.interval, numerics.get("t_min", T_MIN_FRACTION))
            rep = scan(problem, family, numerics.get("t_grid", 256), steps)
            results[route] = rep.as_dict()
            n = rep.total_count
        indices[route] = int(n)
    return {
        "version": __version__,
        "routes": results,
        "indices": indices,
        "skipped": skipped,
        "agreement": len(set(indices.values())) <= 1,
        "numerics": {"steps": steps, "lambda_grid": grid, "kernel_tol": kernel_tol, **numerics},
    }


def _parse_routes(text: str):
    if text == "all":
        return ROUTES
    routes = tuple(r.strip() for r in text.split(",") if r.strip())
    bad = [r for r in routes if r not in ROUTES]
    if bad or not routes:
        raise InputError(f"unknown route(s) {bad}; choose from {', '.join(ROUTES)} or 'all'")
    return routes


def cmd_morse(args) -> int:
    problem, numerics = load_problem(args.spec)
    report = run_routes(problem, _parse_routes(args.routes), numerics, args.steps)
    _emit(_dump(report), args.out)
    return EXIT_AGREE if report["agreement"] else EXIT_DISAGREE


def write_defect_csv(table, handle):
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(["t", "defect", "multiplicity"])
    for t, d, k in table:
        writer.writerow([repr(float(t)), repr(float(d)), int(k)])


def cmd_conjugate_scan(args) -> int:
    problem, numerics = load_problem(args.spec)
    if problem.bc is not BoundaryCondition.DIRICHLET:
        raise InputError("conjugate-scan needs a Dirichlet problem")
    t_min = args.shrink_to if args.shrink_to is not None else numerics.get("t_min", T_MIN_FRACTION)
    if not 0 < t_min < 1:
        raise InputError("--shrink-to must lie in (0, 1)")
    family = DomainFamily.about_midpoint(problem.interval, t_min)
    rep = scan(problem, family, numerics.get("t_grid", 256), args.steps or numerics.get("steps"))
    buf = io.StringIO()
    write_defect_csv(rep.table, buf)
    report = {"version": __version__, "t_min": t_min, "t_max": 1.0, **rep.as_dict()}
    if args.csv:
        Path(args.csv).write_text(buf.getvalue())
        _emit(_dump(report), args.out)
    else:
        sys.stdout.write(buf.getvalue())
        if args.out:
            Path(args.out).write_text(_dump(report))
    return EXIT_AGREE


def write_c_table(ts, cs, verdict_name: str, slope: float, handle, delta: float = DELTA):
    handle.write(f"# singularity window: |t| <= {delta!r} omitted (phi_x vanishes at 0)\n")
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(["t", "c"])
    for t, c in zip(ts, cs):
        writer.writerow([repr(float(t)), repr(float(c))])
    handle.write(f"verdict: {verdict_name} vk_slope: {slope!r}\n")


def read_c_table(text: str):
    """Parse the output of ``nls`` back into ``(t, c, verdict, slope)``."""
    rows, result = [], None
    for line in text.splitlines():
        if line.startswith("#") or line == "t,c" or not line:
            continue
        if line.startswith("verdict:"):
            parts = line.split()
            result = (parts[1], float(parts[3]))
            continue
        t, c = line.split(",")
        rows.append((float(t), float(c)))
    if result is None:
        raise ValueError("missing verdict line")
    arr = np.array(rows).reshape(-1, 2)
    return arr[:, 0], arr[:, 1], result[0], result[1]


def cmd_nls(args) -> int:
    if not args.p > 0 or not args.omega < 0:
        raise InputError("need --p > 0 and --omega < 0")
    if not args.tmax > DELTA:
        raise InputError(f"--tmax must exceed {DELTA}")
    prof = soliton(args.p, args.omega)
    ts, cs = c_table(prof, args.tmax, args.samples)
    buf = io.StringIO()
    write_c_table(ts, cs, verdict(args.p, args.omega).value, vk_slope(args.p, args.omega), buf)
    _emit(buf.getvalue(), args.csv or args.out)
    return EXIT_AGREE


def cmd_constraint_matrix(args) -> int:
    problem, numerics = load_problem(args.spec)
    rep = index_limit(problem, steps=args.steps or numerics.get("steps"))
    _emit(_dump({"version": __version__, **rep.as_dict()}), args.out)
    return EXIT_AGREE


def cmd_maslov_sweep(args) -> int:
    problem, numerics = load_problem(args.spec)
    tol = numerics.get("tolerances", {}).get("kernel", KERNEL_TOL)
    rep = sweep(problem, numerics.get("lambda_grid", DEFAULT_GRID), args.steps or numerics.get("steps"), tol)
    _emit(_dump({"version": __version__, **rep.as_dict()}), args.out)
    return EXIT_AGREE


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cmorse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_spec(p):
        p.add_argument("--spec", required=True, help="JSON problem file")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--steps", type=int, help="RK4 steps per integration")
        return p

    p = with_spec(sub.add_parser("morse", help="constrained Morse index by several routes"))
    p.add_argument("--routes", default="all", help="comma list of direct,matrix,maslov,conjugate or 'all'")
    p.set_defaults(func=cmd_morse)

    p = with_spec(sub.add_parser("conjugate-scan", help="conjugate points over (c - tL/2, c + tL/2)"))
    p.add_argument("--shrink-to", type=float, help="smallest t of the family (fraction of the interval)")
    p.add_argument("--csv", help="write the t,defect,multiplicity table here")
    p.set_defaults(func=cmd_conjugate_scan)

    p = with_spec(sub.add_parser("constraint-matrix", help="negative count of the constraint matrix as lambda -> 0-"))
    p.set_defaults(func=cmd_constraint_matrix)

    p = with_spec(sub.add_parser("maslov-sweep", help="crossings of the trace plane for lambda in [lambda_inf, 0]"))
    p.set_defaults(func=cmd_maslov_sweep)

    p = sub.add_parser("nls", help="conjugate-point function of a power-law ground state")
    p.add_argument("--p", type=float, required=True, help="power of the nonlinearity f(s) = (p+1) s^p")
    p.add_argument("--omega", type=float, required=True, help="frequency, must be negative")
    p.add_argument("--tmax", type=float, default=3.0, help="tabulate c on [-tmax, tmax] outside the window")
    p.add_argument("--samples", type=int, default=400, help="points on each side of the window")
    p.add_argument("--csv", help="write the table here")
    p.add_argument("--out", help="alias of --csv")
    p.set_defaults(func=cmd_nls)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except MorseError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
