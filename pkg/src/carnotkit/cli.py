"""Command-line entry point: ``carnotkit <subcommand> CHART [options]``.

Every subcommand prints one JSON document.  Exit status is 0 on success,
1 when a check fails or a precondition does not hold (the JSON then carries
the report or error), and 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from fractions import Fraction

from . import __version__
from .chart import FilteredChart, VectorField, validate_lie_filtration
from .coords import adapted_coordinates, carnot_repair, is_carnot, model_euler_field, privileged_coordinates
from .deform import DeformPoint, DomainExit, euler_like_check, integrate_tube, t_field, t_field_relations, verify_tube
from .groupoid import (
    FiberTransport,
    TGElement,
    compose,
    convergence_test,
    doubled_chart,
    embed_arrow,
    rezoom,
)
from .nilpotent import bch_multiply, osculating_algebra
from .poly import Poly
from .serialize import ChartFile, dumps, parse_expression, parse_point, parse_rational

log = logging.getLogger("carnotkit")


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    def __init__(self, document):
        super().__init__("check failed")
        self.document = document


def _setup_logging(quiet: bool) -> None:
    level_name = os.environ.get("CARNOTKIT_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("carnotkit")
    root.handlers[:] = [handler]
    root.setLevel(logging.CRITICAL + 1 if quiet else levels.get(level_name, logging.ERROR))
    root.propagate = False


def _point(chart: FilteredChart, text: str | None):
    if text is None:
        return chart.origin()
    p = parse_point(text)
    if len(p) != chart.dim:
        raise UsageError(f"point needs {chart.dim} coordinates, got {len(p)}")
    return p


def _vector(text: str, n: int, what: str):
    v = parse_point(text)
    if len(v) != n:
        raise UsageError(f"{what} needs {n} coordinates, got {len(v)}")
    return list(v)


def _field(cf: ChartFile, name: str) -> VectorField:
    chart = cf.chart
    if name == "model":
        if chart.normal_vars is None:
            raise UsageError("the model field needs a marked submanifold")
        return model_euler_field(chart.weights, chart.normal)
    if name in cf.fields:
        return cf.fields[name]
    raise UsageError(f"unknown field {name!r}; the chart file defines {sorted(cf.fields)} plus 'model'")


def _function(cf: ChartFile, text: str) -> Poly:
    if text in cf.functions:
        return cf.functions[text]
    try:
        return parse_expression(text, cf.names)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# subcommands


def cmd_validate(cf: ChartFile, args) -> dict:
    report = validate_lie_filtration(cf.chart)
    doc = report.to_json()
    doc["dim"] = cf.chart.dim
    doc["ranks"] = list(cf.chart.ranks)
    if not report.passed:
        raise CheckFailed(doc)
    return doc


def cmd_osculate(cf: ChartFile, args) -> dict:
    v = _point(cf.chart, args.point)
    L = osculating_algebra(cf.chart, v)
    doc = L.to_json()
    doc["point"] = list(v)
    return doc


def cmd_privileged(cf: ChartFile, args) -> dict:
    chart = cf.chart
    v = _point(chart, args.point)
    coords = privileged_coordinates(chart, v)
    doc = {
        "point": list(v),
        "weights": list(chart.weights),
        "coordinates": [x.to_json() for x in coords],
        "text": [x.format(cf.names) for x in coords],
    }
    if args.adapted:
        if chart.normal_vars is None:
            raise UsageError("--adapted needs a chart with normal_vars")
        z = adapted_coordinates(chart)
        doc["adapted"] = [{"index": c + 1, "poly": z[c].to_json(), "text": z[c].format(cf.names)} for c in sorted(z)]
    return doc


def cmd_carnot_check(cf: ChartFile, args) -> dict:
    chart = cf.chart
    v = _point(chart, args.point)
    if args.coords:
        specs = args.coords.split(";")
        if len(specs) != chart.dim:
            raise UsageError(f"--coords needs {chart.dim} ';'-separated polynomials")
        coords = [_function(cf, s) for s in specs]
    else:
        coords = privileged_coordinates(chart, v)
    ok, witness = is_carnot(chart, v, coords)
    doc = {"point": list(v), "coordinates": [x.format(cf.names) for x in coords], "carnot": ok, "witness": witness}
    if args.repair is not None:
        index = args.repair - 1
        correction = _function(cf, args.correction) if args.correction else None
        if correction is None or not 0 <= index < chart.dim:
            raise UsageError("--repair needs a 1-based index and --correction")
        c = carnot_repair(chart, v, coords, index, correction)
        doc["repair"] = {"index": args.repair, "correction": correction.format(cf.names), "coefficient": c}
    if not ok and args.repair is None:
        doc["pass"] = False
        raise CheckFailed(doc)
    doc["pass"] = True
    return doc


def cmd_euler_check(cf: ChartFile, args) -> dict:
    chart = cf.chart
    if chart.normal_vars is None:
        raise UsageError("euler-check needs a chart with normal_vars")
    E = _field(cf, args.field)
    report = euler_like_check(chart, E, args.cap)
    doc = report.to_json()
    doc["field"] = args.field
    if report.passed:
        tf = t_field(chart, E)
        doc["t_field"] = tf.format()
        doc["relations"] = t_field_relations(tf)
        return doc
    raise CheckFailed(doc)


def _steps(args, lam_target: float) -> int:
    if args.step is None:
        return 200
    if args.step <= 0:
        raise UsageError("--step must be positive")
    return max(1, math.ceil(abs(lam_target) / args.step))


def _samples(cf: ChartFile, args) -> list[DeformPoint]:
    chart = cf.chart
    nt, nn = len(chart.tangential), len(chart.normal)
    if args.samples is None:
        return [DeformPoint(0, (0.0,) * nt, (0.0,) * nn)]
    with open(args.samples) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("samples", [])
    pts = []
    for entry in data:
        y = [float(parse_rational(v)) for v in entry.get("y", [])]
        zt = [float(parse_rational(v)) for v in entry.get("zt", [])]
        if len(y) != nt or len(zt) != nn:
            raise UsageError(f"each sample needs {nt} y and {nn} zt values")
        pts.append(DeformPoint(0, tuple(y), tuple(zt)))
    return pts


def cmd_tube(cf: ChartFile, args) -> dict:
    chart = cf.chart
    if chart.normal_vars is None:
        raise UsageError("tube needs a chart with normal_vars")
    E = _field(cf, args.field)
    tf = t_field(chart, E)
    steps = _steps(args, args.lambda_target)
    rows, ok = [], True
    for p in _samples(cf, args):
        try:
            res = integrate_tube(chart, tf, p, args.lambda_target, steps=steps, bounds=args.bounds, rescale=args.rescale)
        except DomainExit as exc:
            rows.append({"start": p.to_json(), "exit": True, "message": str(exc)})
            ok = False
            continue
        within = res.error_estimate <= args.tol
        ok &= within
        rows.append(
            {
                "start": p.to_json(),
                "endpoint": res.endpoint.to_json(),
                "manifold_point": [float(v) for v in res.manifold_point] if res.manifold_point else None,
                "error_estimate": res.error_estimate,
                "within_tol": within,
                "exit": False,
            }
        )
    doc = {"field": args.field, "lambda_target": args.lambda_target, "steps": steps, "tol": args.tol, "results": rows, "pass": ok}
    if not ok:
        raise CheckFailed(doc)
    return doc


def cmd_tube_verify(cf: ChartFile, args) -> dict:
    chart = cf.chart
    if chart.normal_vars is None:
        raise UsageError("tube-verify needs a chart with normal_vars")
    E = _field(cf, args.field)
    steps = _steps(args, 1.0) if args.step is not None else 400
    report = verify_tube(chart, E, samples=args.count, tol=args.tol, steps=steps, bounds=args.bounds)
    doc = report.to_json()
    doc["field"] = args.field
    if not report.passed:
        raise CheckFailed(doc)
    return doc


def _base_for_groupoid(cf: ChartFile) -> FilteredChart:
    if cf.chart.normal_vars is not None:
        raise UsageError("tangent groupoid commands take the undoubled chart (no normal_vars)")
    return cf.chart


def cmd_tg_compose(cf: ChartFile, args) -> dict:
    chart = _base_for_groupoid(cf)
    m = _point(chart, args.point)
    xi = _vector(args.xi, chart.dim, "--xi")
    eta = _vector(args.eta, chart.dim, "--eta")
    lam = parse_rational(args.lambda_)
    L = osculating_algebra(chart, m)
    if lam == 0:
        gh = compose(TGElement.group(m, xi), TGElement.group(m, eta), L)
        return {"lambda": lam, "point": list(m), "xi": xi, "eta": eta, "product": list(gh.xi)}
    dc = doubled_chart(chart)
    transport = FiberTransport(dc, m)
    p1, p2 = embed_arrow(dc, transport, lam, xi)
    _, p3 = embed_arrow(dc, FiberTransport(dc, p2), lam, eta)
    g, h = TGElement.arrow(lam, p1, p2), TGElement.arrow(lam, p2, p3)
    gh = compose(g, h)
    _, zt = rezoom(dc, lam, gh.p, gh.q)
    return {
        "lambda": lam,
        "point": list(m),
        "xi": xi,
        "eta": eta,
        "g": {"target": list(g.p), "source": list(g.q)},
        "h": {"target": list(h.p), "source": list(h.q)},
        "gh": {"target": list(gh.p), "source": list(gh.q)},
        "rezoomed": transport.to_group(zt),
        "limit": bch_multiply(L, xi, eta),
    }


def cmd_tg_converge(cf: ChartFile, args) -> dict:
    chart = _base_for_groupoid(cf)
    m = _point(chart, args.point)
    xi = _vector(args.xi, chart.dim, "--xi")
    eta = _vector(args.eta, chart.dim, "--eta")
    if args.lambdas:
        lambdas = [parse_rational(t) for t in args.lambdas.split(",")]
    else:
        lambdas = [Fraction(1, 2**k) for k in range(1, args.levels + 1)]
    if any(l == 0 for l in lambdas):
        raise UsageError("levels must be nonzero")
    res = convergence_test(chart, m, xi, eta, lambdas, bound=args.bounds)
    rows = [
        {"lambda": r["lambda"], "error": None if r["exit"] else float(r["error"]), "exit": r["exit"]}
        for r in res["rows"]
    ]
    finite = [r["error"] for r in rows if not r["exit"]]
    ok = bool(finite) and res["monotone"] and finite[-1] <= args.tol and not any(r["exit"] for r in rows)
    doc = {
        "point": list(m),
        "xi": xi,
        "eta": eta,
        "limit": res["expected"],
        "table": rows,
        "fitted_order": res["fitted_order"],
        "monotone": res["monotone"],
        "exact": res["exact"],
        "tol": args.tol,
        "pass": ok,
    }
    if not ok:
        raise CheckFailed(doc)
    return doc


COMMANDS = {
    "validate": cmd_validate,
    "osculate": cmd_osculate,
    "privileged": cmd_privileged,
    "carnot-check": cmd_carnot_check,
    "euler-check": cmd_euler_check,
    "tube": cmd_tube,
    "tube-verify": cmd_tube_verify,
    "tg-compose": cmd_tg_compose,
    "tg-converge": cmd_tg_converge,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="carnotkit", description="Computations on filtered manifolds given by polynomial charts.")
    parser.add_argument("--version", action="version", version=f"carnotkit {__version__}")
    parser.add_argument("--quiet", action="store_true", help="suppress log output on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("chart", help="chart JSON file")
        p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
        return p

    add("validate", "check the Lie filtration condition")
    p = add("osculate", "structure constants of the osculating algebra")
    p.add_argument("--point", help="comma-separated rationals, default the origin")
    p = add("privileged", "privileged coordinates at a point")
    p.add_argument("--point")
    p.add_argument("--adapted", action="store_true", help="also emit adapted coordinates along the marked submanifold")
    p = add("carnot-check", "test whether coordinates are Carnot coordinates")
    p.add_argument("--point")
    p.add_argument("--coords", help="';'-separated polynomials or names of chart-file functions")
    p.add_argument("--repair", type=int, help="1-based index of the coordinate to repair")
    p.add_argument("--correction", help="polynomial added with an unknown multiple")
    p = add("euler-check", "test whether a field is Euler-like along the marked submanifold")
    p.add_argument("--field", default="model")
    p.add_argument("--cap", type=int)
    for name, help_text in (("tube", "flow the zero-fibre samples to the requested level"), ("tube-verify", "verify the tubular map")):
        p = add(name, help_text)
        p.add_argument("--field", default="model")
        p.add_argument("--step", type=float, help="RK4 step size")
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--bounds", type=float, help="abort when a coordinate exceeds this magnitude")
        if name == "tube":
            p.add_argument("--samples", help="JSON list of {\"y\": [...], \"zt\": [...]}")
            p.add_argument("--lambda-target", type=float, default=1.0)
            p.add_argument("--rescale", type=float)
        else:
            p.add_argument("--count", type=int, default=20, help="number of sample points")
    for name, help_text in (("tg-compose", "compose two arrows at one level"), ("tg-converge", "zoomed composition against the group law")):
        p = add(name, help_text)
        p.add_argument("--point")
        p.add_argument("--xi", required=True)
        p.add_argument("--eta", required=True)
        if name == "tg-compose":
            p.add_argument("--lambda", dest="lambda_", default="0")
        else:
            p.add_argument("--lambdas", help="comma-separated levels, default 1/2 ... 1/2^levels")
            p.add_argument("--levels", type=int, default=10)
            p.add_argument("--tol", type=float, default=1e-6)
            p.add_argument("--bounds", type=float)
    return parser


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(dumps({"error": str(exc), "kind": "usage"}), file=stdout)
        return 2
    _setup_logging(args.quiet)
    try:
        try:
            cf = ChartFile.load(args.chart)
        except (OSError, ValueError, KeyError, TypeError, ArithmeticError) as exc:
            raise UsageError(f"cannot read chart {args.chart}: {exc}") from None
        doc = COMMANDS[args.command](cf, args)
    except UsageError as exc:
        print(dumps({"error": str(exc), "kind": "usage"}), file=stdout)
        return 2
    except CheckFailed as exc:
        print(dumps(exc.document), file=stdout)
        return 1
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        log.info("precondition failed: %s", exc)
        print(dumps({"pass": False, "error": str(exc), "kind": "precondition"}), file=stdout)
        return 1
    print(dumps(doc), file=stdout)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
