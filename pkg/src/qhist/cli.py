"""
``qhist`` command line.

Exit codes: 0 success, 1 property or consistency failure, 2 usage or
validation error, 3 size cap exceeded.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path as FsPath

import numpy as np

from . import fixtures, harness, integral, linalg, qmeasure
from .decoherence import DEFAULT_MATRIX_CAP, decoherence_matrix
from .linalg import DEFAULT_TOL, ShapeError, ValidationError
from .pipeline import (
    PipelineFormatError,
    ResourceError,
    expand_homogeneous,
    format_path,
    load_pipeline_file,
    parse_event,
    parse_function_table,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3
MATRIX_WARN_PATHS = 2**10
GOLDEN_TOL = 1e-12

log = logging.getLogger("qhist")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# -- output ------------------------------------------------------------------


def _num(x: float) -> str:
    return f"{x:.12g}"


def _table(headers: list[str], rows: list[list]) -> str:
    cells = [[str(h) for h in headers]] + [
        [_num(c) if isinstance(c, float) else str(c) for c in row] for row in rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _plain(obj):
    """Recursively convert numpy scalars so that ``json`` can emit them."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def emit(args, payload: dict, text: str) -> None:
    if args.format == "structured":
        # float repr is the shortest string that round-trips exactly
        print(json.dumps(_plain(payload), indent=2))
    else:
        print(text)


def _cpair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


# -- commands ----------------------------------------------------------------


def _context(args) -> qmeasure.QMeasureContext:
    p = load_pipeline_file(args.pipeline, tol=args.tolerance)
    return qmeasure.QMeasureContext.from_pipeline(p, args.tolerance)


def cmd_paths(args) -> int:
    ctx = _context(args)
    mus = qmeasure.path_measures(ctx)
    total = float(mus.sum())
    payload = {
        "paths": [
            {"path": format_path(w), "labels": list(w), "mu": float(m)}
            for w, m in zip(ctx.paths, mus)
        ],
        "sum": total,
        "residual": abs(total - 1.0),
    }
    rows = [[format_path(w), float(m)] for w, m in zip(ctx.paths, mus)]
    rows.append(["sum", total])
    text = _table(["path", "mu"], rows) + f"\nresidual from 1: {abs(total - 1.0):.3g}"
    emit(args, payload, text)
    return EXIT_OK


def _read_json_arg(value: str):
    if value.startswith("@"):
        return FsPath(value[1:]).read_text()
    return value


def cmd_measure(args) -> int:
    ctx = _context(args)
    p = ctx.pipeline
    given = [x is not None for x in (args.event, args.paths, args.homogeneous)]
    if sum(given) != 1:
        raise UsageError("give exactly one of --event, --paths, --homogeneous")
    if args.event is not None:
        event = parse_event(p, _read_json_arg(args.event))
    elif args.paths is not None:
        event = parse_event(p, {"paths": args.paths})
    else:
        factors = [[s.strip() for s in f.split(",")] for f in args.homogeneous]
        event = expand_homogeneous(p, factors)

    mu = qmeasure.measure(ctx, event)
    idx = sorted(p.path_index(w) for w in event)
    diag = float(qmeasure.path_measures(ctx)[idx].sum())
    inter = float(np.triu(qmeasure.interference_matrix(ctx)[np.ix_(idx, idx)], k=1).sum())
    payload = {
        "event": [format_path(ctx.paths[i]) for i in idx],
        "mu": mu,
        "diagonal_part": diag,
        "interference_part": inter,
        "decomposition_residual": abs(mu - diag - inter),
    }
    text = "\n".join(
        [
            "event: {" + "; ".join(payload["event"]) + "}",
            f"mu                 {_num(mu)}",
            f"sum of path mu     {_num(diag)}",
            f"pair interference  {_num(inter)}",
            f"residual           {abs(mu - diag - inter):.3g}",
        ]
    )
    emit(args, payload, text)
    return EXIT_OK


def cmd_decoherence(args) -> int:
    p = load_pipeline_file(args.pipeline, tol=args.tolerance)
    if p.n_paths > MATRIX_WARN_PATHS:
        log.warning("full decoherence matrix for %d paths requested", p.n_paths)
    m = decoherence_matrix(p, cap=args.matrix_cap)
    names = [format_path(w) for w in m.paths]
    total = complex(m.entries.sum())
    herm = linalg.hermiticity_residual(m.entries)
    payload = {
        "paths": names,
        "matrix": [[_cpair(z) for z in row] for row in m.entries],
        "hermiticity_residual": herm,
        "sum": _cpair(total),
        "normalization_residual": abs(total - 1.0),
    }
    rows = [
        [a, b, float(z.real), float(z.imag)]
        for (a, b), z in zip(itertools.product(names, repeat=2), m.entries.ravel())
    ]
    text = _table(["path", "path'", "Re D", "Im D"], rows) + (
        f"\nsum of entries: {_num(total.real)} {total.imag:+.3g}i"
        f"\nhermiticity residual: {herm:.3g}"
    )
    emit(args, payload, text)
    return EXIT_OK


def cmd_integrate(args) -> int:
    ctx = _context(args)
    f = parse_function_table(ctx.pipeline, FsPath(args.function).read_text())
    result = integral.integrate(ctx, f)
    plus, minus = integral.split(f.values)
    pos = integral.pairwise_terms(ctx, plus)
    neg = integral.pairwise_terms(ctx, minus)
    payload = {
        "value": result.value,
        "level_set": result.by_level_set,
        "pairwise": result.by_pairwise,
        "agreement_residual": result.agreement_residual,
        "terms": {
            "positive": {"path_sum": pos[0], "interference_sum": pos[1]},
            "negative": {"path_sum": neg[0], "interference_sum": neg[1]},
        },
    }
    text = "\n".join(
        [
            f"integral (level sets)   {_num(result.by_level_set)}",
            f"integral (path pairs)   {_num(result.by_pairwise)}",
            f"agreement residual      {result.agreement_residual:.3g}",
            f"f+ : sum f mu = {_num(pos[0])}, sum I min(f) = {_num(pos[1])}",
            f"f- : sum f mu = {_num(neg[0])}, sum I min(f) = {_num(neg[1])}",
        ]
    )
    emit(args, payload, text)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = harness.GeneratorConfig(
        seed=args.seed,
        trials=args.trials,
        dim_max=args.dim_max,
        steps_max=args.steps_max,
        mixed_state_fraction=args.mixed_fraction,
    )
    try:
        cfg.validate()
    except harness.ConfigError as exc:
        raise UsageError(str(exc)) from exc
    report = harness.run_suite(cfg)
    rows = [
        [r.name, r.trials, f"{r.max_residual:.3g}", "pass" if r.passed else "FAIL"]
        for r in report.properties.values()
    ]
    lines = [_table(["property", "checks", "max residual", "status"], rows)]
    for r in report.properties.values():
        for trial, res in r.failures[:5]:
            lines.append(f"FAIL {r.name} at {trial}: residual {res:.3g}")
    lines.append("overall: " + ("pass" if report.passed else "FAIL"))
    emit(args, report.as_dict(), "\n".join(lines))
    return EXIT_OK if report.passed else EXIT_FAIL


def demo_rows(state: str) -> tuple[list[dict], bool]:
    """Every quantity of the two-slit example with its reference value."""
    ctx = qmeasure.QMeasureContext.from_pipeline(fixtures.two_slit(state))
    expected = fixtures.EXPECTED[state]
    E = fixtures.events_by_name
    rows = []

    def add(kind, name, value, ref):
        rows.append(
            {"quantity": kind, "event": name, "value": float(value), "expected": float(ref),
             "residual": abs(float(value) - float(ref))}
        )

    for name, ref in expected["paths"].items():
        add("mu", name, qmeasure.measure(ctx, E(name)), ref)
    for (a, b), ref in expected["interference"].items():
        add("interference", f"{a},{b}", qmeasure.interference(ctx, E(a), E(b)), ref)
    for names, ref in expected["doubletons"].items():
        add("mu", "{" + ",".join(names) + "}", qmeasure.measure(ctx, E(*names)), ref)
    for names, ref in expected["tripletons"].items():
        add("mu", "{" + ",".join(names) + "}", qmeasure.measure(ctx, E(*names)), ref)
    for key, values in (("integral_f", fixtures.PATH_LENGTH), ("integral_g", fixtures.NONCLASSICAL_G)):
        res = integral.integrate(ctx, np.array(values))
        add(key + " (level sets)", "", res.by_level_set, expected[key])
        add(key + " (path pairs)", "", res.by_pairwise, expected[key])
    return rows, qmeasure.is_classical(ctx)


def cmd_demo(args) -> int:
    if args.name != "two-slit":
        raise UsageError(f"unknown demo {args.name!r}; available: two-slit")
    rows, classical = demo_rows(args.state)
    worst = max(r["residual"] for r in rows)
    ok = worst <= GOLDEN_TOL
    payload = {
        "demo": args.name,
        "state": args.state,
        "classical_measure": classical,
        "rows": rows,
        "max_residual": worst,
        "passed": ok,
    }
    table = _table(
        ["quantity", "event", "value", "expected", "residual"],
        [[r["quantity"], r["event"], r["value"], r["expected"], f"{r['residual']:.1e}"] for r in rows],
    )
    text = (
        f"two-slit demo, initial state {args.state}\n{table}\n"
        f"classical measure: {'yes' if classical else 'no'}\n"
        f"max residual: {worst:.3g} ({'pass' if ok else 'FAIL'})"
    )
    emit(args, payload, text)
    return EXIT_OK if ok else EXIT_FAIL


# -- parser ------------------------------------------------------------------


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("text", "structured"), default=argparse.SUPPRESS)
    common.add_argument("--tolerance", type=_positive_float, default=argparse.SUPPRESS,
                        help=f"validation tolerance (default {DEFAULT_TOL:g})")

    parser = _Parser(prog="qhist", description=__doc__.strip().splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("paths", parents=[common], help="q-measure of every path")
    s.add_argument("pipeline")
    s.set_defaults(func=cmd_paths)

    s = sub.add_parser("measure", parents=[common], help="q-measure of an event")
    s.add_argument("pipeline")
    s.add_argument("--event", help="JSON event spec, or @file")
    s.add_argument("--paths", nargs="+", metavar="PATH", help='paths such as "a1,b1"')
    s.add_argument("--homogeneous", nargs="+", metavar="LABELS",
                   help='one comma-joined label set per step, e.g. a1 b1,b2')
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("decoherence", parents=[common], help="full decoherence matrix")
    s.add_argument("pipeline")
    s.add_argument("--matrix-cap", type=int, default=DEFAULT_MATRIX_CAP)
    s.set_defaults(func=cmd_decoherence)

    s = sub.add_parser("integrate", parents=[common], help="quantum integral of a function")
    s.add_argument("pipeline")
    s.add_argument("function")
    s.set_defaults(func=cmd_integrate)

    s = sub.add_parser("verify", parents=[common], help="randomized property suite")
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dim-max", type=int, default=harness.DIM_LIMITS[1])
    s.add_argument("--steps-max", type=int, default=harness.STEP_LIMITS[1])
    s.add_argument("--mixed-fraction", type=float, default=0.3)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("demo", parents=[common], help="worked two-slit example")
    s.add_argument("name")
    s.add_argument("--state", choices=fixtures.TWO_SLIT_STATES, default="uniform")
    s.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="qhist: %(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.format = getattr(args, "format", "text")
        args.tolerance = getattr(args, "tolerance", DEFAULT_TOL)
        return args.func(args)
    except UsageError as exc:
        print(f"qhist: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ShapeError, PipelineFormatError, OSError) as exc:
        print(f"qhist: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"qhist: error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (qmeasure.InternalConsistencyError, qmeasure.PreconditionError) as exc:
        print(f"qhist: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
