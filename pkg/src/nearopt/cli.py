"""Batch command-line front end.

Exit codes: 0 success (certified convergence for ``oracle``), 2 ORACLE not
converged, 3 input error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .errors import ModelError, RegionError, SolverError
from .metrics import metrics_table, result_metrics, write_metrics_csv
from .mga import METHODS as MGA_METHODS
from .mga import run_mga
from .model import (generate_toy_model, load_model, load_spec, serialize_model, spec_to_dict, toy_spec)
from .oracle import OracleOptions, optimal_value, run_oracle, setup_exploration
from .regions import read_halfspaces_csv, read_points_csv, write_halfspaces_csv, write_points_csv
from .sampler import diverse_set, hit_and_run, write_samples_csv
from .solver import SolverSettings
from .trace import write_trace_csv

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3, 4
METHODS = ("oracle",) + MGA_METHODS

log = logging.getLogger("nearopt")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--spec", required=True, help="exploration spec JSON")
    p.add_argument("--tol", type=float, help="convergence tolerance (default: the spec's)")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rel-gap", type=float, default=0.1)
    p.add_argument("--abs-gap", type=float, default=0.05)
    p.add_argument("--time-limit", type=float, default=600.0, help="per-MILP time limit in seconds")
    p.add_argument("--pool-size", type=int, default=1)
    p.add_argument("--no-value-cut", action="store_true")
    p.add_argument("--no-cost-cut", action="store_true")
    p.add_argument("--exact-metric-every", type=int, default=1,
                   help="1: exact max-min distance every iteration; n: every n-th; 0: only to certify")
    p.add_argument("--metric", choices=("milp", "vertex"), default="milp",
                   help="max-min distance by KKT MILP or by outer-vertex enumeration")
    p.add_argument("--metric-every", type=int, default=1,
                   help="MGA runs: evaluate the distance every n iterations (0: final only)")
    p.add_argument("--backend", choices=("highs", "scipy"), help="LP/MILP backend (else env/auto)")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--no-timings", action="store_true", help="omit wall-clock columns from traces")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nearopt", description="Explore the near-optimal space of a linear program.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve the cost-optimal LP")
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--backend", choices=("highs", "scipy"))

    p = sub.add_parser("explore", help="run ORACLE or an MGA baseline")
    p.add_argument("--method", default="oracle", help=f"one of: {', '.join(METHODS)}")
    _add_run_flags(p)

    p = sub.add_parser("compare", help="run several methods and tabulate their metrics")
    p.add_argument("--methods", default="oracle,random,hsj", help="comma-separated method list")
    p.add_argument("--reference", help="halfspaces CSV of a converged outer region")
    p.add_argument("--no-volumes", action="store_true")
    _add_run_flags(p)

    p = sub.add_parser("metrics", help="metrics of saved points/halfspaces")
    p.add_argument("--points", required=True)
    p.add_argument("--halfspaces", required=True)
    p.add_argument("--reference", help="halfspaces CSV of a converged outer region")
    p.add_argument("--method", default="unknown", help="label for the method column")
    p.add_argument("--every", type=int, default=1)
    p.add_argument("--metric", choices=("milp", "vertex"), default="milp")
    p.add_argument("--no-volumes", action="store_true")
    p.add_argument("--samples", type=int, default=100_000, help="Monte Carlo samples beyond 3-D")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="out")

    p = sub.add_parser("sample", help="designs from explored regions")
    p.add_argument("--points", help="inner points CSV")
    p.add_argument("--halfspaces", help="outer halfspaces CSV")
    p.add_argument("--mode", choices=("hitrun", "diverse"), default="hitrun")
    p.add_argument("--target", choices=("inner", "outer"), default="inner")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--affine-span", action="store_true", help="sample degenerate hulls in their span")
    p.add_argument("--model", help="model JSON (diverse mode: verify designs)")
    p.add_argument("--spec", help="exploration spec JSON (diverse mode)")
    p.add_argument("--out-dir", default="out")

    p = sub.add_parser("toy", help="write a seeded toy capacity-expansion model and spec")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--n-tech", type=int, default=6)
    p.add_argument("--n-periods", type=int, default=4)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--out-dir", default="out")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _settings(args) -> SolverSettings:
    return SolverSettings(backend=getattr(args, "backend", None), threads=1, seed=getattr(args, "seed", 0))


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return str(v)


def write_manifest(out: Path, args, settings: SolverSettings, **extra) -> None:
    """Config echo, seeds and solver settings; enough to repeat the run."""
    doc = {"command": args.command, "args": {k: v for k, v in vars(args).items() if k != "command"},
           "solver": settings.describe(), "kernels": kernels.BACKEND, "version": __version__,
           "python": platform.python_version(), "numpy": np.__version__}
    doc.update(extra)
    _write_json(out / "manifest.json", doc)


def _options(args, settings: SolverSettings) -> OracleOptions:
    if args.pool_size < 1:
        raise InputError("--pool-size must be >= 1")
    if args.exact_metric_every < 0:
        raise InputError("--exact-metric-every must be >= 0")
    return OracleOptions(rel_gap=args.rel_gap, abs_gap=args.abs_gap, time_limit=args.time_limit,
                         value_cut=not args.no_value_cut, pool_size=args.pool_size,
                         exact_metric_every=args.exact_metric_every, seed=args.seed, metric=args.metric,
                         cost_cut=False if args.no_cost_cut else None, settings=settings)


def _check_method(name: str) -> str:
    name = name.strip().lower()
    if name not in METHODS:
        raise InputError(f"unknown method {name!r}; expected one of {', '.join(METHODS)}")
    return name


def _run(method: str, problem, tol: float, args, options: OracleOptions):
    if args.max_iter < 1:
        raise InputError("--max-iter must be >= 1")
    if method == "oracle":
        return run_oracle(problem, tol, args.max_iter, options)
    return run_mga(problem, method, args.max_iter, seed=args.seed, metric_every=args.metric_every,
                   final_metric=True, options=options)


def _save_run(out: Path, result, problem, timings: bool, prefix: str = "") -> None:
    names = problem.z_names
    write_trace_csv(out / f"{prefix}trace.csv", result.trace, timings=timings)
    write_points_csv(out / f"{prefix}points.csv", result.inner, names)
    write_halfspaces_csv(out / f"{prefix}halfspaces.csv", result.outer, names)


def _load_problem(args, settings):
    model = load_model(args.model)
    spec = load_spec(args.spec)
    return spec, setup_exploration(model, spec, settings)


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    settings = _settings(args)
    model = load_model(args.model)
    v, x = optimal_value(model, settings)
    print(repr(float(v)))
    if args.out_dir:
        out = _out_dir(args)
        with open(out / "x_star.csv", "w", encoding="utf-8") as fh:
            fh.write("variable,value\n")
            for name, val in zip(model.var_names, x):
                fh.write(f"{name},{float(val)!r}\n")
        write_manifest(out, args, settings, v_star=float(v))
    return EXIT_OK


def cmd_explore(args) -> int:
    method = _check_method(args.method)
    settings = _settings(args)
    options = _options(args, settings)
    spec, problem = _load_problem(args, settings)
    tol = args.tol if args.tol is not None else spec.tolerance
    if not tol > 0:
        raise InputError("--tol must be positive")
    out = _out_dir(args)
    result = _run(method, problem, tol, args, options)
    _save_run(out, result, problem, not args.no_timings)
    summary = result.summary() | {"tol": tol, "v_star": problem.v_star, "budget": problem.budget}
    _write_json(out / "summary.json", summary)
    write_manifest(out, args, settings, spec=spec_to_dict(spec), tol=tol)
    print(json.dumps(summary, sort_keys=True, default=_jsonable))
    if method == "oracle" and not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_compare(args) -> int:
    methods = [m for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise InputError("--methods must name at least one method")
    methods = [_check_method(m) for m in methods]
    settings = _settings(args)
    options = _options(args, settings)
    spec, problem = _load_problem(args, settings)
    tol = args.tol if args.tol is not None else spec.tolerance
    reference = read_halfspaces_csv(args.reference)[0] if args.reference else None
    out = _out_dir(args)
    rows, finals = [], {}
    for m in methods:
        result = _run(m, problem, tol, args, options)
        _save_run(out, result, problem, not args.no_timings, prefix=f"{m}_")
        every = args.metric_every if m != "oracle" and args.metric_every > 0 else 1
        rows += result_metrics(result, reference=reference, every=every, volumes=not args.no_volumes,
                               metric=args.metric, seed=args.seed, settings=settings)
        finals[m] = result.d_io
    write_metrics_csv(out / "compare_metrics.csv", rows)
    _write_json(out / "summary.json", {"final_d_IO": finals, "tol": tol})
    write_manifest(out, args, settings, spec=spec_to_dict(spec), tol=tol)
    for m, d in finals.items():
        print(f"{m}\t{d!r}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    inner, names = read_points_csv(args.points)
    outer, names_o = read_halfspaces_csv(args.halfspaces)
    if names != names_o:
        raise InputError("points and halfspaces files name different coordinates")
    reference = read_halfspaces_csv(args.reference)[0] if args.reference else None
    settings = _settings(args)
    last = max([0, *inner.iters, *(h.iteration for h in outer.halfspaces)])
    rows = metrics_table(args.method, inner, outer, last, reference=reference, every=max(1, args.every),
                         volumes=not args.no_volumes, metric=args.metric, n_samples=args.samples,
                         seed=args.seed, settings=settings)
    out = _out_dir(args)
    write_metrics_csv(out / "metrics.csv", rows)
    write_manifest(out, args, settings)
    r = rows[-1]
    print(f"iter {r.iter} d_IO {r.d_io!r} vol_ratio {r.vol_ratio!r} d_to_reference {r.d_to_reference!r}")
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.k < 1:
        raise InputError("--k must be >= 1")
    settings = _settings(args)
    out = _out_dir(args)
    if args.mode == "hitrun":
        if args.target == "inner":
            if not args.points:
                raise InputError("inner sampling needs --points")
            region, names = read_points_csv(args.points)
        else:
            if not args.halfspaces:
                raise InputError("outer sampling needs --halfspaces")
            region, names = read_halfspaces_csv(args.halfspaces)
        batch = hit_and_run(region, args.k, args.burn_in, args.thin, args.seed, args.affine_span,
                            settings=settings)
    else:
        if not args.halfspaces:
            raise InputError("diverse mode needs --halfspaces")
        outer, names = read_halfspaces_csv(args.halfspaces)
        if args.points:
            cloud = read_points_csv(args.points)[0].points
        else:
            cloud = 0.5 * (outer.lower + outer.upper)[None, :]
        problem = None
        if args.model and args.spec:
            problem = _load_problem(args, settings)[1]
        batch = diverse_set(outer, args.k, cloud, problem, settings=settings)
    write_samples_csv(out / "samples.csv", batch, names)
    write_manifest(out, args, settings, sampled_dim=batch.dim)
    print(f"{len(batch.points)} samples written to {out / 'samples.csv'}")
    return EXIT_OK


def cmd_toy(args) -> int:
    model = generate_toy_model(args.seed, args.n_tech, args.n_periods)
    spec = toy_spec(model, args.epsilon)
    out = _out_dir(args)
    (out / "model.json").write_text(serialize_model(model), encoding="utf-8")
    _write_json(out / "spec.json", spec_to_dict(spec))
    print(out / "model.json")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "explore": cmd_explore, "compare": cmd_compare, "metrics": cmd_metrics,
            "sample": cmd_sample, "toy": cmd_toy}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except SolverError as exc:
        print(f"nearopt: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InputError, ModelError, OSError, RegionError, ValueError) as exc:
        print(f"nearopt: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
