"""Command-line experiment harness.

Seven subcommands reproduce the experiment matrix at desk scale: ``bench``
(repeat-timed single solve), ``scale`` (size sweep), ``ablate``
(single-knob configuration variations), ``stability`` (status grid over
regularization and cost scale for both solver domains), ``convergence``
(error traces), ``color-transfer``, and ``pointcloud``.

Every command emits :class:`ExperimentRecord` rows as CSV with one fixed
header (or JSON lines with ``--json``), to stdout and optionally to
``--out``. Floats are serialized with ``repr`` so parsing a file back
reproduces the records exactly. All numeric outputs are bit-stable for a
fixed seed, across runs and across ``--parallel-experiments`` worker
counts; the two elapsed-time columns are the only fields that vary.

Exit codes: 0 on success, 1 when a required solve reports a numerical
failure (``bench``, ``scale``, ``convergence``, and the two application
commands), 2 on usage errors. The ``stability`` and ``ablate`` surveys
treat failures as data and always exit 0.
"""

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .applications import (
    color_transfer_with_report,
    generate_rigid_pair,
    match_point_clouds_with_report,
)
from .costs import generate_grid_problem, normalize_cost
from .errors import LogSinkhornError
from .fileio import read_ppm, write_correspondences, write_ppm
from .solver import solve, solve_standard_domain
from .types import (
    STATUS_CONVERGED,
    STATUS_NOT_CONVERGED,
    STATUS_NUMERICAL_FAILURE,
    SinkhornConfig,
)

__all__ = [
    "ExperimentRecord",
    "records_to_csv",
    "records_from_csv",
    "records_to_json_lines",
    "records_from_json_lines",
    "build_parser",
    "main",
]

STATUS_LABELS = {
    STATUS_CONVERGED: "converged",
    STATUS_NOT_CONVERGED: "diverged",
    STATUS_NUMERICAL_FAILURE: "nan",
}


@dataclass(frozen=True)
class ExperimentRecord:
    """One experiment data point.

    ``status`` uses the grid labels: ``converged``, ``diverged`` (iteration
    cap hit with error at or above tolerance), or ``nan`` (non-finite value
    detected). ``elapsed_ms``/``elapsed_std_ms`` are the only fields that
    are not bit-reproducible across runs. ``max_cost`` and
    ``slowdown_vs_full`` are None where they do not apply.
    """

    experiment: str
    variant: str
    n: int
    m: int
    epsilon: float
    max_cost: float
    seed: int
    precision: str
    tolerance: float
    max_iterations: int
    check_interval: int
    status: str
    iterations: int
    marginal_error: float
    transport_cost: float
    elapsed_ms: float
    elapsed_std_ms: float
    matrix_bytes: int
    slowdown_vs_full: float
    error_trace: tuple


CSV_HEADER = [f.name for f in fields(ExperimentRecord)]

_INT_FIELDS = {"n", "m", "seed", "max_iterations", "check_interval",
               "iterations", "matrix_bytes"}
_FLOAT_FIELDS = {"epsilon", "max_cost", "tolerance", "marginal_error",
                 "transport_cost", "elapsed_ms", "elapsed_std_ms",
                 "slowdown_vs_full"}
_OPTIONAL_FIELDS = {"max_cost", "slowdown_vs_full"}


def _trace_to_text(trace):
    return ";".join(f"{k}:{repr(e)}" for k, e in trace)


def _trace_from_text(text):
    if not text:
        return ()
    out = []
    for part in text.split(";"):
        k, _, e = part.partition(":")
        out.append((int(k), float(e)))
    return tuple(out)


def _record_to_row(rec):
    row = []
    for f in CSV_HEADER:
        v = getattr(rec, f)
        if f == "error_trace":
            row.append(_trace_to_text(v))
        elif v is None:
            row.append("")
        elif f in _FLOAT_FIELDS:
            row.append(repr(float(v)))
        else:
            row.append(str(v))
    return row


def _record_from_row(row):
    kwargs = {}
    for f, text in zip(CSV_HEADER, row):
        if f == "error_trace":
            kwargs[f] = _trace_from_text(text)
        elif text == "" and f in _OPTIONAL_FIELDS:
            kwargs[f] = None
        elif f in _INT_FIELDS:
            kwargs[f] = int(text)
        elif f in _FLOAT_FIELDS:
            kwargs[f] = float(text)
        else:
            kwargs[f] = text
    return ExperimentRecord(**kwargs)


def records_to_csv(records):
    """Serialize records to CSV text with the fixed documented header."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(_record_to_row(rec))
    return buf.getvalue()


def records_from_csv(text):
    """Parse records back from :func:`records_to_csv` output."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError("unrecognized CSV header")
    return [_record_from_row(r) for r in rows[1:]]


def records_to_json_lines(records):
    """Serialize records as one JSON object per line."""
    lines = []
    for rec in records:
        obj = {}
        for f in CSV_HEADER:
            v = getattr(rec, f)
            if f == "error_trace":
                obj[f] = [[k, e] for k, e in v]
            else:
                obj[f] = v
        lines.append(json.dumps(obj))
    return "\n".join(lines) + ("\n" if lines else "")


def records_from_json_lines(text):
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        obj["error_trace"] = tuple((int(k), float(e)) for k, e in obj["error_trace"])
        out.append(ExperimentRecord(**obj))
    return out


def _run_tasks(tasks, workers):
    # Results are collected in submission order, so the worker count can
    # change scheduling but never the output.
    if workers <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(task) for task in tasks]
        return [f.result() for f in futures]


def _config_from_args(args, eps, **overrides):
    params = dict(
        epsilon=eps,
        tolerance=args.tol,
        max_iterations=args.max_iters,
        check_interval=args.check_interval,
        chunk_width=args.chunk_width,
        group_size=args.group_size,
        transpose_for_beta=args.transpose_for_beta,
        precision=args.precision,
    )
    params.update(overrides)
    return SinkhornConfig(**params)


def _grid_problem_scaled(n, m, seed, max_cost):
    mu, nu, cost = generate_grid_problem(n, m, seed)
    if max_cost is not None:
        cost = normalize_cost(cost, max_cost)
    return mu, nu, cost


def _solve_fn(domain):
    if domain == "standard":
        return lambda *a: solve_standard_domain(*a)[0]
    return lambda *a: solve(*a)[0]


def _timed_reports(solve_once, warmup, repeats):
    for _ in range(warmup):
        solve_once()
    reports = [solve_once() for _ in range(repeats)]
    times = np.array([r.elapsed_seconds for r in reports]) * 1e3
    return reports[-1], float(times.mean()), float(times.std())


def _record_from_report(experiment, variant, n, m, eps, max_cost, args,
                        config, report, elapsed_ms, elapsed_std_ms,
                        slowdown=None, with_trace=False):
    return ExperimentRecord(
        experiment=experiment,
        variant=variant,
        n=n,
        m=m,
        epsilon=eps,
        max_cost=max_cost,
        seed=args.seed,
        precision=config.precision,
        tolerance=config.tolerance,
        max_iterations=config.max_iterations,
        check_interval=config.check_interval,
        status=STATUS_LABELS[report.status],
        iterations=report.iterations,
        marginal_error=report.final_marginal_error,
        transport_cost=report.transport_cost,
        elapsed_ms=elapsed_ms,
        elapsed_std_ms=elapsed_std_ms,
        matrix_bytes=n * m * np.dtype(config.dtype).itemsize,
        slowdown_vs_full=slowdown,
        error_trace=report.error_trace if with_trace else (),
    )


def _emit(records, args):
    text = (records_to_json_lines if args.json else records_to_csv)(records)
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)


def _cmd_bench(args, parser):
    config = _config_from_args(args, args.eps)
    m = args.m if args.m is not None else args.n
    mu, nu, cost = _grid_problem_scaled(args.n, m, args.seed, args.max_cost)
    run = _solve_fn(args.domain)
    report, mean_ms, std_ms = _timed_reports(
        lambda: run(cost, mu, nu, config), args.warmup, args.repeats
    )
    rec = _record_from_report(
        "bench", args.domain, args.n, m, args.eps,
        args.max_cost if args.max_cost is not None else 1.0,
        args, config, report, mean_ms, std_ms,
    )
    _emit([rec], args)
    return 1 if rec.status == "nan" else 0


def _cmd_scale(args, parser):
    config_eps = args.eps

    def point(n):
        config = _config_from_args(args, config_eps)
        mu, nu, cost = _grid_problem_scaled(n, n, args.seed, None)
        report, mean_ms, std_ms = _timed_reports(
            lambda: solve(cost, mu, nu, config)[0], 1, 3
        )
        return _record_from_report(
            "scale", "log", n, n, config_eps, 1.0, args, config,
            report, mean_ms, std_ms,
        )

    records = _run_tasks(
        [lambda n=n: point(n) for n in args.n_list],
        args.parallel_experiments,
    )
    _emit(records, args)
    return 1 if any(r.status == "nan" for r in records) else 0


_ABLATION_GROUP_SIZES = (64, 128, 256, 512)
_ABLATION_CHECK_INTERVALS = (1, 5, 10, 20)


def _cmd_ablate(args, parser):
    variants = [("full", {}, "log")]
    variants += [("flat_reduction", dict(chunk_width=1, group_size=1), "log")]
    variants += [
        (f"group_{g}", dict(chunk_width=32, group_size=g), "log")
        for g in _ABLATION_GROUP_SIZES
    ]
    variants += [
        (f"check_{c}", dict(check_interval=c), "log")
        for c in _ABLATION_CHECK_INTERVALS
    ]
    variants += [("standard_domain", {}, "standard")]

    def point(name, overrides, domain):
        config = _config_from_args(args, args.eps, **overrides)
        mu, nu, cost = _grid_problem_scaled(args.n, args.n, args.seed, None)
        run = _solve_fn(domain)
        report, mean_ms, std_ms = _timed_reports(
            lambda: run(cost, mu, nu, config), 1, 3
        )
        return _record_from_report(
            "ablate", name, args.n, args.n, args.eps, 1.0, args, config,
            report, mean_ms, std_ms, with_trace=True,
        )

    records = _run_tasks(
        [lambda v=v: point(*v) for v in variants],
        args.parallel_experiments,
    )
    full_ms = records[0].elapsed_ms
    records = [
        replace(r, slowdown_vs_full=(r.elapsed_ms / full_ms) if full_ms > 0 else None)
        for r in records
    ]
    _emit(records, args)
    return 0


def _cmd_stability(args, parser):
    def point(eps, max_cost, domain):
        config = _config_from_args(args, eps)
        mu, nu, cost = _grid_problem_scaled(args.n, args.n, args.seed, max_cost)
        report = _solve_fn(domain)(cost, mu, nu, config)
        return _record_from_report(
            "stability", domain, args.n, args.n, eps, max_cost, args,
            config, report, report.elapsed_seconds * 1e3, 0.0,
        )

    tasks = [
        lambda e=eps, c=maxc, d=domain: point(e, c, d)
        for eps in args.eps_grid
        for maxc in args.maxc_grid
        for domain in ("log", "standard")
    ]
    records = _run_tasks(tasks, args.parallel_experiments)
    _emit(records, args)
    return 0


def _cmd_convergence(args, parser):
    def point(n, eps):
        config = _config_from_args(args, eps)
        mu, nu, cost = _grid_problem_scaled(n, n, args.seed, None)
        report = solve(cost, mu, nu, config)[0]
        return _record_from_report(
            "convergence", "log", n, n, eps, 1.0, args, config,
            report, report.elapsed_seconds * 1e3, 0.0, with_trace=True,
        )

    tasks = [
        lambda nn=n, ee=eps: point(nn, ee)
        for n in args.n_list
        for eps in args.eps_list
    ]
    records = _run_tasks(tasks, args.parallel_experiments)
    _emit(records, args)
    return 1 if any(r.status == "nan" for r in records) else 0


def _cmd_color_transfer(args, parser):
    source = read_ppm(args.source)
    target = read_ppm(args.target)
    try:
        image, report = color_transfer_with_report(
            source, target, args.samples, args.eps, args.seed
        )
    except LogSinkhornError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_ppm(args.out_image, image)
    config = SinkhornConfig(epsilon=args.eps, precision="double")
    rec = _record_from_report(
        "color_transfer", "log", args.samples, args.samples, args.eps,
        None, args, config, report,
        report.elapsed_seconds * 1e3, 0.0,
    )
    _emit([rec], args)
    return 1 if rec.status == "nan" else 0


def _cmd_pointcloud(args, parser):
    X, Y, _perm = generate_rigid_pair(
        args.n, 3, args.angle, args.translation, args.sigma, args.seed
    )
    try:
        pairs, report = match_point_clouds_with_report(X, Y, args.eps)
    except LogSinkhornError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out_pairs:
        write_correspondences(args.out_pairs, pairs)
    config = SinkhornConfig(epsilon=args.eps, precision="double")
    rec = _record_from_report(
        "pointcloud", "log", args.n, args.n, args.eps, 1.0, args, config,
        report, report.elapsed_seconds * 1e3, 0.0,
    )
    _emit([rec], args)
    return 1 if rec.status == "nan" else 0


def _int_list(text):
    return [int(tok) for tok in text.split(",") if tok]


def _float_list(text):
    return [float(tok) for tok in text.split(",") if tok]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="logsinkhorn",
        description="Entropic transport experiment harness",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--precision", choices=["single", "double"],
                        default="single")
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--max-iters", type=int, default=10000)
    common.add_argument("--check-interval", type=int, default=10)
    common.add_argument("--chunk-width", type=int, default=32)
    common.add_argument("--group-size", type=int, default=256)
    common.add_argument("--transpose-for-beta", action="store_true")
    common.add_argument("--out", default=None,
                        help="also write records to this file")
    common.add_argument("--json", action="store_true",
                        help="emit JSON lines instead of CSV")
    common.add_argument("--parallel-experiments", type=int, default=1,
                        metavar="K",
                        help="run independent parameter points on K threads")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", parents=[common],
                       help="repeat-timed solve on one seeded problem")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--max-cost", type=float, default=None)
    p.add_argument("--domain", choices=["log", "standard"], default="log")
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--repeats", type=int, default=10)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("scale", parents=[common],
                       help="problem-size sweep at fixed eps")
    p.add_argument("--n-list", type=_int_list, default=[64, 128, 256, 512, 1024])
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(func=_cmd_scale)

    p = sub.add_parser("ablate", parents=[common],
                       help="single-knob configuration variations")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("stability", parents=[common],
                       help="status grid over (eps, max cost) for both domains")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--eps-grid", type=_float_list,
                   default=[1.0, 0.1, 0.01, 0.005, 0.001, 1e-4])
    p.add_argument("--maxc-grid", type=_float_list, default=[1.0, 10.0, 100.0])
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("convergence", parents=[common],
                       help="error traces per (n, eps)")
    p.add_argument("--n-list", type=_int_list, default=[512])
    p.add_argument("--eps-list", type=_float_list, default=[0.1, 0.01, 0.001])
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("color-transfer", parents=[common],
                       help="transfer a target palette onto a source PPM")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out-image", required=True)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(func=_cmd_color_transfer)

    p = sub.add_parser("pointcloud", parents=[common],
                       help="match a seeded rigid point-cloud pair")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--angle", type=float, default=0.1)
    p.add_argument("--translation", type=_float_list, default=[0.1, 0.0, 0.0])
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--out-pairs", default=None,
                   help="write matched index pairs to this file")
    p.set_defaults(func=_cmd_pointcloud)

    return parser


def _validate(args, parser):
    if getattr(args, "n", 1) < 1:
        parser.error("--n must be >= 1")
    if getattr(args, "m", None) is not None and args.m < 1:
        parser.error("--m must be >= 1")
    for name in ("n_list", "eps_list", "eps_grid", "maxc_grid"):
        if getattr(args, name, None) == []:
            parser.error(f"--{name.replace('_', '-')} must not be empty")
    if getattr(args, "n_list", None) and min(args.n_list) < 1:
        parser.error("--n-list entries must be >= 1")
    if getattr(args, "samples", 1) < 1:
        parser.error("--samples must be >= 1")
    if args.parallel_experiments < 1:
        parser.error("--parallel-experiments must be >= 1")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(args, parser)
    try:
        return args.func(args, parser)
    except (ValueError, LogSinkhornError) as exc:
        # Invalid parameter combinations surface here (e.g. eps <= 0).
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
