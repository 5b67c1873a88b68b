"""Command-line entry point.

Commands ``qq``, ``coverage``, ``run`` (both), ``bounds`` and ``selfcheck``.
Progress goes to stderr; stdout carries one JSON summary line per command.

Exit codes: 0 success, 1 failed self-check, 2 configuration error,
3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import config as cfgmod
from .bounds import bound_report, moment3_estimates
from .datagen import DELTA_CASES, ExperimentDesign, delta_hat
from .errors import InvalidInputError, NumericFailureError
from .linalg import effective_rank
from .mc import ExperimentResult, run_experiment
from .selfcheck import FAULTS, run_selfcheck
from .streams import stream

log = logging.getLogger("iwproj")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4
DEFAULT_MOMENT_DRAWS = 100_000


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_qq(path: Path, result: ExperimentResult) -> None:
    rows = ([fmt(a), fmt(t), fmt(m)] for a, t, m in result.qq())
    _write_csv(path, ["alpha", "gamma_true", "gamma_posterior_median"], rows)


def write_coverage(path: Path, results: list[ExperimentResult]) -> None:
    rows = (
        [str(res.n), fmt(row.level), fmt(row.coverage), fmt(row.iqr)]
        for res in results
        for row in res.coverage()
    )
    _write_csv(path, ["n", "level", "coverage", "iqr"], rows)


def _results(design: ExperimentDesign, workers: int) -> list[ExperimentResult]:
    out = []
    for n in design.n_grid:
        t0 = time.perf_counter()
        out.append(run_experiment(design, n, workers=workers))
        log.info("n=%d done in %.1fs", n, time.perf_counter() - t0)
    return out


def cmd_qq(cfg: cfgmod.RunConfig) -> list[Path]:
    design = cfg.design()
    files = []
    for res in _results(design, cfg.workers):
        path = Path(cfg.out) / f"qq_{res.n}.csv"
        write_qq(path, res)
        files.append(path)
    return files


def cmd_coverage(cfg: cfgmod.RunConfig) -> list[Path]:
    path = Path(cfg.out) / "coverage.csv"
    write_coverage(path, _results(cfg.design(), cfg.workers))
    return [path]


def cmd_run(cfg: cfgmod.RunConfig) -> list[Path]:
    results = _results(cfg.design(), cfg.workers)
    files = []
    for res in results:
        path = Path(cfg.out) / f"qq_{res.n}.csv"
        write_qq(path, res)
        files.append(path)
    cov = Path(cfg.out) / "coverage.csv"
    write_coverage(cov, results)
    return files + [cov]


BOUNDS_COLUMNS = [
    "n", "p", "b", "g_norm", "delta_case", "delta_hat", "m_j", "gap", "width",
    "sigma_norm", "sigma_trace", "moment_u", "moment_v", "denominator",
    "diamond1", "diamond2", "diamond3", "diamond", "overline_delta", "overline_diamond", "flag",
]


def bounds_rows(
    design: ExperimentDesign,
    delta_case: str,
    *,
    moment_draws: int = DEFAULT_MOMENT_DRAWS,
    radius: float | None = None,
):
    """One :class:`BoundReport` per sample size in the design grid.

    For the bounded-support case the radius defaults to ``sqrt(Tr(Sigma))``.
    """
    if delta_case not in DELTA_CASES:
        raise InvalidInputError(f"delta case must be one of {DELTA_CASES}")
    spec = design.spectrum
    truth = spec.covariance()
    sigma_norm = float(spec.eigenvalues[0])
    if radius is None:
        radius = math.sqrt(float(spec.eigenvalues.sum()))
    moments = moment3_estimates(design, moment_draws, stream(design.seed, "moments"))
    reports = []
    for n in design.n_grid:
        dh = delta_hat(
            delta_case, n, spec.dim,
            effective_rank=effective_rank(truth), spectral_norm=sigma_norm, radius=radius,
        )
        reports.append(bound_report(
            spec, design.selection, n=n, b=design.prior.b, g_norm=design.prior.g_scale,
            delta_case=delta_case, delta_hat=dh, moment3=moments,
        ))
    return reports


def cmd_bounds(cfg: cfgmod.RunConfig, delta_case: str, **kwargs) -> list[Path]:
    reports = bounds_rows(cfg.design(), delta_case, **kwargs)
    rows = []
    for rep in reports:
        d = rep.as_dict()
        rows.append([d[c] if isinstance(d[c], str) else (str(d[c]) if isinstance(d[c], int) else fmt(d[c]))
                     for c in BOUNDS_COLUMNS])
    path = Path(cfg.out) / "bounds.csv"
    _write_csv(path, BOUNDS_COLUMNS, rows)
    return [path]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--experiment", choices=["exp1", "exp2"])
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", type=str)
    common.add_argument("--scale", choices=["full", "desk"],
                        help="full: 3000/50/3000; desk: 1000/20/1000 (freq reps/realizations/draws)")
    common.add_argument("--n", dest="n_grid", type=int, action="append",
                        help="sample size; repeat to build the grid")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="iwproj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("qq", parents=[common], help="write qq_<n>.csv per sample size")
    sub.add_parser("coverage", parents=[common], help="write coverage.csv")
    sub.add_parser("run", parents=[common], help="write QQ files and coverage.csv from one pass")
    b = sub.add_parser("bounds", parents=[common], help="write bounds.csv")
    b.add_argument("--delta-case", choices=DELTA_CASES, default="gaussian")
    b.add_argument("--moment-draws", type=int, default=DEFAULT_MOMENT_DRAWS)
    b.add_argument("--radius", type=float)
    s = sub.add_parser("selfcheck", help="run the fast invariant suite")
    s.add_argument("--seed", type=int, default=2024)
    s.add_argument("--instances", type=int, help="random instances per invariant (default: fast budget)")
    s.add_argument("--inject-fault", choices=FAULTS, help=argparse.SUPPRESS)
    s.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> cfgmod.RunConfig:
    """Defaults, then the config file, then command-line flags."""
    cfg = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    if args.scale == "desk":
        cfg = cfg.with_budget(cfgmod.DESK_BUDGET)
    elif args.scale == "full":
        cfg = cfg.with_budget(cfgmod.FULL_BUDGET)
    updates = {
        k: getattr(args, k)
        for k in ("experiment", "seed", "workers", "out")
        if getattr(args, k) is not None
    }
    if args.n_grid:
        updates["n_grid"] = tuple(args.n_grid)
    if updates.get("experiment") and cfg.custom is not None:
        updates["custom"] = None
    cfg = replace(cfg, **updates)
    # Re-validate the merged result against the schema.
    return cfgmod.from_dict(cfg.to_dict())


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    try:
        if args.command == "selfcheck":
            t0 = time.perf_counter()
            results = run_selfcheck(args.seed, args.inject_fault, args.instances)
            for r in results:
                print(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.detail}", file=sys.stderr)
            ok = all(r.ok for r in results)
            summary = {"command": "selfcheck", "ok": ok, "seconds": round(time.perf_counter() - t0, 2)}
            print(json.dumps(summary))
            return EXIT_OK if ok else EXIT_CHECK
        cfg = resolve_config(args)
        if args.command == "qq":
            files = cmd_qq(cfg)
        elif args.command == "coverage":
            files = cmd_coverage(cfg)
        elif args.command == "run":
            files = cmd_run(cfg)
        else:
            files = cmd_bounds(cfg, args.delta_case, moment_draws=args.moment_draws, radius=args.radius)
    except InvalidInputError as exc:
        print(f"iwproj: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailureError as exc:
        print(f"iwproj: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"iwproj: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps({"command": args.command, "files": [str(f) for f in files]}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
