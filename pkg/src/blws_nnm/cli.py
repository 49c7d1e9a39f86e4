"""Command-line entry point: ``blws-nnm {rpca,mc,svd-check,repro}``.

Exit status is 0 on success, 2 on a configuration error and 3 when a solver
stopped at its iteration cap. ``svd-check`` exits with 1 if a check fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import fields

from . import bench
from .bench import ConfigError, ScenarioConfig
from .prox import SvdConvergenceWarning

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NOT_CONVERGED = 0, 1, 2, 3


def _scenario_flags(p: argparse.ArgumentParser, problem: str) -> None:
    # defaults stay None so that only flags given on the command line override --config
    p.add_argument("--config", metavar="PATH", help="JSON file with scenario fields")
    p.add_argument("--m", type=int, help="matrix size (m x m)")
    if problem == "rpca":
        p.add_argument("--rank-frac", type=float, help="rank of the low-rank part as a fraction of m")
        p.add_argument("--corrupt-frac", type=float, help="fraction of corrupted entries")
    else:
        p.add_argument("--rank", type=int, help="rank r of the target")
        p.add_argument("--ratio", type=float, help="samples per degree of freedom, s / (r(2m - r))")
    _common_flags(p)


def _common_flags(p):
    p.add_argument("--backend", choices=bench.BACKENDS)
    p.add_argument("--k", type=int, help="block Lanczos steps per call (blws)")
    p.add_argument("--oversample", type=int, help="guard columns carried by the blws block")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, help="outer stopping tolerance")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--out", metavar="PATH", help="write the table here instead of stdout")
    p.add_argument("--format", choices=bench.FORMATS)
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blws-nnm",
                                     description="Warm-started block Lanczos inside nuclear norm solvers.")
    sub = parser.add_subparsers(dest="command", required=True)
    _scenario_flags(sub.add_parser("rpca", help="Robust PCA on a synthetic low-rank + sparse instance"), "rpca")
    _scenario_flags(sub.add_parser("mc", help="matrix completion on a synthetic instance"), "mc")

    check = sub.add_parser("svd-check", help="augmented-spectrum and thresholding oracle checks")
    check.add_argument("--trials", type=int, default=100)
    check.add_argument("--prox-trials", type=int, default=50)
    check.add_argument("--seed", type=int, default=0)

    repro = sub.add_parser("repro", help="run the desk-scale table grid")
    repro.add_argument("--config", metavar="PATH", help="JSON file with shared scenario fields")
    repro.add_argument("--grid", choices=sorted(bench.GRIDS), default="desk")
    repro.add_argument("--workers", type=int, default=1,
                       help=f"parallel scenario slots (capped by ${bench.THREADS_ENV})")
    _common_flags(repro)
    return parser


def _load_config(args, problem: str | None) -> ScenarioConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(ScenarioConfig)}
    for name, value in vars(args).items():
        if name in known and value is not None:
            data[name] = value
    if problem is not None:
        if data.get("problem", problem) != problem:
            raise ConfigError(f"config problem {data['problem']!r} does not match subcommand {problem!r}")
        data["problem"] = problem
    return ScenarioConfig.from_dict(data)


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_scenarios(configs, workers, fmt, out) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SvdConvergenceWarning)
        rows = bench.run_many(configs, workers)
    capped = [w for w in caught if issubclass(w.category, SvdConvergenceWarning)]
    for w in caught:
        if w not in capped:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    if capped:
        print(f"note: {len(capped)} Lanczos partial SVDs stopped at their step cap "
              f"(last: {capped[-1].message})", file=sys.stderr)
    sections = []
    for kind in (bench.RpcaRow, bench.McRow):
        group = [r for r in rows if isinstance(r, kind)]
        if group:
            sections.append(bench.emit_table(group, fmt))
    _write("\n".join(sections), out)
    if not all(r.converged for r in rows):
        print("warning: at least one solver hit its iteration cap", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _svd_check(args) -> int:
    results = {
        "augmented-spectrum": bench.augmented_spectrum_check(args.trials, seed=args.seed),
        "lanczos-oracle": bench.lanczos_oracle_check(seed=args.seed),
        "prox-agreement": bench.prox_agreement_check(args.prox_trials, seed=args.seed),
    }
    for name, res in results.items():
        details = " ".join(f"{k}={v:.2e}" for k, v in res.items() if isinstance(v, float))
        print(f"{'PASS' if res['passed'] else 'FAIL'} {name} trials={res['trials']} {details}")
    return EXIT_OK if all(r["passed"] for r in results.values()) else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * getattr(args, "verbose", 0)
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "svd-check":
            if args.trials < 1 or args.prox_trials < 1:
                raise ConfigError("trial counts must be >= 1")
            return _svd_check(args)
        if args.command == "repro":
            shared = _load_config(args, None)
            common = {f.name: getattr(shared, f.name) for f in fields(ScenarioConfig)
                      if f.name in ("k", "oversample", "seed", "tol", "max_iter")}
            configs = bench.grid_configs(args.grid, **common)
            workers = bench.worker_slots(args.workers)
            return _run_scenarios(configs, workers, shared.format, shared.out)
        config = _load_config(args, args.command).validate()
        return _run_scenarios([config], 1, config.format, config.out)
    except ConfigError as exc:
        print(f"blws-nnm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
