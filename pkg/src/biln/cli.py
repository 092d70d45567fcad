"""Command-line interface.

    biln run --config experiment.json [--out-dir DIR]
    biln sweep-k --config experiment.json --k 2,5,10,20,40 [--out-dir DIR]
    biln validate-theorems [--seed S] [--draws N]

``run`` writes ``report.json`` and ``summary.csv`` into the output directory;
``sweep-k`` writes ``sweep.csv`` plus one ``report_k<K>.json`` per swept k.
Exit codes: 0 on success, 1 on a configuration error, 2 when a validation
suite reports violations.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import ConfigError, ExperimentConfig, k_sweep, run_experiment, summary_csv, sweep_csv
from .validate import check_distillation_soundness, check_noise_rate_bounds


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biln")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a configured experiment")
    run_p.add_argument("--config", required=True, help="JSON experiment config")
    run_p.add_argument("--out-dir", default=".", help="directory for report.json / summary.csv")

    sweep_p = sub.add_parser("sweep-k", help="rerun an experiment over several k values")
    sweep_p.add_argument("--config", required=True, help="JSON experiment config")
    sweep_p.add_argument("--k", required=True, help="comma-separated k values, e.g. 2,5,10,20,40")
    sweep_p.add_argument("--out-dir", default=".", help="directory for sweep.csv and per-k reports")

    val_p = sub.add_parser("validate-theorems", help="run the collection/bound property suites")
    val_p.add_argument("--seed", type=int, default=0)
    val_p.add_argument("--draws", type=int, default=1000, help="number of random noise models")
    return parser


def _print_summary(text: str) -> None:
    for line in text.strip().splitlines():
        print(line)


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_json_file(args.config)
    report = run_experiment(cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    summary = summary_csv(report)
    (out_dir / "summary.csv").write_text(summary, encoding="utf-8")
    _print_summary(summary)
    print(f"wrote {out_dir / 'report.json'} and {out_dir / 'summary.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_json_file(args.config)
    try:
        k_values = [int(tok) for tok in args.k.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--k must be comma-separated integers, got {args.k!r}") from None
    reports = k_sweep(cfg, k_values)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, report in reports.items():
        (out_dir / f"report_k{k}.json").write_text(report.to_json(), encoding="utf-8")
    csv_text = sweep_csv(reports)
    (out_dir / "sweep.csv").write_text(csv_text, encoding="utf-8")
    _print_summary(csv_text)
    print(f"wrote {out_dir / 'sweep.csv'} and {len(reports)} per-k reports")
    return 0


def _cmd_validate(args) -> int:
    sound = check_distillation_soundness(n_models=args.draws, seed=args.seed)
    print(
        f"collection soundness: {sound['models']} noise models, "
        f"{sound['collected']} collected labels, {sound['violations']} violations"
    )
    bounds = check_noise_rate_bounds(n_models=args.draws, seed=args.seed)
    print(
        f"rate bounds: {bounds['models']} noise models x "
        f"{bounds['points_per_model']} points, {bounds['violations']} violations "
        f"(max excess {bounds['max_excess']:.3e})"
    )
    failed = sound["violations"] + bounds["violations"]
    print("PASS" if failed == 0 else "FAIL")
    return 0 if failed == 0 else 2


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep-k":
            return _cmd_sweep(args)
        return _cmd_validate(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:  # console-script hook
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
