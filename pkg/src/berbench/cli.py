"""Command line entry point: ``berbench calibrate | run | report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .ground_truth import DEFAULT_VAR, PROFILES, load_or_calibrate
from .harness import CampaignConfig, read_records, run_campaign
from .reporting import (
    best_estimator_table,
    emit_plot,
    group_records,
    summary_table,
    table_to_csv,
    table_to_markdown,
)
from .scenarios import FAMILIES


def _calibrate(args) -> int:
    lo, hi = args.range
    for d in args.d:
        table = load_or_calibrate(args.cache, args.family, d, lo, hi, args.seed, args.profile, var=args.var)
        print(
            f"{args.family} d={d}: {len(table)} entries, BER {table.bers[0]:.4f}..{table.bers[-1]:.4f}, "
            f"max gap {table.max_ber_gap():.4f}"
        )
    return 0


def _run(args) -> int:
    config = CampaignConfig.from_json(args.config)
    if args.output_dir:
        config = CampaignConfig.from_dict({**config.to_dict(), "output_dir": args.output_dir})
    failed = 0
    for cell in run_campaign(config, workers=args.workers):
        failed += len(cell.failures)
        print(f"{config.family} d={cell.d} n={cell.n_per_class}: {len(cell.records)} records -> {cell.path}")
    if failed:
        print(f"{failed} runs failed; see the .failures.ndjson logs", file=sys.stderr)
        return 1
    return 0


def _load_all(records_dir: Path):
    files = sorted(records_dir.glob("*.ndjson"))
    files = [f for f in files if not f.name.endswith((".timings.ndjson", ".failures.ndjson"))]
    records, skipped = [], 0
    for f in files:
        recs = read_records(f)
        records.extend(recs)
        skipped += recs.skipped
    if skipped:
        print(f"warning: skipped {skipped} unreadable records", file=sys.stderr)
    return records


def _report(args) -> int:
    records_dir = Path(args.records)
    if records_dir.name != "records" and (records_dir / "records").is_dir():
        records_dir = records_dir / "records"
    records = _load_all(records_dir)
    if not records:
        print(f"no records under {records_dir}", file=sys.stderr)
        return 1
    group_by = tuple(args.group_by.split(","))
    estimators = args.estimators.split(",") if args.estimators else None
    build = best_estimator_table if args.best else summary_table
    rows = build(records, estimators, group_by)
    text = table_to_markdown(rows) if args.format == "markdown" else table_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.plots:
        plot_dir = Path(args.plots)
        ids = estimators or sorted(records[0].estimates)
        for key, recs in group_records(records, group_by).items():
            stem = "_".join(str(k) for k in key)
            for e in ids:
                emit_plot(recs, e, plot_dir / f"{stem}_{e}", span=args.span)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="berbench", description="Bayes error rate estimator benchmark")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="build (or load) calibration tables")
    cal.add_argument("--family", choices=FAMILIES, required=True)
    cal.add_argument("--d", type=int, nargs="+", required=True)
    cal.add_argument("--range", type=float, nargs=2, default=(0.01, 0.49), metavar=("LO", "HI"))
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    cal.add_argument("--var", type=float, default=DEFAULT_VAR)
    cal.add_argument("--cache", default="campaign/calibration")
    cal.set_defaults(func=_calibrate)

    run = sub.add_parser("run", help="run a campaign from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--output-dir", default=None)
    run.set_defaults(func=_run)

    rep = sub.add_parser("report", help="summarize records")
    rep.add_argument("--records", required=True)
    rep.add_argument("--group-by", default="family,d,n_per_class")
    rep.add_argument("--estimators", default=None, help="comma separated ids")
    rep.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    rep.add_argument("--best", action="store_true", help="only the lowest-MSE estimator per group")
    rep.add_argument("--out", default=None)
    rep.add_argument("--plots", default=None, help="directory for scatter/LOESS plots")
    rep.add_argument("--span", type=float, default=0.3)
    rep.set_defaults(func=_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, RuntimeError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
