"""Command-line entry point: ``viewfinder {simulate,analyze,calibrate,anova,tlx}``.

Exit status 0 on success, 2 for bad input (unreadable or malformed files,
invalid options), 3 when a computation fails numerically. Diagnostics go to
stderr; stdout only carries short run summaries.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

from . import __version__
from .calibration import calibrate, read_targets
from .io import (
    anova_from_rows, anova_report_rows, atomic_write_text, condition_table, config_hash,
    fitts_table, load_config, read_log, read_summary_rows, rows_to_csv, scatter_rows,
    summaries_by_sequence, technique_table, write_log, write_summaries,
)
from .metrics import TLX_SUBSCALES, TlxResponse, tlx_raw, tlx_weighted
from .motorsim import default_params, load_params, save_params, simulate_experiment

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    """Raised for anything the user can fix by changing inputs or options."""


def _simulate(args) -> None:
    cfg = load_config(args.config)
    seed = cfg.master_seed if args.seed is None else args.seed
    cfg.master_seed = seed
    params = load_params(cfg.params) if cfg.params else default_params()
    missing = [t for t in cfg.techniques if t not in {k.value for k in params}]
    if missing:
        raise InputError(f"no motor parameters for {missing}")
    records = simulate_experiment(
        params, seed, participants=cfg.participants, sequences=cfg.sequences,
        conditions=cfg.conditions(), n_targets=cfg.targets_per_sequence, depth=cfg.depth,
        h_fov=cfg.h_fov, workers=cfg.workers)
    n = write_log(records, args.out)
    manifest = {"seed": seed, "config_hash": config_hash(cfg), "config": json.loads(cfg.to_json()),
                "rows": n, "version": __version__}
    atomic_write_text(args.out + ".manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {n} trials to {args.out}")


def _analyze(args) -> None:
    records = read_log(args.log)
    if not records:
        raise InputError(f"{args.log}: log has no data rows")
    summaries = summaries_by_sequence(records)
    out = args.out
    os.makedirs(out, exist_ok=True)
    seq_path = os.path.join(out, "sequences.csv")
    write_summaries(summaries, seq_path)
    rows = read_summary_rows(seq_path)
    for name, (header, body) in (("table2.csv", technique_table(rows)),
                                 ("table3.csv", condition_table(rows)),
                                 ("fitts.csv", fitts_table(rows)),
                                 ("scatter.csv", scatter_rows(records))):
        atomic_write_text(os.path.join(out, name), rows_to_csv(header, body))
    n_out = sum(s.n_outliers for _, _, s in summaries)
    report = {"trials": len(records), "sequences": len(summaries), "outliers_excluded": n_out,
              "invalid_sequences": sum(not s.valid for _, _, s in summaries)}
    atomic_write_text(os.path.join(out, "report.json"), json.dumps(report, indent=2) + "\n")
    print(f"analyzed {len(records)} trials in {len(summaries)} sequences; "
          f"{n_out} outliers excluded")


def _calibrate(args) -> None:
    targets = read_targets(args.targets)
    result = calibrate(targets, max_evals=args.max_evals, seed=args.seed)
    save_params(result.params, args.out, extra={
        "residuals": result.residuals, "objective": result.objective,
        "evaluations": result.evaluations, "seconds": round(result.seconds, 1)})
    header = ["technique", "size", "distance", "metric", "target", "simulated", "rel_error"]
    atomic_write_text(os.path.splitext(args.out)[0] + "_residuals.csv",
                      rows_to_csv(header, ([r[h] for h in header] for r in result.residuals)))
    print(f"calibrated {len(result.params)} techniques in {result.seconds:.0f} s; "
          f"max |MT error| {100 * result.max_abs_rel('mt'):.1f}%")


def _anova(args) -> None:
    rows = read_summary_rows(args.summaries)
    table = anova_from_rows(rows, args.measure, args.aggregate)
    header, body = anova_report_rows(table, args.measure)
    atomic_write_text(args.out, rows_to_csv(header, body))
    print(f"{args.measure}: error df {table.error.df}")


def _tlx(args) -> None:
    weight_cols = [f"{s}_weight" for s in TLX_SUBSCALES]
    with open(args.responses, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        missing = [c for c in (*TLX_SUBSCALES, *weight_cols) if c not in cols]
        if missing:
            raise InputError(f"{args.responses}: missing columns {missing}")
        id_cols = [c for c in cols if c not in TLX_SUBSCALES and c not in weight_cols]
        body = []
        for i, row in enumerate(reader, start=2):
            try:
                resp = TlxResponse(tuple(float(row[s]) for s in TLX_SUBSCALES),
                                   tuple(int(row[w]) for w in weight_cols))
            except (TypeError, ValueError) as exc:
                raise InputError(f"{args.responses}: row {i}: {exc}") from None
            body.append([row[c] for c in id_cols]
                        + [f"{tlx_raw(resp):.2f}", f"{tlx_weighted(resp):.2f}"])
    atomic_write_text(args.out, rows_to_csv(id_cols + ["raw", "weighted"], body))
    print(f"scored {len(body)} responses")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="viewfinder", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a trial log")
    p.add_argument("--config", help="JSON experiment config (defaults when omitted)")
    p.add_argument("--seed", type=int, help="master seed; overrides the config")
    p.add_argument("--out", required=True, help="trial-log CSV to write")
    p.set_defaults(func=_simulate)

    p = sub.add_parser("analyze", help="summaries, tables, Fitts fits and scatter data from a log")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_analyze)

    p = sub.add_parser("calibrate", help="fit motor parameters to per-condition means")
    p.add_argument("--targets", required=True, help="CSV of per-condition target means")
    p.add_argument("--out", required=True, help="JSON parameter file to write")
    p.add_argument("--seed", type=int, default=2022)
    p.add_argument("--max-evals", type=int, default=2000)
    p.set_defaults(func=_calibrate)

    p = sub.add_parser("anova", help="participant-blocked ANOVA for one measure")
    p.add_argument("--summaries", required=True, help="per-sequence summaries CSV")
    p.add_argument("--measure", required=True, help="summary column, e.g. throughput_bps")
    p.add_argument("--out", required=True)
    p.add_argument("--aggregate", choices=("sequence", "condition"), default="sequence",
                   help="'condition' averages replicates first (one value per cell)")
    p.set_defaults(func=_anova)

    p = sub.add_parser("tlx", help="raw and weighted NASA-TLX scores")
    p.add_argument("--responses", required=True,
                   help="CSV with the six subscale ratings and <subscale>_weight columns")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_tlx)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"viewfinder {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"viewfinder {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
