"""Command-line interface.

    fuzzygan run --dataset pumadyn --model cgan --inject fri --seeds 0..4 \
        --split 0.8 --out results [--epochs N --batch N --lr X --config FILE]
    fuzzygan report --in results --format csv [--best] [--out FILE]

The default data directory comes from the FUZZYGAN_DATA environment
variable (falling back to ./data). Exit code 0 on success, 1 on any hard
failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .datasets import CATALOG
from .harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentError,
    _csv_text,
    best_view,
    data_path_for,
    emit_results,
    read_results,
    result_csv_row,
    run_experiment,
)

__all__ = ["main", "parse_seeds", "load_config_file"]


def parse_seeds(text: str) -> tuple[int, ...]:
    """Parse '0..4', '1,3,5' or a mix into an ordered seed tuple."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"seed range {part!r} is reversed")
            seeds.extend(range(lo, hi + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"no seeds in {text!r}")
    return tuple(seeds)


def _coerce(value: str):
    text = value.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def load_config_file(path) -> dict:
    """Flat `key = value` lines; '#' starts a comment; blank lines ignored."""
    overrides = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            overrides[key.strip()] = _coerce(value)
    return overrides


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzygan", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train one experiment cell over seeds")
    run_p.add_argument("--dataset", required=True, choices=sorted(CATALOG))
    run_p.add_argument("--model", required=True, choices=("cgan", "dnn"))
    run_p.add_argument("--inject", default="none", choices=("none", "fri", "fci", "fdi"))
    run_p.add_argument("--seeds", default="0..4", type=parse_seeds)
    run_p.add_argument("--split", default=0.8, type=float)
    run_p.add_argument("--out", default="results")
    run_p.add_argument("--data-dir", default=None,
                       help="directory with the dataset CSVs (default: $FUZZYGAN_DATA or ./data)")
    run_p.add_argument("--data-file", default=None,
                       help="explicit CSV path, overriding --data-dir and the catalog name")
    run_p.add_argument("--epochs", type=int, default=None)
    run_p.add_argument("--batch", type=int, default=None)
    run_p.add_argument("--lr", type=float, default=None)
    run_p.add_argument("--config", default=None, help="flat key=value override file")
    run_p.add_argument("--workers", type=int, default=1)
    run_p.add_argument("--histories", action="store_true",
                       help="also write per-seed loss-history CSVs")

    report_p = sub.add_parser("report", help="summarize result files from a directory")
    report_p.add_argument("--in", dest="in_dir", required=True)
    report_p.add_argument("--format", default="csv", choices=("csv", "json"))
    report_p.add_argument("--best", action="store_true",
                          help="best cgan injection per dataset, next to the dnn baseline")
    report_p.add_argument("--out", default=None, help="output file (default: stdout)")
    return parser


def _cmd_run(args) -> int:
    overrides = load_config_file(args.config) if args.config else {}
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.batch is not None:
        overrides["batch_size"] = args.batch
    if args.lr is not None:
        overrides["lr"] = args.lr

    config = ExperimentConfig(
        dataset=args.dataset,
        model=args.model,
        injection=args.inject,
        seeds=args.seeds,
        split_fraction=args.split,
        overrides=overrides,
        workers=args.workers,
        save_histories=args.histories,
    )
    data_path = args.data_file or data_path_for(args.dataset, args.data_dir)
    result = run_experiment(config, data_path=data_path)
    written = emit_results([result], args.out)
    agg = result.aggregates
    print(f"{config.cell_name}: NMAE {agg['nmae_mean']:.6g} +/- {agg['nmae_std']:.3g}, "
          f"NMSE {agg['nmse_mean']:.6g} +/- {agg['nmse_std']:.3g} "
          f"({agg['seeds_total'] - agg['seeds_failed']}/{agg['seeds_total']} seeds)")
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_report(args) -> int:
    results = read_results(args.in_dir)
    if args.best:
        rows = best_view(results)
        if args.format == "json":
            text = json.dumps(rows, indent=1)
        else:
            if rows:
                cols = list(rows[0].keys())
                lines = [",".join(cols)]
                lines += [",".join(str(r.get(c, "")) for c in cols) for r in rows]
                text = "\n".join(lines) + "\n"
            else:
                text = ""
    else:
        if args.format == "json":
            text = json.dumps(results, indent=1)
        else:
            text = _csv_text([result_csv_row(r) for r in results])

    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_report(args)
    except (ExperimentError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
