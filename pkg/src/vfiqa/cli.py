"""``vfiqa`` command line: compute, correlate, bench.

Exit codes: 0 success, 2 bad arguments or malformed input tables,
3 I/O failure (unreadable or malformed video/flow files, missing files).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from vfiqa import _backend
from vfiqa.correlation import MIN_FIT_SAMPLES, DegenerateInputError, evaluate_metric
from vfiqa.flow_io import FlowFormatError
from vfiqa.media_io import MissingDimensionsError, VideoFormatError, open_video
from vfiqa.motion import EstimatorConfig
from vfiqa.pipeline import (
    ALL_METRICS,
    BENCH_FLOWS,
    MetricConfig,
    benchmark,
    default_threads,
    parse_flow_source,
    parse_metrics,
    score_sequences,
)
from vfiqa.spatial import VmConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3

TABLE_COLUMNS = ["metric", "group", "n", "plcc", "srcc", "krcc", "rmse", "beta1", "beta2", "beta3", "beta4"]


class UsageError(Exception):
    pass


def _add_common(p):
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: $VFIQA_THREADS or 1)")
    p.add_argument("--backend", choices=["auto", "compiled", "python"], default="auto")


def _add_scoring(p):
    p.add_argument("--width", type=int, help="frame width, required for raw .yuv input")
    p.add_argument("--height", type=int, help="frame height, required for raw .yuv input")
    p.add_argument("--flow", default="builtin", help="'builtin' or 'dir:<path>' with ref/ and dis/ .flo files")
    p.add_argument("--vm-n", type=int, default=3, help="vector median patch size (odd, >= 3)")
    p.add_argument("--levels", type=int, default=EstimatorConfig.pyramid_levels)
    p.add_argument("--block", type=int, default=EstimatorConfig.block_size)
    p.add_argument("--radius", type=int, default=EstimatorConfig.search_radius)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vfiqa", description="Motion-field quality metrics for frame-interpolated video.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="score a distorted sequence against its reference")
    c.add_argument("--ref", required=True, type=Path)
    c.add_argument("--dis", required=True, type=Path)
    c.add_argument("--metrics", default=",".join(ALL_METRICS), help=f"comma list from: {', '.join(ALL_METRICS)}")
    c.add_argument("--out", type=Path, help="report path (.json or .csv); JSON to stdout if omitted")
    c.add_argument("--no-timing", action="store_true", help="omit timing fields from the JSON report")
    c.add_argument("--maps", type=Path, help="write per-pair divergence / EPE-weight PGM maps here")
    _add_scoring(c)
    _add_common(c)

    r = sub.add_parser("correlate", help="fit metrics to DMOS from a manifest")
    r.add_argument("--manifest", required=True, type=Path, help="CSV with header ref,dis,dmos[,group][,<metric>...]")
    r.add_argument("--group-by", help="manifest column to split results by")
    r.add_argument("--metrics", help="metrics to evaluate (default: metric columns in the manifest, else all)")
    r.add_argument("--out", required=True, type=Path)
    _add_scoring(r)
    _add_common(r)

    b = sub.add_parser("bench", help="per-frame timing of estimation and metric calculation")
    b.add_argument("--width", type=int, default=1920)
    b.add_argument("--height", type=int, default=1080)
    b.add_argument("--reps", type=int, default=50)
    b.add_argument("--metrics", default=",".join(BENCH_FLOWS), help=f"comma list from: {', '.join(BENCH_FLOWS)}")
    b.add_argument("--json", type=Path, help="also write the table as JSON")
    b.add_argument("--backend", choices=["auto", "compiled", "python"], default="auto")
    return parser


def _metric_config(args, metrics) -> MetricConfig:
    try:
        return MetricConfig(
            metrics=metrics,
            estimator=EstimatorConfig(args.levels, args.block, args.radius),
            vm=VmConfig(args.vm_n),
            flow_source=parse_flow_source(args.flow),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(path, args):
    try:
        return open_video(path, args.width, args.height)
    except MissingDimensionsError as exc:
        raise UsageError(f"{exc} (--width/--height)") from None


def cmd_compute(args) -> int:
    try:
        metrics = parse_metrics(args.metrics)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg = _metric_config(args, metrics)
    ref = _load(args.ref, args)
    dis = _load(args.dis, args)
    try:
        report = score_sequences(ref, dis, cfg, threads=args.threads, map_dir=args.maps)
    except (FileNotFoundError, FlowFormatError):
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out is None:
        sys.stdout.write(report.to_json(timing=not args.no_timing))
    elif args.out.suffix.lower() == ".csv":
        args.out.write_text(report.to_csv())
    else:
        args.out.write_text(report.to_json(timing=not args.no_timing))
    return EXIT_OK


def read_manifest(path: Path):
    """Parse a manifest CSV into row dicts; errors name the 1-based line."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [c for c in ("ref", "dis", "dmos") if c not in fields]
        if missing:
            raise UsageError(f"{path}: line 1: manifest header lacks column(s) {', '.join(missing)}")
        rows = []
        for line_no, raw in enumerate(reader, start=2):
            try:
                dmos = float(raw["dmos"])
            except (TypeError, ValueError):
                raise UsageError(f"{path}: row {line_no - 1} (line {line_no}): dmos {raw['dmos']!r} is not a number") from None
            if not math.isfinite(dmos):
                raise UsageError(f"{path}: row {line_no - 1} (line {line_no}): dmos must be finite")
            row = {"line": line_no, "ref": raw["ref"], "dis": raw["dis"], "dmos": dmos, "extra": {}, "scores": {}}
            for col in fields:
                if col in ("ref", "dis", "dmos"):
                    continue
                value = raw.get(col)
                if col in ALL_METRICS and value not in (None, ""):
                    try:
                        row["scores"][col] = float(value)
                    except ValueError:
                        raise UsageError(f"{path}: row {line_no - 1} (line {line_no}): {col} {value!r} is not a number") from None
                else:
                    row["extra"][col] = value
            rows.append(row)
    return fields, rows


def _score_rows(rows, metrics, args, base: Path):
    missing = {m for m in metrics for r in rows if m not in r["scores"]}
    if not missing:
        return
    try:
        cfg = MetricConfig.with_dependencies(
            missing,
            estimator=EstimatorConfig(args.levels, args.block, args.radius),
            vm=VmConfig(args.vm_n),
            flow_source=parse_flow_source(args.flow),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cache = {}
    for r in rows:
        pending = [m for m in metrics if m not in r["scores"]]
        if not pending:
            continue
        key = (r["ref"], r["dis"])
        if key not in cache:
            ref = _load(base / r["ref"], args)
            dis = _load(base / r["dis"], args)
            cache[key] = score_sequences(ref, dis, cfg, threads=args.threads)
        report = cache[key]
        for m in pending:
            value = report.aggregate.get(m)
            if value is None:
                raise UsageError(f"line {r['line']}: sequence too short to compute {m}")
            r["scores"][m] = value


def evaluate_groups(rows, metrics, group_by=None):
    """Evaluation rows for every metric, overall and per group (refit per group)."""
    out = []
    warnings = []
    groups = [("overall", rows)]
    if group_by:
        labels = sorted({r["extra"].get(group_by, "") for r in rows})
        groups += [(g, [r for r in rows if r["extra"].get(group_by, "") == g]) for g in labels]
    for m in metrics:
        for label, members in groups:
            if len(members) < MIN_FIT_SAMPLES:
                warnings.append(f"skipping {m}/{label}: {len(members)} rows < {MIN_FIT_SAMPLES}")
                continue
            try:
                rep = evaluate_metric([r["scores"][m] for r in members], [r["dmos"] for r in members])
            except DegenerateInputError as exc:
                warnings.append(f"skipping {m}/{label}: {exc}")
                continue
            d = rep.to_dict()
            d["metric"] = m
            d["group"] = label
            out.append(d)
    return out, warnings


def cmd_correlate(args) -> int:
    fields, rows = read_manifest(args.manifest)
    if args.group_by and args.group_by not in fields:
        raise UsageError(f"--group-by column {args.group_by!r} not in manifest header")
    if args.metrics:
        try:
            metrics = sorted(parse_metrics(args.metrics))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        present = sorted(c for c in fields if c in ALL_METRICS)
        metrics = present or list(ALL_METRICS)
    _score_rows(rows, metrics, args, args.manifest.parent)
    table, warnings = evaluate_groups(rows, metrics, args.group_by)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in table:
            w.writerow({k: row[k] for k in TABLE_COLUMNS})
    for row in table:
        print(
            f"{row['metric']:10s} {row['group']:16s} n={row['n']:<4d} PLCC={row['plcc']:.3f} "
            f"SRCC={row['srcc']:.3f} KRCC={row['krcc']:.3f} RMSE={row['rmse']:.3f}"
        )
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.reps < 10:
        raise UsageError(f"--reps must be >= 10, got {args.reps}")
    names = [s.strip() for s in args.metrics.split(",") if s.strip()]
    unknown = [n for n in names if n not in BENCH_FLOWS]
    if unknown:
        raise UsageError(f"unknown benchmark metric(s) {', '.join(unknown)}; valid: {', '.join(BENCH_FLOWS)}")
    result = benchmark(args.width, args.height, args.reps, metrics=names)
    sys.stdout.write(result.format_table())
    if args.json:
        args.json.write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    return EXIT_OK


COMMANDS = {"compute": cmd_compute, "correlate": cmd_correlate, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = default_threads()
    try:
        _backend.set_backend(args.backend)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"vfiqa {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        if isinstance(exc, (VideoFormatError, FlowFormatError)):
            print(f"vfiqa {args.command}: error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"vfiqa {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"vfiqa {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
