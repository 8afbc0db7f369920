"""Sequence-level scoring and the per-frame timing benchmark."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from vfiqa import _backend
from vfiqa.flow_io import MotionField, load_flo
from vfiqa.image import PSNR_CAP, cap_psnr, psnr, ssim, weighted_metric
from vfiqa.maps import write_pgm
from vfiqa.media_io import VideoSequence
from vfiqa.motion import EstimatorConfig, estimate_flow
from vfiqa.spatial import VmConfig, div_metric, divergence_map, vm_epe
from vfiqa.temporal import _masked_mean, epe, epe_weight_map, temporal_smoothness, temporal_smoothness_map


SCHEMA_VERSION = 1

MOTION_METRICS = ("epe", "ts", "div", "vm_epe", "s_diff")
IMAGE_METRICS = ("psnr", "ssim")
WEIGHTED_METRICS = {
    f"{img}_{mot}": (img, mot) for img in IMAGE_METRICS for mot in ("epe", "ts", "div")
}
ALL_METRICS = tuple(sorted(MOTION_METRICS + IMAGE_METRICS + tuple(WEIGHTED_METRICS)))
NEEDS_REF_FLOW = {"epe", "s_diff"}


class FlowSourceError(FileNotFoundError):
    pass


@dataclass(frozen=True)
class FlowDirectory:
    """Pre-computed flows: ``<root>/ref/NNNNNN.flo`` and ``<root>/dis/NNNNNN.flo``,
    where ``NNNNNN`` is the index of the first frame of the pair."""

    root: Path

    def path(self, kind: str, t: int) -> Path:
        return Path(self.root) / kind / f"{t:06d}.flo"

    def load(self, kind: str, t: int) -> MotionField:
        p = self.path(kind, t)
        if not p.is_file():
            raise FlowSourceError(f"missing flow file {p}")
        return load_flo(p)

    def __str__(self):
        return f"dir:{self.root}"


def parse_flow_source(spec: str):
    if spec == "builtin":
        return "builtin"
    if spec.startswith("dir:") and len(spec) > 4:
        return FlowDirectory(Path(spec[4:]))
    raise ValueError(f"flow source must be 'builtin' or 'dir:<path>', got {spec!r}")


def parse_metrics(spec) -> frozenset:
    names = [s.strip() for s in spec.split(",")] if isinstance(spec, str) else list(spec)
    names = [n for n in names if n]
    unknown = sorted(set(names) - set(ALL_METRICS))
    if unknown:
        raise ValueError(f"unknown metric(s) {', '.join(unknown)}; valid: {', '.join(ALL_METRICS)}")
    return frozenset(names)


@dataclass(frozen=True)
class MetricConfig:
    metrics: frozenset = frozenset(ALL_METRICS)
    estimator: EstimatorConfig = EstimatorConfig()
    vm: VmConfig = VmConfig()
    flow_source: object = "builtin"
    aggregation: str = "mean"

    def __post_init__(self):
        object.__setattr__(self, "metrics", parse_metrics(self.metrics))
        if self.aggregation != "mean":
            raise ValueError(f"only mean aggregation is supported, got {self.aggregation!r}")
        for name in self.metrics & set(WEIGHTED_METRICS):
            img, mot = WEIGHTED_METRICS[name]
            missing = [m for m in (img, mot) if m not in self.metrics]
            if missing:
                raise ValueError(f"{name} requires {' and '.join(missing)} to be enabled")
        if self.flow_source != "builtin" and not isinstance(self.flow_source, FlowDirectory):
            raise ValueError(f"bad flow source {self.flow_source!r}")

    @classmethod
    def with_dependencies(cls, metrics, **kw) -> "MetricConfig":
        """Config enabling ``metrics`` plus whatever the weighted ones depend on."""
        names = set(parse_metrics(metrics))
        for name in list(names):
            if name in WEIGHTED_METRICS:
                names.update(WEIGHTED_METRICS[name])
        return cls(metrics=frozenset(names), **kw)


@dataclass
class MetricReport:
    """Per-sample values and sequence means for each enabled metric.

    ``index[m][k]`` is the frame index of sample ``k``: the frame itself for
    image metrics, the first frame of the pair (or triple, for TS) for
    motion metrics. PSNR values of identical frames are stored capped; their
    indices are listed in ``infinite``.
    """

    n_frames: int
    width: int
    height: int
    per_frame: dict = field(default_factory=dict)
    index: dict = field(default_factory=dict)
    aggregate: dict = field(default_factory=dict)
    infinite: dict = field(default_factory=dict)
    excluded: dict = field(default_factory=dict)
    timing_ms: dict = field(default_factory=dict)
    backend: str = ""
    flow_source: str = "builtin"

    def to_dict(self, timing: bool = True) -> dict:
        per_frame = {}
        for m in sorted(self.per_frame):
            inf = set(self.infinite.get(m, ()))
            per_frame[m] = [
                {"index": i, "value": "inf" if i in inf else v}
                for i, v in zip(self.index[m], self.per_frame[m])
            ]
        d = {
            "schema": "vfiqa.report",
            "schema_version": SCHEMA_VERSION,
            "frames": self.n_frames,
            "width": self.width,
            "height": self.height,
            "backend": self.backend,
            "flow_source": self.flow_source,
            "metrics": sorted(self.per_frame),
            "aggregate": {m: self.aggregate[m] for m in sorted(self.aggregate)},
            "per_frame": per_frame,
            "infinite": {m: list(v) for m, v in sorted(self.infinite.items())},
            "excluded": dict(sorted(self.excluded.items())),
        }
        if timing:
            d["timing_ms"] = dict(sorted(self.timing_ms.items()))
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        metrics = sorted(self.per_frame)
        rows = {}
        for m in metrics:
            inf = set(self.infinite.get(m, ()))
            for i, v in zip(self.index[m], self.per_frame[m]):
                rows.setdefault(i, {})[m] = "inf" if i in inf else repr(v)
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["index"] + metrics)
        for i in sorted(rows):
            w.writerow([i] + [rows[i].get(m, "") for m in metrics])
        w.writerow(["mean"] + ["" if self.aggregate[m] is None else repr(self.aggregate[m]) for m in metrics])
        return out.getvalue()


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("VFIQA_THREADS", "1")))
    except ValueError:
        return 1


def _mean(values):
    return float(np.mean(values)) if values else None


class _Stopwatch:
    """Accumulates per-stage milliseconds across worker threads."""

    def __init__(self):
        self.ms = {}
        self._lock = threading.Lock()

    def run(self, stage, fn, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        elapsed = (time.perf_counter() - t0) * 1000.0
        with self._lock:
            self.ms[stage] = self.ms.get(stage, 0.0) + elapsed
        return out


def score_sequences(
    ref: VideoSequence,
    dis: VideoSequence,
    cfg: MetricConfig | None = None,
    threads: int | None = None,
    estimator: Callable | None = None,
    map_dir=None,
) -> MetricReport:
    """Score a distorted sequence against its reference.

    Flow is computed (or loaded) for every consecutive pair of both
    sequences as needed, then every enabled metric is evaluated per pair
    and averaged. Work units run on a pool of ``threads`` workers; results
    are collected in index order so the report does not depend on the
    worker count. ``estimator`` overrides the built-in estimator. When
    ``map_dir`` is given, per-pair divergence and EPE-weight maps are
    written there as PGM.
    """
    cfg = cfg or MetricConfig()
    threads = threads or default_threads()
    if len(ref) != len(dis):
        raise ValueError(f"frame count mismatch: reference has {len(ref)}, distorted has {len(dis)}")
    if len(ref) and (ref.width, ref.height) != (dis.width, dis.height):
        raise ValueError(f"dimension mismatch: {ref.width}x{ref.height} vs {dis.width}x{dis.height}")

    metrics = cfg.metrics
    n = len(ref)
    pairs = max(n - 1, 0)
    watch = _Stopwatch()
    report = MetricReport(n, ref.width, ref.height, backend=_backend.name(), flow_source=str(cfg.flow_source))

    need_dis = bool(metrics & set(MOTION_METRICS))
    need_ref = bool(metrics & NEEDS_REF_FLOW)
    if estimator is None:
        def estimator(a, b):
            return estimate_flow(a, b, cfg.estimator)

    def flow(kind, t):
        if isinstance(cfg.flow_source, FlowDirectory):
            return watch.run("motion_estimation", cfg.flow_source.load, kind, t)
        seq = ref if kind == "ref" else dis
        return watch.run("motion_estimation", estimator, seq[t].y, seq[t + 1].y)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        ref_flows = list(pool.map(lambda t: flow("ref", t), range(pairs))) if need_ref else []
        dis_flows = list(pool.map(lambda t: flow("dis", t), range(pairs))) if need_dis else []
        report.excluded["flo_replaced"] = sum(f.replaced for f in ref_flows + dis_flows)

        def pair_metrics(t):
            out = {}
            fd = dis_flows[t] if need_dis else None
            if "epe" in metrics:
                out["epe"] = watch.run("epe", epe, ref_flows[t], fd)
            if "div" in metrics:
                out["div"] = watch.run("div", div_metric, fd)
            if "vm_epe" in metrics or "s_diff" in metrics:
                vd = watch.run("vm_epe", vm_epe, fd, cfg.vm)
                if "vm_epe" in metrics:
                    out["vm_epe"] = vd
                if "s_diff" in metrics:
                    vr = watch.run("s_diff", vm_epe, ref_flows[t], cfg.vm)
                    out["s_diff"] = abs(vd - vr)
            return out

        def ts_sample(t):
            values, valid = watch.run("ts", temporal_smoothness_map, dis_flows[t], dis_flows[t + 1])
            return _masked_mean(values, valid), int(valid.size - valid.sum())

        def frame_metrics(t):
            out = {}
            if "psnr" in metrics:
                out["psnr"] = watch.run("psnr", psnr, ref[t].y, dis[t].y)
            if "ssim" in metrics:
                out["ssim"] = watch.run("ssim", ssim, ref[t].y, dis[t].y)
            return out

        per_pair = list(pool.map(pair_metrics, range(pairs)))
        ts = list(pool.map(ts_sample, range(pairs - 1))) if "ts" in metrics else []
        per_image = list(pool.map(frame_metrics, range(n)))

    def put(name, idx, values):
        report.index[name] = list(idx)
        report.per_frame[name] = [float(v) for v in values]

    for name in ("epe", "div", "vm_epe", "s_diff"):
        if name in metrics:
            put(name, range(pairs), [p[name] for p in per_pair])
    if "ts" in metrics:
        put("ts", range(pairs - 1), [v for v, _ in ts])
        report.excluded["ts_pixels"] = sum(x for _, x in ts)
        report.excluded["ts_samples_all_excluded"] = sum(1 for _, x in ts if x == ref.width * ref.height)
    if "psnr" in metrics:
        raw = [f["psnr"] for f in per_image]
        report.infinite["psnr"] = [i for i, v in enumerate(raw) if math.isinf(v)]
        put("psnr", range(n), [cap_psnr(v) for v in raw])
    if "ssim" in metrics:
        put("ssim", range(n), [f["ssim"] for f in per_image])

    # weighted scores pair the motion sample starting at t with image frame t + 1
    for name in sorted(metrics & set(WEIGHTED_METRICS)):
        img, mot = WEIGHTED_METRICS[name]
        idx = report.index[mot]
        vals = [weighted_metric(report.per_frame[img][t + 1], a) for t, a in zip(idx, report.per_frame[mot])]
        put(name, idx, vals)

    for name in report.per_frame:
        report.aggregate[name] = _mean(report.per_frame[name])
    report.timing_ms = watch.ms

    if map_dir is not None and need_dis:
        _write_maps(Path(map_dir), ref_flows, dis_flows)
    return report


def _write_maps(root: Path, ref_flows, dis_flows):
    root.mkdir(parents=True, exist_ok=True)
    for t, fd in enumerate(dis_flows):
        if fd.width >= 3 and fd.height >= 3:
            write_pgm(divergence_map(fd), root / f"div_{t:06d}.pgm")
        if ref_flows:
            write_pgm(epe_weight_map(ref_flows[t], fd), root / f"epe_weight_{t:06d}.pgm")


# --- benchmark -------------------------------------------------------------

# flow fields each metric needs per frame: EPE compares two, the others use
# one (TS reuses the previous frame's field)
BENCH_FLOWS = {"EPE": 2, "TS": 1, "DIV": 1, "VM-EPE": 1}


@dataclass
class BenchRow:
    metric: str
    estimation_ms: float
    calc_ms: float

    @property
    def total_ms(self) -> float:
        return self.estimation_ms + self.calc_ms


@dataclass
class BenchmarkResult:
    width: int
    height: int
    repetitions: int
    backend: str
    flow_ms: float
    rows: list

    def row(self, metric) -> BenchRow:
        return next(r for r in self.rows if r.metric == metric)

    def format_table(self) -> str:
        lines = [
            f"per-frame timing at {self.width}x{self.height}, median of {self.repetitions} runs, "
            f"backend={self.backend}; excludes file I/O",
            f"{'':8s} {'Motion Est. (ms)':>17s} {'Calc. (ms)':>11s} {'Total (ms)':>11s}",
        ]
        for r in self.rows:
            lines.append(f"{r.metric:8s} {r.estimation_ms:17.1f} {r.calc_ms:11.1f} {r.total_ms:11.1f}")
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "width": self.width,
            "height": self.height,
            "repetitions": self.repetitions,
            "backend": self.backend,
            "flow_ms": self.flow_ms,
            "rows": [
                {"metric": r.metric, "estimation_ms": r.estimation_ms, "calc_ms": r.calc_ms, "total_ms": r.total_ms}
                for r in self.rows
            ],
        }


def _median_ms(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1000.0)
    return float(np.median(times))


def _textured_frame(rng, height, width):
    noise = rng.integers(0, 256, size=(height, width)).astype(np.float64)
    # light blur so block matching sees structure, not pure noise
    smooth = (noise + np.roll(noise, 1, 0) + np.roll(noise, 1, 1) + np.roll(noise, (1, 1), (0, 1))) / 4.0
    return smooth.astype(np.uint8)


def benchmark(
    width: int = 1920,
    height: int = 1080,
    repetitions: int = 50,
    seed: int = 0,
    estimator_cfg: EstimatorConfig | None = None,
    vm_cfg: VmConfig | None = None,
    metrics=tuple(BENCH_FLOWS),
    estimation: bool = True,
) -> BenchmarkResult:
    """Median per-frame time of flow estimation and of each metric's calculation.

    The estimation column is the single-field estimation time times the
    number of fields the metric needs; the calculation column times the
    metric alone on random flow fields. ``estimation=False`` skips the
    (slow) estimation timing and reports it as zero.
    """
    if repetitions < 10:
        raise ValueError(f"repetitions must be >= 10, got {repetitions}")
    unknown = set(metrics) - set(BENCH_FLOWS)
    if unknown:
        raise ValueError(f"unknown benchmark metric(s): {', '.join(sorted(unknown))}")
    rng = np.random.default_rng(seed)
    cfg = estimator_cfg or EstimatorConfig()
    vm = vm_cfg or VmConfig()

    a = _textured_frame(rng, height, width)
    b = np.roll(a, (1, 2), axis=(0, 1))
    flow_ms = _median_ms(lambda: estimate_flow(a, b, cfg), repetitions) if estimation else 0.0

    def field():
        return MotionField(rng.normal(0.0, 2.0, (height, width)), rng.normal(0.0, 2.0, (height, width)))

    f_ref, f_dis, f_next = field(), field(), field()
    calcs = {
        "EPE": lambda: epe(f_ref, f_dis),
        "TS": lambda: temporal_smoothness(f_dis, f_next),
        "DIV": lambda: div_metric(f_dis),
        "VM-EPE": lambda: vm_epe(f_dis, vm),
    }
    rows = [BenchRow(m, BENCH_FLOWS[m] * flow_ms, _median_ms(calcs[m], repetitions)) for m in metrics]
    return BenchmarkResult(width, height, repetitions, _backend.name(), flow_ms, rows)


__all__ = [
    "ALL_METRICS",
    "BenchmarkResult",
    "FlowDirectory",
    "MetricConfig",
    "MetricReport",
    "PSNR_CAP",
    "benchmark",
    "parse_flow_source",
    "parse_metrics",
    "score_sequences",
]
