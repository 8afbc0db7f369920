"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdicts are
repeated in an "acceptance criteria" section at the end of the session.
"""
import csv
import io
import itertools
import math
import time

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from oracles import flo_bytes, kendall_tau_b_exact, pearson_exact, spearman_exact, temporal_smoothness_loop, vector_median_loop
from vfiqa.cli import main
from vfiqa.correlation import LogisticParams, fit_logistic, krcc, logistic, plcc, rmse, srcc
from vfiqa.flow_io import FlowFormatError, MotionField, read_flo, write_flo
from vfiqa.image import weighted_metric
from vfiqa.media_io import Frame, VideoFormatError, VideoSequence, read_raw_yuv420, read_y4m, write_raw_yuv420, write_y4m
from vfiqa.pipeline import benchmark
from vfiqa.spatial import VmConfig, div_metric, divergence_map, vector_median_filter, vm_epe
from vfiqa.temporal import epe, temporal_smoothness


def test_c1_vector_median_oracle(criterion):
    rng = np.random.default_rng(101)
    fields = [MotionField(rng.normal(0, 3, (9, 9)), rng.normal(0, 3, (9, 9))) for _ in range(1000)]
    t0 = time.perf_counter()
    outputs = [vector_median_filter(f, VmConfig(3)) for f in fields]
    elapsed = time.perf_counter() - t0
    mismatches = 0
    for f, out in zip(fields, outputs):
        ou, ov = vector_median_loop(f.u, f.v, 3)
        mismatches += int(not (np.array_equal(out.u, ou) and np.array_equal(out.v, ov)))
    criterion(1, mismatches == 0 and elapsed < 10.0,
              f"vector median == exhaustive oracle on 1000 9x9 fields ({mismatches} mismatches), filter time {elapsed:.2f}s < 10s")


def test_c2_analytic_divergence(criterion):
    y, x = np.mgrid[0:129, 0:129].astype(np.float64)
    d_src = divergence_map(MotionField(x, y))[1:-1, 1:-1]
    d_rot = divergence_map(MotionField(y, -x))[1:-1, 1:-1]
    err_src = float(np.max(np.abs(d_src - 2.0)))
    err_rot = float(np.max(np.abs(d_rot)))
    criterion(2, err_src <= 1e-9 and err_rot <= 1e-9,
              f"129x129 (x,y) interior div max |d-2| = {err_src:.1e}, (y,-x) max |d| = {err_rot:.1e} (tol 1e-9)")


def test_c3_epe(criterion):
    rng = np.random.default_rng(103)
    self_zero = all(
        epe(f, f) == 0.0
        for f in (MotionField(rng.normal(0, 5, (16, 12)), rng.normal(0, 5, (16, 12))) for _ in range(100))
    )
    offset = epe(MotionField.zeros(20, 30), MotionField.constant(20, 30, 3, 4))
    worst = 0.0
    for _ in range(100):
        a = MotionField(rng.normal(size=(10, 10)), rng.normal(size=(10, 10)))
        b = MotionField(rng.normal(size=(10, 10)), rng.normal(size=(10, 10)))
        k = rng.uniform(-10, 10)
        worst = max(worst, abs(epe(k * a, k * b) - abs(k) * epe(a, b)) / (abs(k) * epe(a, b)))
    ok = self_zero and abs(offset - 5.0) <= 1e-12 and worst <= 1e-9
    criterion(3, ok, f"epe(F,F)==0 x100: {self_zero}; (3,4) offset -> {offset!r}; worst scaling rel err {worst:.1e}")


def test_c4_temporal_smoothness(criterion):
    const = temporal_smoothness(MotionField.constant(6, 6, 1.25, -0.5), MotionField.constant(6, 6, 1.25, -0.5))
    rng = np.random.default_rng(104)
    worst = 0.0
    for _ in range(200):
        a = MotionField(rng.normal(0, 1.5, (6, 6)), rng.normal(0, 1.5, (6, 6)))
        b = MotionField(rng.normal(0, 1.5, (6, 6)), rng.normal(0, 1.5, (6, 6)))
        expected, excluded = temporal_smoothness_loop(a.u, a.v, b.u, b.v)
        if excluded == 36:
            continue
        worst = max(worst, abs(temporal_smoothness(a, b) - expected))
    criterion(4, abs(const) <= 1e-9 and worst <= 1e-9,
              f"constant motion TS = {const!r}; 200 random 6x6 vs loop oracle max err {worst:.1e} (tol 1e-9)")


def test_c5_weighted_metric_contract(criterion):
    rng = np.random.default_rng(105)
    scores = np.concatenate([rng.uniform(0, 100, 500), rng.uniform(0, 1, 500)])
    fallback = all(weighted_metric(float(s), 0.0) == float(s) for s in scores)
    violations = 0
    for s in scores:
        a1, a2 = sorted(rng.exponential(2.0, 2))
        violations += int(weighted_metric(float(s), a2) > weighted_metric(float(s), a1))
    criterion(5, fallback and violations == 0,
              f"weighted(s,0)==s on 1000 scores: {fallback}; monotonicity violations in alpha: {violations}/1000")


def test_c6_logistic_recovery(criterion):
    true = LogisticParams(100.0, 0.0, 50.0, 10.0)
    t0 = time.perf_counter()
    rng = np.random.default_rng(106)
    noisy = []
    for _ in range(5):
        x = rng.uniform(0, 100, 100)
        y = logistic(x, true) + rng.normal(0, 1.0, 100)
        noisy.append(rmse(logistic(x, fit_logistic(x, y)), y))
    x = rng.uniform(0, 100, 100)
    y = logistic(x, true)
    clean = rmse(logistic(x, fit_logistic(x, y)), y)
    elapsed = time.perf_counter() - t0
    ok = all(0.8 <= r <= 1.3 for r in noisy) and clean < 1e-6 and elapsed < 5.0
    criterion(6, ok, f"sigma=1 refit RMSEs {[round(r, 3) for r in noisy]} in [0.8,1.3]; noise-free RMSE {clean:.1e} < 1e-6; {elapsed:.2f}s < 5s")


def test_c7_rank_statistics_all_permutations(criterion):
    base = list(range(1, 9))
    t0 = time.perf_counter()
    mismatches = 0
    for perm in itertools.permutations(base):
        mismatches += int(plcc(base, perm) != pearson_exact(base, perm))
        mismatches += int(srcc(base, perm) != spearman_exact(base, perm))
        mismatches += int(krcc(base, perm) != kendall_tau_b_exact(base, perm))
    elapsed = time.perf_counter() - t0
    criterion(7, mismatches == 0 and elapsed < 60.0,
              f"PLCC/SRCC/KRCC on all 40320 permutations exactly equal exact oracles ({mismatches} mismatches), {elapsed:.1f}s < 60s")


def test_c8_runtime_ordering(criterion):
    res = benchmark(1920, 1080, repetitions=10)
    div, vm, ep = res.row("DIV"), res.row("VM-EPE"), res.row("EPE")
    ratio = vm.calc_ms / div.calc_ms
    ok = ratio >= 100.0 and div.total_ms < ep.total_ms
    criterion(8, ok,
              f"1080p ({res.backend}): VM-EPE/DIV calc ratio {ratio:.0f}x >= 100x "
              f"(DIV {div.calc_ms:.2f} ms, VM-EPE {vm.calc_ms:.1f} ms); DIV total {div.total_ms:.0f} < EPE total {ep.total_ms:.0f} ms")


# synthetic manifest: DMOS uniform on [lo, hi]; score = logistic-inverse of DMOS + N(0, noise)
DESIGN = LogisticParams(80.0, 10.0, 2.5, 0.6)
DMOS_RANGE = (15.0, 75.0)
SCORE_NOISE = 0.25


def _inverse_logistic(y, p):
    q = (y - p.beta2) / (p.beta1 - p.beta2)
    return p.beta3 + abs(p.beta4) * np.log(q / (1 - q))


def design_plcc():
    """corr(logistic(score), dmos) under the generator, by Gauss quadrature."""
    lo, hi = DMOS_RANGE
    yn, yw = np.polynomial.legendre.leggauss(200)
    y = 0.5 * (hi - lo) * yn + 0.5 * (hi + lo)
    yw = yw / yw.sum()
    en, ew = np.polynomial.hermite_e.hermegauss(80)
    ew = ew / ew.sum()
    fx = logistic(_inverse_logistic(y[:, None], DESIGN) + SCORE_NOISE * en[None, :], DESIGN)
    w = yw[:, None] * ew[None, :]
    ef, ef2, ey, ey2 = (w * fx).sum(), (w * fx * fx).sum(), (yw * y).sum(), (yw * y * y).sum()
    efy = (w * fx * y[:, None]).sum()
    return (efy - ef * ey) / math.sqrt((ef2 - ef * ef) * (ey2 - ey * ey))


def ladder_responses(rng, levels=(0.0, 0.5, 1.0, 2.0, 4.0), size=48):
    def smooth():
        a = gaussian_filter(rng.normal(size=(size, size)), 4)
        return a / a.std() * 2

    base = MotionField(smooth(), smooth())
    n1 = MotionField(rng.normal(size=(size, size)), rng.normal(size=(size, size)))
    n2 = MotionField(rng.normal(size=(size, size)), rng.normal(size=(size, size)))
    rows = []
    for s in levels:
        cur, nxt = base + s * n1, base + s * n2
        rows.append((epe(base, cur), temporal_smoothness(cur, nxt), div_metric(cur), vm_epe(cur)))
    return np.array(rows)


def test_c9_synthetic_correlation_and_metric_response(criterion, tmp_path, capsys):
    rng = np.random.default_rng(109)
    n = 400
    dmos = rng.uniform(*DMOS_RANGE, n)
    scores = _inverse_logistic(dmos, DESIGN) + rng.normal(0, SCORE_NOISE, n)
    manifest = tmp_path / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ref", "dis", "dmos", "epe"])
        for d, s in zip(dmos, scores):
            w.writerow(["ref.y4m", "dis.y4m", repr(float(d)), repr(float(s))])
    code = main(["correlate", "--manifest", str(manifest), "--out", str(tmp_path / "table.csv")])
    capsys.readouterr()
    with open(tmp_path / "table.csv", newline="") as fh:
        row = next(r for r in csv.DictReader(fh) if r["group"] == "overall")
    got, want = float(row["plcc"]), design_plcc()

    monotone = 0
    for _ in range(10):
        resp = ladder_responses(rng)
        monotone += int(np.all(np.diff(resp, axis=0) >= 0))
    ok = code == 0 and abs(got - want) <= 0.05 and monotone == 10
    criterion(9, ok,
              f"correlate PLCC {got:.4f} vs design {want:.4f} (|d| {abs(got - want):.4f} <= 0.05); "
              f"EPE/TS/DIV/VM-EPE monotone over 5-level ladder on {monotone}/10 base fields")


def _random_sequence(rng):
    w, h, n = 2 * int(rng.integers(1, 9)), 2 * int(rng.integers(1, 9)), int(rng.integers(1, 4))
    frames = []
    for t in range(n):
        planes = [rng.integers(0, 256, s, dtype=np.uint8) for s in ((h, w), (h // 2, w // 2), (h // 2, w // 2))]
        frames.append(Frame(w, h, *planes, index=t))
    return VideoSequence(frames)


MALFORMED_FLO = {
    "zero magic": (b"\x00\x00\x00\x00" + b"\x01\x00\x00\x00" * 2 + bytes(8), "not a flow file"),
    "short header": (b"PIEH\x01", "not a flow file"),
    "nonpositive dims": (flo_bytes([[0.0]], [[0.0]])[:4] + b"\x00\x00\x00\x00\x01\x00\x00\x00", "nonpositive"),
    "truncated": (flo_bytes([[1.0, 2.0]], [[3.0, 4.0]])[:-2], "truncated"),
}
MALFORMED_Y4M = {
    "no signature": (b"YUV4MPEG W2 H2\n", "missing signature"),
    "C444": (b"YUV4MPEG2 W2 H2 F30:1 C444\nFRAME\n" + bytes(12), "unsupported colorspace"),
    "10-bit": (b"YUV4MPEG2 W2 H2 F30:1 C420p10\n", "unsupported colorspace"),
    "truncated payload": (b"YUV4MPEG2 W2 H2 F30:1\nFRAME\n\x10\x10", "truncated frame payload"),
}


def test_c10_format_fidelity(criterion):
    rng = np.random.default_rng(110)
    flo_ok = 0
    y4m_ok = 0
    for _ in range(100):
        h, w = int(rng.integers(1, 12)), int(rng.integers(1, 12))
        u = (rng.normal(0, 50, (h, w))).astype(np.float32)
        v = (rng.normal(0, 50, (h, w))).astype(np.float32)
        data = flo_bytes(u.tolist(), v.tolist())
        back = read_flo(data)
        flo_ok += int(back == MotionField(u, v) and write_flo(back) == data)
        seq = _random_sequence(rng)
        y4m = write_y4m(seq)
        raw = write_raw_yuv420(seq)
        again = read_y4m(y4m)
        y4m_ok += int(write_y4m(again) == y4m and write_raw_yuv420(read_raw_yuv420(raw, seq.width, seq.height)) == raw)

    specified = 0
    for data, msg in MALFORMED_FLO.values():
        with pytest.raises(FlowFormatError, match=msg):
            read_flo(data)
        specified += 1
    for data, msg in MALFORMED_Y4M.values():
        with pytest.raises(VideoFormatError, match=msg):
            read_y4m(data)
        specified += 1
    with pytest.raises(VideoFormatError, match="partial frame"):
        read_raw_yuv420(bytes(9), 2, 2)
    specified += 1

    # byte-level mutations of valid streams must surface as format errors only
    crashes = 0
    good_flo = flo_bytes([[1.0, 2.0]], [[3.0, 4.0]])
    good_y4m = write_y4m(_random_sequence(rng))
    for _ in range(300):
        for good, reader, err in ((good_flo, read_flo, FlowFormatError), (good_y4m, read_y4m, VideoFormatError)):
            buf = bytearray(good)
            for _ in range(int(rng.integers(1, 4))):
                buf[int(rng.integers(0, len(buf)))] = int(rng.integers(0, 256))
            buf = bytes(buf[: int(rng.integers(0, len(buf) + 1))])
            try:
                reader(io.BytesIO(buf).getvalue())
            except err:
                pass
            except Exception:  # noqa: BLE001
                crashes += 1
    ok = flo_ok == 100 and y4m_ok == 100 and crashes == 0
    criterion(10, ok,
              f".flo round-trips {flo_ok}/100, y4m+raw round-trips {y4m_ok}/100 bit-exact; "
              f"{specified} malformed inputs raise the specified errors; {crashes} crashes in 600 mutated streams")
