import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from vfiqa.flow_io import MotionField
from vfiqa.media_io import Frame
from vfiqa.motion import (
    BlockMatchingEstimator,
    EstimatorConfig,
    candidate_offsets,
    downsample,
    estimate_flow,
    upsample_flow,
)


def textured(rng, h=96, w=128):
    img = gaussian_filter(rng.uniform(0, 255, (h, w)), 1.0)
    img = (img - img.min()) / (img.max() - img.min()) * 255
    return img.round().astype(np.uint8)


def interior(a, m=16):
    return a[m:-m, m:-m]


def test_config_validation():
    for kw in ({"pyramid_levels": 0}, {"block_size": 4}, {"block_size": 1}, {"search_radius": 0},
               {"smoothing_weight": -1.0}, {"smoothing_weight": float("nan")}):
        with pytest.raises(ValueError):
            EstimatorConfig(**kw)
    assert EstimatorConfig().max_displacement == 4 * 7


def test_candidate_order():
    ox, oy = candidate_offsets(1)
    assert (ox[0], oy[0]) == (0, 0)
    mags = ox * ox + oy * oy
    assert np.all(np.diff(mags) >= 0)
    assert len(ox) == 9


def test_pyramid_helpers():
    img = np.arange(35, dtype=float).reshape(5, 7)
    assert downsample(img).shape == (3, 4)
    assert downsample(np.ones((4, 4))).tolist() == [[1, 1], [1, 1]]
    u, v = upsample_flow(np.ones((3, 4)), -np.ones((3, 4)), (5, 7))
    assert u.shape == (5, 7) and np.all(u == 2) and np.all(v == -2)


def test_identical_frames_give_zero_motion(rng, backend):
    a = textured(rng)
    f = estimate_flow(a, a)
    assert np.mean(np.hypot(f.u, f.v)) < 0.25


def test_shift_right_by_three(rng, backend):
    a = textured(rng)
    f = estimate_flow(a, np.roll(a, 3, axis=1))
    assert abs(interior(f.u).mean() - 3) <= 0.5
    assert abs(interior(f.v).mean()) <= 0.5


@pytest.mark.parametrize("dx,dy", [(0, 0), (1, -2), (-4, 4), (7, 3), (-10, -6), (12, 1)])
def test_shift_recovery(dx, dy, rng):
    a = textured(rng)
    b = np.roll(a, (dy, dx), axis=(0, 1))
    f = estimate_flow(a, b)
    assert abs(np.median(interior(f.u, 24)) - dx) <= 0.5
    assert abs(np.median(interior(f.v, 24)) - dy) <= 0.5


def test_flat_frames_zero(backend):
    a = np.full((40, 48), 77, np.uint8)
    f = estimate_flow(a, a + 3)
    assert np.all(f.u == 0) and np.all(f.v == 0)


@pytest.mark.parametrize("shape", [(10, 10), (17, 23), (50, 31), (64, 64)])
@pytest.mark.parametrize("levels", [1, 2, 4])
def test_output_dimensions_and_range(shape, levels, rng):
    cfg = EstimatorConfig(pyramid_levels=levels, block_size=5, search_radius=2)
    a = rng.integers(0, 256, shape).astype(np.uint8)
    b = rng.integers(0, 256, shape).astype(np.uint8)
    f = estimate_flow(a, b, cfg)
    assert f.shape == shape
    assert f.is_finite()
    assert np.abs(f.u).max() <= cfg.max_displacement
    assert np.abs(f.v).max() <= cfg.max_displacement


def test_accepts_frames_and_rejects_mismatch(rng):
    a = textured(rng, 32, 32)
    fr0, fr1 = Frame.from_luma(a, 0), Frame.from_luma(np.roll(a, 1, 1), 1)
    est = BlockMatchingEstimator(EstimatorConfig(pyramid_levels=1))
    f = est(fr0, fr1)
    assert isinstance(f, MotionField) and f.shape == (32, 32)
    with pytest.raises(ValueError, match="differ"):
        estimate_flow(a, a[:, :30])


def test_deterministic(rng):
    a = textured(rng, 48, 64)
    b = np.roll(a, (2, -1), axis=(0, 1))
    assert estimate_flow(a, b) == estimate_flow(a, b)
