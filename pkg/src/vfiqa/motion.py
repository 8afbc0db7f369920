"""Built-in dense motion estimator.

Coarse-to-fine block matching on luma: at every pyramid level an integer
search of radius ``search_radius`` is run around the upsampled coarser
estimate, scored by mean absolute difference over a ``block_size`` window,
and the result is cleaned with one 3x3 vector-median pass. The estimator is
deterministic; learned estimators plug in through ``MotionEstimator`` or by
supplying ``.flo`` files.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from vfiqa import _backend
from vfiqa.flow_io import MotionField
from vfiqa.media_io import Frame


@dataclass(frozen=True)
class EstimatorConfig:
    pyramid_levels: int = 3
    block_size: int = 9
    search_radius: int = 4
    # cost added per pixel of deviation from the coarser level's prediction
    smoothing_weight: float = 0.05

    def __post_init__(self):
        if self.pyramid_levels < 1:
            raise ValueError(f"pyramid_levels must be >= 1, got {self.pyramid_levels}")
        if self.block_size < 3 or self.block_size % 2 == 0:
            raise ValueError(f"block_size must be odd and >= 3, got {self.block_size}")
        if self.search_radius < 1:
            raise ValueError(f"search_radius must be >= 1, got {self.search_radius}")
        if not self.smoothing_weight >= 0.0:
            raise ValueError(f"smoothing_weight must be >= 0, got {self.smoothing_weight}")

    @property
    def max_displacement(self) -> int:
        """Largest reachable |u| or |v| over the whole pyramid."""
        return self.search_radius * (2 ** self.pyramid_levels - 1)


class MotionEstimator(Protocol):
    def __call__(self, frame_t, frame_t1) -> MotionField: ...


def candidate_offsets(radius: int):
    """Search offsets ordered by length, then raster order."""
    offs = [(dx, dy) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1)]
    offs.sort(key=lambda o: (o[0] * o[0] + o[1] * o[1], o[1], o[0]))
    ox = np.array([o[0] for o in offs], dtype=np.int64)
    oy = np.array([o[1] for o in offs], dtype=np.int64)
    return ox, oy


def _as_luma(img) -> np.ndarray:
    if isinstance(img, Frame):
        img = img.y
    a = np.asarray(img)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D luma grid, got shape {a.shape}")
    return a.astype(np.float64)


def downsample(img: np.ndarray) -> np.ndarray:
    """2x2 box average; odd sizes are edge-padded first."""
    h, w = img.shape
    if h % 2 or w % 2:
        img = np.pad(img, ((0, h % 2), (0, w % 2)), mode="edge")
    return 0.25 * (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2])


def upsample_flow(u, v, shape):
    h, w = shape
    u2 = np.repeat(np.repeat(u, 2, axis=0), 2, axis=1)[:h, :w] * 2
    v2 = np.repeat(np.repeat(v, 2, axis=0), 2, axis=1)[:h, :w] * 2
    return np.ascontiguousarray(u2), np.ascontiguousarray(v2)


def estimate_flow(frame_t, frame_t1, cfg: EstimatorConfig | None = None) -> MotionField:
    """Forward flow ``t -> t+1`` between two frames (or luma grids)."""
    cfg = cfg or EstimatorConfig()
    a = _as_luma(frame_t)
    b = _as_luma(frame_t1)
    if a.shape != b.shape:
        raise ValueError(f"frame dimensions differ: {a.shape[::-1]} vs {b.shape[::-1]}")

    pyr_a, pyr_b = [a], [b]
    for _ in range(cfg.pyramid_levels - 1):
        if min(pyr_a[-1].shape) < 2 * cfg.block_size:
            break
        pyr_a.append(downsample(pyr_a[-1]))
        pyr_b.append(downsample(pyr_b[-1]))

    k = _backend.kernels()
    ox, oy = candidate_offsets(cfg.search_radius)
    u = np.zeros(pyr_a[-1].shape, dtype=np.int64)
    v = np.zeros(pyr_a[-1].shape, dtype=np.int64)
    for level in range(len(pyr_a) - 1, -1, -1):
        la, lb = pyr_a[level], pyr_b[level]
        if u.shape != la.shape:
            u, v = upsample_flow(u, v, la.shape)
        u, v = k.sad_search(la, lb, u, v, ox, oy, cfg.block_size, cfg.smoothing_weight)
        su, sv = k.vector_median(u.astype(np.float64), v.astype(np.float64), 3)
        u = su.astype(np.int64)
        v = sv.astype(np.int64)
    return MotionField(u.astype(np.float64), v.astype(np.float64))


class BlockMatchingEstimator:
    """``MotionEstimator`` wrapper around :func:`estimate_flow`."""

    def __init__(self, cfg: EstimatorConfig | None = None):
        self.cfg = cfg or EstimatorConfig()

    def __call__(self, frame_t, frame_t1) -> MotionField:
        return estimate_flow(frame_t, frame_t1, self.cfg)

