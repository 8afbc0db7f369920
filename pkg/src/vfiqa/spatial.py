"""Spatial-consistency metrics on a single motion field."""
from dataclasses import dataclass

import numpy as np

from vfiqa import _backend
from vfiqa.flow_io import MotionField, check_same_shape
from vfiqa.temporal import epe


@dataclass(frozen=True)
class VmConfig:
    """Vector-median patch size ``n`` (odd, >= 3)."""

    n: int = 3

    def __post_init__(self):
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"vector median patch size must be odd and >= 3, got {self.n}")


def vector_median_filter(field: MotionField, cfg: VmConfig = VmConfig()) -> MotionField:
    """Replace each vector by the vector median of its ``n x n`` neighbourhood.

    Neighbourhoods are clipped at the frame border, so no vectors are
    invented. Among equal-energy candidates the centre wins, then the first
    in raster order.
    """
    u, v = _backend.kernels().vector_median(field.u, field.v, cfg.n)
    return MotionField(u, v)


def vm_epe(field: MotionField, cfg: VmConfig = VmConfig()) -> float:
    """Mean deviation of a field from its vector-median-filtered version."""
    return epe(field, vector_median_filter(field, cfg))


def smoothness_dissimilarity(f_ref: MotionField, f_dis: MotionField, cfg: VmConfig = VmConfig()) -> float:
    check_same_shape(f_ref, f_dis)
    return abs(vm_epe(f_dis, cfg) - vm_epe(f_ref, cfg))


def _check_div_size(field):
    if field.width < 3 or field.height < 3:
        raise ValueError(f"divergence needs a field of at least 3x3, got {field.width}x{field.height}")


def divergence_map(field: MotionField) -> np.ndarray:
    """Absolute divergence ``|du/dx + dv/dy|``.

    Central differences in the interior, forward/backward differences on
    the border rows and columns. Flow is taken in raw pixels/frame.
    """
    _check_div_size(field)
    return _backend.kernels().divergence(field.u, field.v)


def div_metric(field: MotionField) -> float:
    """DIV: mean absolute divergence of the field (no-reference)."""
    _check_div_size(field)
    return _backend.kernels().divergence_mean(field.u, field.v)
