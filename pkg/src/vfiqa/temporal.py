"""Temporal-consistency metrics: endpoint error, EPE weights, temporal smoothness."""
import warnings

import numpy as np

from vfiqa import _backend
from vfiqa.flow_io import MotionField, check_same_shape


def epe_map(f_ref: MotionField, f_dis: MotionField) -> np.ndarray:
    """Per-pixel endpoint error ``|F_ref(x) - F_dis(x)|``."""
    check_same_shape(f_ref, f_dis)
    du = f_ref.u - f_dis.u
    dv = f_ref.v - f_dis.v
    return np.sqrt(du * du + dv * dv)


def epe(f_ref: MotionField, f_dis: MotionField) -> float:
    """Mean endpoint error over the frame. Lower is better."""
    return float(np.mean(epe_map(f_ref, f_dis)))


def epe_weight_map(f_ref: MotionField, f_dis: MotionField) -> np.ndarray:
    """EPE map normalised to sum to one.

    A perfect match (zero total error) gives the uniform map instead of 0/0.
    """
    m = epe_map(f_ref, f_dis)
    total = m.sum()
    if total == 0.0:
        return np.full(m.shape, 1.0 / m.size)
    return m / total


def temporal_smoothness_map(f_t: MotionField, f_t1: MotionField):
    """Residual along each motion trajectory.

    Pixel ``x`` is followed to ``x + F_t(x)``; the next field is sampled
    there bilinearly and compared with ``F_t(x)``. Returns ``(values,
    valid)`` where ``valid`` is False for trajectories leaving the frame.
    """
    check_same_shape(f_t, f_t1)
    return _backend.kernels().trajectory_residual(f_t.u, f_t.v, f_t1.u, f_t1.v)


def temporal_smoothness(f_t: MotionField, f_t1: MotionField) -> float:
    """Mean trajectory residual between consecutive flow fields (no-reference).

    Trajectories that leave the frame are excluded. If none stay inside
    the result is 0 and a warning is issued.
    """
    values, valid = temporal_smoothness_map(f_t, f_t1)
    return _masked_mean(values, valid)


def _masked_mean(values, valid):
    n = int(valid.sum())
    if n == 0:
        warnings.warn("every motion trajectory leaves the frame; temporal smoothness set to 0", RuntimeWarning)
        return 0.0
    if n == valid.size:
        return float(np.mean(values))
    return float(np.mean(values[valid]))
