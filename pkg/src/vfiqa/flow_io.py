"""Dense motion fields and the Middlebury ``.flo`` container."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FLO_MAGIC = 202021.25
# the format marks unknown flow with huge values
UNKNOWN_FLOW_THRESHOLD = 1e9
_HEADER = struct.Struct("<fii")


class FlowFormatError(ValueError):
    """Malformed ``.flo`` stream."""


@dataclass(frozen=True, eq=False)
class MotionField:
    """Per-pixel displacement ``(u, v)`` in pixels/frame, ``u`` horizontal.

    ``replaced`` counts components that were non-finite or sentinel values
    in the source file and were set to zero on ingestion.
    """

    u: np.ndarray
    v: np.ndarray
    replaced: int = 0

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=np.float64)
        v = np.ascontiguousarray(self.v, dtype=np.float64)
        if u.ndim != 2 or u.shape != v.shape:
            raise ValueError(f"u and v must be equal-shape 2-D grids, got {u.shape} and {v.shape}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def zeros(cls, height: int, width: int) -> "MotionField":
        return cls(np.zeros((height, width)), np.zeros((height, width)))

    @classmethod
    def constant(cls, height: int, width: int, u: float, v: float) -> "MotionField":
        return cls(np.full((height, width), float(u)), np.full((height, width), float(v)))

    @property
    def shape(self):
        return self.u.shape

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.u).all() and np.isfinite(self.v).all())

    def __eq__(self, other):
        if not isinstance(other, MotionField):
            return NotImplemented
        return np.array_equal(self.u, other.u) and np.array_equal(self.v, other.v)

    __hash__ = None

    def __mul__(self, a):
        return MotionField(self.u * a, self.v * a)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, MotionField):
            return MotionField(self.u + other.u, self.v + other.v)
        cu, cv = other
        return MotionField(self.u + cu, self.v + cv)


def check_same_shape(a: MotionField, b: MotionField):
    if a.shape != b.shape:
        raise ValueError(f"motion field dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}")


def read_flo(data: bytes) -> MotionField:
    """Decode a little-endian Middlebury ``.flo`` byte string."""
    if len(data) < _HEADER.size:
        raise FlowFormatError(f"not a flow file: {len(data)} bytes is shorter than the 12-byte header")
    magic, width, height = _HEADER.unpack_from(data)
    if magic != np.float32(FLO_MAGIC):
        raise FlowFormatError(f"not a flow file: magic {magic!r} != {FLO_MAGIC}")
    if width <= 0 or height <= 0:
        raise FlowFormatError(f"nonpositive flow dimensions {width}x{height}")
    expected = _HEADER.size + 8 * width * height
    if len(data) < expected:
        raise FlowFormatError(f"truncated flow payload: expected {expected} bytes, got {len(data)}")
    raw = np.frombuffer(data, dtype="<f4", count=2 * width * height, offset=_HEADER.size)
    uv = raw.astype(np.float64).reshape(height, width, 2)
    bad = ~np.isfinite(uv) | (np.abs(uv) > UNKNOWN_FLOW_THRESHOLD)
    replaced = int(bad.sum())
    if replaced:
        uv[bad] = 0.0
    return MotionField(uv[..., 0], uv[..., 1], replaced=replaced)


def write_flo(field: MotionField) -> bytes:
    if not field.is_finite():
        raise FlowFormatError("cannot write a flow field with non-finite components")
    f32_max = float(np.finfo(np.float32).max)
    if max(np.abs(field.u).max(initial=0.0), np.abs(field.v).max(initial=0.0)) > f32_max:
        raise FlowFormatError("flow components exceed the float32 range of the format")
    uv = np.empty((field.height, field.width, 2), dtype="<f4")
    uv[..., 0] = field.u
    uv[..., 1] = field.v
    return _HEADER.pack(FLO_MAGIC, field.width, field.height) + uv.tobytes()


def load_flo(path) -> MotionField:
    return read_flo(Path(path).read_bytes())


def save_flo(field: MotionField, path) -> None:
    Path(path).write_bytes(write_flo(field))
