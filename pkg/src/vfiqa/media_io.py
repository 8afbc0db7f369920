"""Readers and writers for 8-bit 4:2:0 video: raw I420 and YUV4MPEG2."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

Y4M_SIGNATURE = b"YUV4MPEG2"
Y4M_FRAME = b"FRAME"
# 8-bit 4:2:0 variants; anything else (444, 422, mono, high bit depth) is refused
Y4M_420_TAGS = {"420", "420jpeg", "420paldv", "420mpeg2"}


class VideoFormatError(ValueError):
    """Malformed or unsupported video stream."""


class MissingDimensionsError(VideoFormatError):
    """Raw input was given without its frame dimensions."""


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Frame:
    """One planar 8-bit YUV 4:2:0 picture."""

    width: int
    height: int
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    index: int = 0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise VideoFormatError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        if self.width % 2 or self.height % 2:
            raise VideoFormatError(f"4:2:0 needs even dimensions, got {self.width}x{self.height}")
        if self.index < 0:
            raise VideoFormatError(f"frame index must be >= 0, got {self.index}")
        cw, ch = self.width // 2, self.height // 2
        for name, plane, shape in (
            ("y", self.y, (self.height, self.width)),
            ("u", self.u, (ch, cw)),
            ("v", self.v, (ch, cw)),
        ):
            if plane.shape != shape:
                raise VideoFormatError(f"{name} plane has shape {plane.shape}, expected {shape}")
            if plane.dtype != np.uint8:
                raise VideoFormatError(f"{name} plane must be uint8, got {plane.dtype}")

    @classmethod
    def from_bytes(cls, payload: bytes, width: int, height: int, index: int = 0) -> "Frame":
        ysize = width * height
        csize = ysize // 4
        buf = np.frombuffer(payload, dtype=np.uint8)
        if buf.size != ysize + 2 * csize:
            raise VideoFormatError(
                f"partial frame: expected {ysize + 2 * csize} bytes, got {buf.size}"
            )
        y = buf[:ysize].reshape(height, width)
        u = buf[ysize:ysize + csize].reshape(height // 2, width // 2)
        v = buf[ysize + csize:].reshape(height // 2, width // 2)
        return cls(width, height, y, u, v, index)

    @classmethod
    def from_luma(cls, luma, index: int = 0, chroma: int = 128) -> "Frame":
        """Build a frame from a luma grid with flat chroma."""
        y = np.ascontiguousarray(luma, dtype=np.uint8)
        h, w = y.shape
        c = np.full((h // 2, w // 2), chroma, dtype=np.uint8)
        return cls(w, h, _readonly(y.copy()), _readonly(c), _readonly(c.copy()), index)

    def to_bytes(self) -> bytes:
        return self.y.tobytes() + self.u.tobytes() + self.v.tobytes()

    def with_index(self, index: int) -> "Frame":
        return Frame(self.width, self.height, self.y, self.u, self.v, index)


@dataclass
class VideoSequence:
    frames: list[Frame] = field(default_factory=list)
    frame_rate: Fraction | None = None

    def __post_init__(self):
        for i, f in enumerate(self.frames):
            if f.index != i:
                raise VideoFormatError(f"frame indices must be consecutive from 0; position {i} has index {f.index}")
            if (f.width, f.height) != (self.frames[0].width, self.frames[0].height):
                raise VideoFormatError(
                    f"frame {i} is {f.width}x{f.height}, expected {self.frames[0].width}x{self.frames[0].height}"
                )

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i):
        return self.frames[i]

    @property
    def width(self):
        return self.frames[0].width if self.frames else 0

    @property
    def height(self):
        return self.frames[0].height if self.frames else 0


def luma(frame: Frame) -> np.ndarray:
    """The Y plane as a ``height x width`` grid (not copied)."""
    return frame.y


def frame_size(width: int, height: int) -> int:
    return width * height * 3 // 2


def _as_stream(source) -> BinaryIO:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return io.BytesIO(bytes(source))
    return source


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def _check_dims(width, height):
    if width <= 0 or height <= 0:
        raise VideoFormatError(f"dimensions must be positive, got {width}x{height}")
    if width % 2 or height % 2:
        raise VideoFormatError(f"4:2:0 needs even dimensions, got {width}x{height}")


def iter_raw_yuv420(source, width: int, height: int) -> Iterator[Frame]:
    """Yield frames from a raw I420 stream one at a time."""
    _check_dims(width, height)
    stream = _as_stream(source)
    size = frame_size(width, height)
    index = 0
    while True:
        payload = _read_exact(stream, size)
        if not payload:
            return
        if len(payload) != size:
            raise VideoFormatError(
                f"partial frame: frame {index} expected {size} bytes, got {len(payload)}"
            )
        yield Frame.from_bytes(payload, width, height, index)
        index += 1


def read_raw_yuv420(source, width: int, height: int, frame_rate=None) -> VideoSequence:
    return VideoSequence(list(iter_raw_yuv420(source, width, height)), _fraction(frame_rate))


def write_raw_yuv420(frames: Iterable[Frame], sink: BinaryIO | None = None) -> bytes | None:
    """Write frames as raw I420. Returns bytes when ``sink`` is None."""
    out = io.BytesIO() if sink is None else sink
    for f in frames:
        out.write(f.to_bytes())
    return out.getvalue() if sink is None else None


def _fraction(rate):
    if rate is None or isinstance(rate, Fraction):
        return rate
    return Fraction(rate).limit_denominator(1001000)


def _parse_y4m_header(line: bytes) -> dict:
    tokens = line.split()
    if not tokens or tokens[0] != Y4M_SIGNATURE:
        raise VideoFormatError("not a YUV4MPEG2 stream: missing signature")
    params = {}
    for tok in tokens[1:]:
        key, value = chr(tok[0]), tok[1:].decode("ascii", errors="replace")
        params[key] = value
    if "W" not in params or "H" not in params:
        raise VideoFormatError("YUV4MPEG2 header must declare W and H")
    try:
        width, height = int(params["W"]), int(params["H"])
    except ValueError:
        raise VideoFormatError(f"bad dimensions in YUV4MPEG2 header: {line!r}") from None
    colorspace = params.get("C", "420jpeg")
    if colorspace not in Y4M_420_TAGS:
        if colorspace.startswith("420"):
            raise VideoFormatError(f"unsupported colorspace C{colorspace}: only 8-bit 4:2:0 is supported")
        raise VideoFormatError(f"unsupported colorspace C{colorspace}: only 4:2:0 is supported")
    rate = None
    if "F" in params:
        try:
            num, den = params["F"].split(":")
            rate = Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError):
            raise VideoFormatError(f"bad frame rate F{params['F']}") from None
    # I (interlacing), A (aspect), X (comments) are accepted and ignored
    return {"width": width, "height": height, "frame_rate": rate, "colorspace": colorspace}


def _read_line(stream: BinaryIO, limit: int = 4096) -> bytes:
    buf = bytearray()
    while len(buf) < limit:
        c = stream.read(1)
        if not c:
            break
        if c == b"\n":
            return bytes(buf)
        buf += c
    if len(buf) >= limit:
        raise VideoFormatError("YUV4MPEG2 header line too long")
    raise VideoFormatError("truncated YUV4MPEG2 stream: header line without newline")


class Y4MReader:
    """Streaming YUV4MPEG2 reader; iterate to get frames in order."""

    def __init__(self, source):
        self._stream = _as_stream(source)
        first = self._stream.read(len(Y4M_SIGNATURE))
        if first != Y4M_SIGNATURE:
            raise VideoFormatError("not a YUV4MPEG2 stream: missing signature")
        header = self._parse(first + _read_line(self._stream))
        self.width = header["width"]
        self.height = header["height"]
        self.frame_rate = header["frame_rate"]
        self.colorspace = header["colorspace"]

    @staticmethod
    def _parse(line):
        h = _parse_y4m_header(line)
        _check_dims(h["width"], h["height"])
        return h

    def __iter__(self) -> Iterator[Frame]:
        size = frame_size(self.width, self.height)
        index = 0
        while True:
            marker = self._stream.read(len(Y4M_FRAME))
            if not marker:
                return
            if marker != Y4M_FRAME:
                raise VideoFormatError(f"expected FRAME marker before frame {index}, got {marker!r}")
            _read_line(self._stream)  # frame parameters, ignored
            payload = _read_exact(self._stream, size)
            if len(payload) != size:
                raise VideoFormatError(
                    f"truncated frame payload: frame {index} expected {size} bytes, got {len(payload)}"
                )
            yield Frame.from_bytes(payload, self.width, self.height, index)
            index += 1


def iter_y4m(source) -> Iterator[Frame]:
    return iter(Y4MReader(source))


def read_y4m(source) -> VideoSequence:
    reader = Y4MReader(source)
    return VideoSequence(list(reader), reader.frame_rate)


def write_y4m(seq: VideoSequence, sink: BinaryIO | None = None, colorspace: str = "420jpeg") -> bytes | None:
    """Write a sequence as YUV4MPEG2. Returns bytes when ``sink`` is None."""
    if colorspace not in Y4M_420_TAGS:
        raise VideoFormatError(f"unsupported colorspace C{colorspace}")
    out = io.BytesIO() if sink is None else sink
    rate = seq.frame_rate if seq.frame_rate is not None else Fraction(25)
    out.write(
        f"YUV4MPEG2 W{seq.width} H{seq.height} F{rate.numerator}:{rate.denominator} Ip A1:1 C{colorspace}\n".encode()
    )
    for f in seq.frames:
        out.write(Y4M_FRAME + b"\n")
        out.write(f.to_bytes())
    return out.getvalue() if sink is None else None


def open_video(path, width: int | None = None, height: int | None = None) -> VideoSequence:
    """Read a ``.y4m`` file, or a raw I420 file when dimensions are given."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(Y4M_SIGNATURE))
        fh.seek(0)
        if head == Y4M_SIGNATURE:
            return read_y4m(fh)
        if path.suffix.lower() == ".y4m":
            raise VideoFormatError(f"{path}: not a YUV4MPEG2 stream: missing signature")
        if width is None or height is None:
            raise MissingDimensionsError(f"{path}: raw YUV input needs explicit width and height")
        return read_raw_yuv420(fh, width, height)
