"""Export per-pixel maps (EPE, weights, divergence) for inspection."""
from pathlib import Path

import numpy as np


def normalize(values, vmax=None) -> np.ndarray:
    """Scale a nonnegative map to [0, 1]; ``vmax`` defaults to the map maximum."""
    a = np.asarray(values, dtype=np.float64)
    top = float(a.max()) if vmax is None else float(vmax)
    if top <= 0.0:
        return np.zeros_like(a)
    return np.clip(a / top, 0.0, 1.0)


def to_pgm(values, vmax=None) -> bytes:
    """Binary (P5) 8-bit greyscale image of a normalised map; 0 is black."""
    img = np.round(normalize(values, vmax) * 255.0).astype(np.uint8)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def write_pgm(values, path, vmax=None) -> None:
    Path(path).write_bytes(to_pgm(values, vmax))


def read_pgm(data: bytes) -> np.ndarray:
    parts = data.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError("only 8-bit PGM is supported")
    pixels = parts[4]
    return np.frombuffer(pixels[: w * h], dtype=np.uint8).reshape(h, w)


def write_csv(values, path, normalized=False) -> None:
    a = normalize(values) if normalized else np.asarray(values, dtype=np.float64)
    np.savetxt(path, a, delimiter=",", fmt="%.17g")
