"""Luma PSNR/SSIM and their motion-weighted forms."""
import math

import numpy as np
from scipy.ndimage import correlate1d

PEAK = 255.0
# identical frames have infinite PSNR; sequence means use this instead
PSNR_CAP = 100.0

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def _pair(ref, dis):
    a = np.asarray(ref, dtype=np.float64)
    b = np.asarray(dis, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(ref_luma, dis_luma) -> float:
    """8-bit PSNR in dB; ``math.inf`` for identical images."""
    a, b = _pair(ref_luma, dis_luma)
    d = a - b
    mse = float(np.mean(d * d))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def cap_psnr(value: float) -> float:
    return min(value, PSNR_CAP)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img, g):
    # separable Gaussian, keeping only positions where the window fits
    r = len(g) // 2
    out = correlate1d(img, g, axis=0, mode="constant")
    out = correlate1d(out, g, axis=1, mode="constant")
    return out[r:img.shape[0] - r, r:img.shape[1] - r]


def ssim_map(ref_luma, dis_luma) -> np.ndarray:
    a, b = _pair(ref_luma, dis_luma)
    if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs an image of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape}")
    g = gaussian_window()
    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(ref_luma, dis_luma) -> float:
    """Mean single-scale SSIM (11x11 Gaussian window, sigma 1.5)."""
    a, b = _pair(ref_luma, dis_luma)
    if np.array_equal(a, b):
        if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
            raise ValueError(f"SSIM needs an image of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape}")
        return 1.0
    return float(np.mean(ssim_map(a, b)))


def motion_weight(alpha: float) -> float:
    """Map a motion error in [0, inf) to a weight in (0, 1]: ``1 / (1 + alpha)``."""
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0.0:
        raise ValueError(f"motion error must be finite and >= 0, got {alpha}")
    return 1.0 / (1.0 + alpha)


def weighted_metric(image_score: float, alpha: float) -> float:
    """Image score scaled by the motion weight, e.g. PSNR_EPE = PSNR / (1 + EPE)."""
    return motion_weight(alpha) * image_score
