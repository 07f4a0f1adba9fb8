"""Objective quality assessment: MSE, PSNR, and SSIM.

These functions never clip their inputs; callers that compare 8-bit
provenance images (the bench module) clip to [0, 255] first.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

from .errors import SizeError
from .image import as_image

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
PEAK_DEFAULT = 255.0


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    """Mean squared difference."""
    a, b = _check_pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b, peak: float = PEAK_DEFAULT) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    err = mse(a, b)
    if err == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / err))


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g1 = np.exp(-(coords ** 2) / (2.0 * sigma * sigma))
    w = np.outer(g1, g1)
    return w / w.sum()


_WINDOW = _gaussian_window()


def ssim(a, b, peak: float = PEAK_DEFAULT) -> float:
    """Mean structural similarity over the valid (fully-windowed) region.

    11x11 Gaussian window (std 1.5, unit sum), C1 = (0.01 * peak)^2,
    C2 = (0.03 * peak)^2.
    """
    a, b = _check_pair(a, b)
    if min(a.shape) < SSIM_WINDOW:
        raise SizeError(
            f"image edge {min(a.shape)} smaller than SSIM window {SSIM_WINDOW}"
        )
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    w = _WINDOW
    mu_a = convolve2d(a, w, mode="valid")
    mu_b = convolve2d(b, w, mode="valid")
    var_a = convolve2d(a * a, w, mode="valid") - mu_a * mu_a
    var_b = convolve2d(b * b, w, mode="valid") - mu_b * mu_b
    cov = convolve2d(a * b, w, mode="valid") - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def clip_for_scoring(img) -> np.ndarray:
    """The bench-side contract: metrics compare [0, 255]-clipped copies."""
    return np.clip(as_image(img), 0.0, 255.0)
