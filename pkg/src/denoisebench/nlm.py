"""Non-local means: each pixel becomes a similarity-weighted average of
pixels whose surrounding patches look alike."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import SizeError
from .image import as_image

H_FACTOR_DEFAULT = 0.55


@dataclass
class NlmParams:
    """patch_radius 3 -> 7x7 patches; search_radius 10 -> 21x21 window.

    ``h`` defaults to 0.55 * sigma when left unset.
    """

    sigma: float
    patch_radius: int = 3
    search_radius: int = 10
    h: float | None = None

    def __post_init__(self):
        if self.h is None:
            self.h = H_FACTOR_DEFAULT * self.sigma
        if self.patch_radius < 1:
            raise ValueError("patch_radius must be >= 1")
        if self.search_radius < self.patch_radius:
            raise ValueError("search_radius must be >= patch_radius")
        if not self.h > 0:
            raise ValueError("h must be > 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def patch_distance(img, p, q, radius: int) -> float:
    """Mean squared difference between the two (2r+1)^2 patches at p and q.

    Patches reaching past the border read symmetrically reflected pixels.
    """
    img = as_image(img)
    padded = np.pad(img, radius, mode="symmetric")
    pr, pc = int(p[0]) + radius, int(p[1]) + radius
    qr, qc = int(q[0]) + radius, int(q[1]) + radius
    a = padded[pr - radius : pr + radius + 1, pc - radius : pc + radius + 1]
    b = padded[qr - radius : qr + radius + 1, qc - radius : qc + radius + 1]
    return float(np.mean((a - b) ** 2))


def denoise_nlm(noisy, params: NlmParams) -> np.ndarray:
    """Window-restricted NL-means with sigma-compensated patch distances.

    Weight of candidate q for pixel p is
    ``exp(-max(d2(p, q) - 2 sigma^2, 0) / h^2)`` where d2 is the mean
    squared patch difference; the self weight is the maximum over the other
    candidates rather than the raw value 1.
    """
    noisy = as_image(noisy)
    if min(noisy.shape) < 2 * params.patch_radius + 1:
        raise SizeError(
            f"image edge {min(noisy.shape)} smaller than patch "
            f"{2 * params.patch_radius + 1}"
        )
    margin = params.search_radius + params.patch_radius
    padded = np.ascontiguousarray(np.pad(noisy, margin, mode="symmetric"))
    kern = _backend.active_backend()
    return kern.nlm_denoise(
        padded,
        noisy.shape[0],
        noisy.shape[1],
        params.patch_radius,
        params.search_radius,
        params.h * params.h,
        2.0 * params.sigma * params.sigma,
    )
