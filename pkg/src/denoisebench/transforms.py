"""Orthonormal building blocks: 2-D DCT-II matrices and dyadic Haar."""

from __future__ import annotations

import numpy as np


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix; ``T @ block @ T.T`` transforms a block."""
    k = np.arange(n)[:, None]
    t = np.arange(n)[None, :]
    mat = np.cos(np.pi * k * (2 * t + 1) / (2 * n)) * np.sqrt(2.0 / n)
    mat[0] /= np.sqrt(2.0)
    return mat


def haar_forward(stack: np.ndarray, axis: int = 0) -> np.ndarray:
    """Full orthonormal Haar decomposition along ``axis`` (power-of-two length)."""
    x = np.moveaxis(np.array(stack, dtype=np.float64), axis, 0)
    n = x.shape[0]
    if n & (n - 1):
        raise ValueError(f"Haar length must be a power of two, got {n}")
    s = np.sqrt(0.5)
    m = n
    while m > 1:
        even = x[0:m:2].copy()
        odd = x[1:m:2].copy()
        x[: m // 2] = (even + odd) * s
        x[m // 2 : m] = (even - odd) * s
        m //= 2
    return np.moveaxis(x, 0, axis)


def haar_inverse(coeffs: np.ndarray, axis: int = 0) -> np.ndarray:
    """Exact inverse of :func:`haar_forward`."""
    x = np.moveaxis(np.array(coeffs, dtype=np.float64), axis, 0)
    n = x.shape[0]
    if n & (n - 1):
        raise ValueError(f"Haar length must be a power of two, got {n}")
    s = np.sqrt(0.5)
    m = 2
    while m <= n:
        approx = x[: m // 2].copy()
        detail = x[m // 2 : m].copy()
        x[0:m:2] = (approx + detail) * s
        x[1:m:2] = (approx - detail) * s
        m *= 2
    return np.moveaxis(x, 0, axis)
