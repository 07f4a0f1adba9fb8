"""BM3D denoising: block matching into 3-D groups, collaborative transform
filtering (hard-threshold stage, then Wiener stage), weighted aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _backend
from .errors import SizeError
from .image import as_image
from .transforms import dct_matrix, haar_forward, haar_inverse


@dataclass
class Bm3dParams:
    sigma: float
    block_size: int = 8
    step: int = 3
    search_radius: int = 19
    max_group: int = 16
    tau_hard: float = 3000.0
    tau_wiener: float = 400.0
    lambda3d: float = 2.7

    def __post_init__(self):
        if min(self.sigma, self.block_size, self.step, self.search_radius,
               self.max_group, self.tau_hard, self.tau_wiener, self.lambda3d) <= 0:
            raise ValueError("all BM3D parameters must be positive")
        if self.step > self.block_size:
            raise ValueError("step must not exceed block_size")


@dataclass
class BlockGroup:
    """Stack of matched blocks: reference first, then ascending distance."""

    block_size: int
    coords: np.ndarray  # (M, 2) int
    stack: np.ndarray  # (M, block_size**2)
    distances: np.ndarray  # (M,)


def block_match(img, ref_coord, params: Bm3dParams) -> BlockGroup:
    """Match blocks against the reference within the search window.

    Candidates sit on the stride-1 grid inside the window; distance is the
    mean squared block difference. Matches with distance <= tau are sorted
    ascending (ties by row-major coordinate, reference first) and truncated
    to the largest power of two <= min(count, max_group).
    """
    img = np.ascontiguousarray(as_image(img))
    bs = params.block_size
    r, c = int(ref_coord[0]), int(ref_coord[1])
    if not (0 <= r <= img.shape[0] - bs and 0 <= c <= img.shape[1] - bs):
        raise SizeError(f"reference block at ({r}, {c}) not inside image")
    kern = _backend.active_backend()
    coords, dists = kern.bm3d_block_match(
        img, r, c, bs, params.search_radius, params.tau_hard, params.max_group
    )
    windows = sliding_window_view(img, (bs, bs))
    stack = windows[coords[:, 0], coords[:, 1]].reshape(len(coords), -1)
    return BlockGroup(bs, coords, np.ascontiguousarray(stack), dists)


def transform_3d(group: BlockGroup) -> np.ndarray:
    """Orthonormal 2-D DCT per block, then 1-D Haar along the stack."""
    bs = group.block_size
    stack = group.stack.reshape(-1, bs, bs)
    mat = dct_matrix(bs)
    coeffs = mat[None] @ stack @ mat.T[None]
    return haar_forward(coeffs, axis=0)


def inverse_transform_3d(coeffs: np.ndarray, block_size: int) -> np.ndarray:
    """Exact inverse of :func:`transform_3d`; returns (M, block_size**2)."""
    mat = dct_matrix(block_size)
    stack = haar_inverse(coeffs, axis=0)
    blocks = mat.T[None] @ stack @ mat[None]
    return blocks.reshape(len(blocks), -1)


def _check_min_size(img, params):
    if min(img.shape) < params.block_size:
        raise SizeError(
            f"image edge {min(img.shape)} smaller than block {params.block_size}"
        )


def hard_threshold_stage(noisy, params: Bm3dParams) -> np.ndarray:
    """Stage 1: hard-threshold collaborative filtering (the basic estimate).

    Coefficients with magnitude below lambda3d * sigma are zeroed (the group
    DC included); each filtered group is aggregated with weight
    1 / (sigma^2 * n_retained), or 1 when everything was zeroed.
    """
    noisy = np.ascontiguousarray(as_image(noisy))
    _check_min_size(noisy, params)
    kern = _backend.active_backend()
    return kern.bm3d_hard_stage(
        noisy, params.sigma, params.block_size, params.step, params.search_radius,
        params.tau_hard, params.max_group, params.lambda3d,
        dct_matrix(params.block_size),
    )


def wiener_stage(noisy, basic, params: Bm3dParams) -> np.ndarray:
    """Stage 2: empirical Wiener shrinkage guided by the basic estimate.

    Groups are matched on the basic image; each noisy coefficient is scaled
    by b^2 / (b^2 + sigma^2) computed from the basic coefficients, and
    groups aggregate with weight 1 / (sigma^2 * sum(factors^2)).
    """
    noisy = np.ascontiguousarray(as_image(noisy))
    basic = np.ascontiguousarray(as_image(basic))
    if noisy.shape != basic.shape:
        raise ValueError(f"dimension mismatch: {noisy.shape} vs {basic.shape}")
    _check_min_size(noisy, params)
    kern = _backend.active_backend()
    return kern.bm3d_wiener_stage(
        noisy, basic, params.sigma, params.block_size, params.step,
        params.search_radius, params.tau_wiener, params.max_group,
        dct_matrix(params.block_size),
    )


def denoise_bm3d(noisy, params: Bm3dParams) -> np.ndarray:
    """Both stages chained: Wiener filtering of the hard-threshold estimate."""
    basic = hard_threshold_stage(noisy, params)
    return wiener_stage(noisy, basic, params)
