"""NumPy implementations of the hot kernels.

This module is the always-available fallback for the compiled extension in
``_kernels.pyx``. Both expose the same functions with the same semantics;
the compiled versions only reorganize the arithmetic for speed.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import uniform_filter

from .image import grid_coords
from .transforms import haar_forward, haar_inverse

BACKEND_NAME = "python"

_OMP_CHUNK = 4096


# ---------------------------------------------------------------------------
# NL-means
# ---------------------------------------------------------------------------

def nlm_denoise(padded, height, width, patch_radius, search_radius, h_sq, two_sigma_sq):
    """Patch-similarity weighted averaging over a square search window.

    ``padded`` is the noisy image with a symmetric margin of
    ``search_radius + patch_radius`` on every side. The self weight of each
    pixel is the maximum weight among its other candidates.
    """
    pr = patch_radius
    sr = search_radius
    size = 2 * pr + 1
    num = np.zeros((height, width))
    den = np.zeros((height, width))
    wmax = np.zeros((height, width))
    # Core rows/cols extended by the patch margin; shifting this block by a
    # window offset lines up every patch pair for that offset at once.
    a = padded[sr : sr + height + 2 * pr, sr : sr + width + 2 * pr]
    center = padded[sr + pr : sr + pr + height, sr + pr : sr + pr + width]
    for dy in range(-sr, sr + 1):
        for dx in range(-sr, sr + 1):
            if dy == 0 and dx == 0:
                continue
            b = padded[
                sr + dy : sr + dy + height + 2 * pr,
                sr + dx : sr + dx + width + 2 * pr,
            ]
            sq = (a - b) ** 2
            dist = uniform_filter(sq, size=size)[pr : pr + height, pr : pr + width]
            wgt = np.exp(-np.maximum(dist - two_sigma_sq, 0.0) / h_sq)
            shifted = padded[
                sr + pr + dy : sr + pr + dy + height,
                sr + pr + dx : sr + pr + dx + width,
            ]
            num += wgt * shifted
            den += wgt
            np.maximum(wmax, wgt, out=wmax)
    num += wmax * center
    den += wmax
    return num / den


# ---------------------------------------------------------------------------
# BM3D
# ---------------------------------------------------------------------------

def bm3d_block_match(img, ref_r, ref_c, block_size, search_radius, tau, max_group):
    """Single-reference block matching.

    Returns (coords, dists): the reference first with distance 0, then the
    kept candidates sorted by (distance, row, col), truncated to the largest
    power of two <= min(count, max_group). Distances are mean squared
    differences accumulated over block pixels in row-major order.
    """
    h, w = img.shape
    bs = block_size
    r0 = max(0, ref_r - search_radius)
    r1 = min(h - bs, ref_r + search_radius)
    c0 = max(0, ref_c - search_radius)
    c1 = min(w - bs, ref_c + search_radius)
    nr = r1 - r0 + 1
    nc = c1 - c0 + 1
    ref = img[ref_r : ref_r + bs, ref_c : ref_c + bs]
    dist = np.zeros((nr, nc))
    for i in range(bs):
        for j in range(bs):
            win = img[r0 + i : r0 + i + nr, c0 + j : c0 + j + nc]
            t = win - ref[i, j]
            dist += t * t
    dist /= bs * bs
    flat = dist.ravel()
    keep = flat <= tau
    keep[(ref_r - r0) * nc + (ref_c - c0)] = False  # reference handled apart
    rows = np.repeat(np.arange(r0, r1 + 1), nc)[keep]
    cols = np.tile(np.arange(c0, c1 + 1), nr)[keep]
    kept = flat[keep]
    m = 1
    while m * 2 <= min(1 + len(kept), max_group):
        m *= 2
    order = np.lexsort((cols, rows, kept))[: m - 1]
    coords = np.empty((m, 2), dtype=np.int64)
    dists = np.empty(m)
    coords[0] = (ref_r, ref_c)
    dists[0] = 0.0
    coords[1:, 0] = rows[order]
    coords[1:, 1] = cols[order]
    dists[1:] = kept[order]
    return coords, dists


def _dct_stack(blocks, dct_mat):
    return dct_mat[None] @ blocks @ dct_mat.T[None]


def _idct_stack(coeffs, dct_mat):
    return dct_mat.T[None] @ coeffs @ dct_mat[None]


def bm3d_hard_stage(img, sigma, block_size, step, search_radius, tau, max_group,
                    lambda3d, dct_mat):
    """Grouping + 3-D transform hard thresholding + weighted aggregation."""
    h, w = img.shape
    bs = block_size
    thr = lambda3d * sigma
    windows = sliding_window_view(img, (bs, bs))
    num = np.zeros((h, w))
    den = np.zeros((h, w))
    for rr in grid_coords(h, bs, step):
        for cc in grid_coords(w, bs, step):
            coords, _ = bm3d_block_match(img, rr, cc, bs, search_radius, tau, max_group)
            stack = windows[coords[:, 0], coords[:, 1]].astype(np.float64)
            co = haar_forward(_dct_stack(stack, dct_mat))
            co[np.abs(co) < thr] = 0.0
            retained = int(np.count_nonzero(co))
            wgt = 1.0 / (sigma * sigma * retained) if retained > 0 else 1.0
            out = _idct_stack(haar_inverse(co), dct_mat)
            for (r, c), blk in zip(coords, out):
                num[r : r + bs, c : c + bs] += wgt * blk
                den[r : r + bs, c : c + bs] += wgt
    return num / den


def bm3d_wiener_stage(noisy, basic, sigma, block_size, step, search_radius, tau,
                      max_group, dct_mat):
    """Wiener shrinkage of noisy groups using basic-estimate coefficients."""
    h, w = noisy.shape
    bs = block_size
    sig2 = sigma * sigma
    win_noisy = sliding_window_view(noisy, (bs, bs))
    win_basic = sliding_window_view(basic, (bs, bs))
    num = np.zeros((h, w))
    den = np.zeros((h, w))
    for rr in grid_coords(h, bs, step):
        for cc in grid_coords(w, bs, step):
            coords, _ = bm3d_block_match(basic, rr, cc, bs, search_radius, tau, max_group)
            b_co = haar_forward(_dct_stack(win_basic[coords[:, 0], coords[:, 1]].astype(np.float64), dct_mat))
            n_co = haar_forward(_dct_stack(win_noisy[coords[:, 0], coords[:, 1]].astype(np.float64), dct_mat))
            factors = b_co * b_co / (b_co * b_co + sig2)
            fac2 = float(np.sum(factors * factors))
            wgt = 1.0 / (sig2 * fac2) if fac2 > 0 else 1.0
            out = _idct_stack(haar_inverse(factors * n_co), dct_mat)
            for (r, c), blk in zip(coords, out):
                num[r : r + bs, c : c + bs] += wgt * blk
                den[r : r + bs, c : c + bs] += wgt
    return num / den


# ---------------------------------------------------------------------------
# Batch OMP (progressive Cholesky), vectorized across signals.
# ---------------------------------------------------------------------------

def _forward_sub(lower, rhs):
    """Solve L x = b for each (m, m) lower-triangular slice of a batch."""
    m = rhs.shape[1]
    x = np.empty_like(rhs)
    for i in range(m):
        s = rhs[:, i]
        if i:
            s = s - np.einsum("pj,pj->p", lower[:, i, :i], x[:, :i])
        x[:, i] = s / lower[:, i, i]
    return x


def _backward_sub(lower, rhs):
    """Solve L^T x = b for each slice."""
    m = rhs.shape[1]
    x = np.empty_like(rhs)
    for i in range(m - 1, -1, -1):
        s = rhs[:, i]
        if i + 1 < m:
            s = s - np.einsum("pj,pj->p", lower[:, i + 1 :, i], x[:, i + 1 :])
        x[:, i] = s / lower[:, i, i]
    return x


def omp_batch(dictionary, gram, signals, epsilon, max_atoms):
    """Greedy sparse coding of many signals over one dictionary.

    Per signal: repeatedly select the atom with the largest absolute
    correlation to the current residual (ties to the lowest index),
    re-solve least squares on the support via a progressive Cholesky
    factorization, and stop once the squared residual is <= epsilon or
    max_atoms were taken. A numerically dependent selection stops the
    signal early.

    Returns (indices, coefficients, counts, squared residuals); row ``i``
    of indices/coefficients is valid up to ``counts[i]``.
    """
    signals = np.ascontiguousarray(signals, dtype=np.float64)
    n_sig = signals.shape[0]
    n_atoms_total = gram.shape[0]
    max_atoms = min(max_atoms, n_atoms_total)
    width = max(max_atoms, 1)

    alpha0 = signals @ dictionary
    alpha = alpha0.copy()
    y2 = np.einsum("ij,ij->i", signals, signals)
    res2 = y2.copy()
    idx = np.zeros((n_sig, width), dtype=np.int32)
    coef = np.zeros((n_sig, width))
    cnt = np.zeros(n_sig, dtype=np.int32)
    lower = np.zeros((n_sig, width, width))
    taken = np.zeros((n_sig, n_atoms_total), dtype=bool)
    active = res2 > epsilon

    for it in range(max_atoms):
        act = np.flatnonzero(active)
        if act.size == 0:
            break
        scores = np.abs(alpha[act])
        scores[taken[act]] = -1.0
        k_new = np.argmax(scores, axis=1).astype(np.int32)
        if it > 0:
            g = gram[idx[act, :it], k_new[:, None]]
            wvec = _forward_sub(lower[act, :it, :it], g)
            nu = 1.0 - np.einsum("pi,pi->p", wvec, wvec)
            ok = nu > 1e-12
            if not ok.all():
                active[act[~ok]] = False
                act, k_new, wvec, nu = act[ok], k_new[ok], wvec[ok], nu[ok]
                if act.size == 0:
                    continue
            lower[act, it, :it] = wvec
            lower[act, it, it] = np.sqrt(nu)
        else:
            lower[act, 0, 0] = 1.0
        idx[act, it] = k_new
        taken[act, k_new] = True
        cnt[act] = it + 1

        a0s = np.take_along_axis(alpha0[act], idx[act, : it + 1], axis=1)
        z = _forward_sub(lower[act, : it + 1, : it + 1], a0s)
        gam = _backward_sub(lower[act, : it + 1, : it + 1], z)
        coef[act, : it + 1] = gam
        res2[act] = np.maximum(y2[act] - np.einsum("pi,pi->p", gam, a0s), 0.0)
        # Correlations against the new residual, chunked to bound memory.
        for lo in range(0, act.size, _OMP_CHUNK):
            sl = act[lo : lo + _OMP_CHUNK]
            gs = gram[idx[sl, : it + 1]]
            alpha[sl] = alpha0[sl] - np.einsum(
                "pik,pi->pk", gs, coef[sl, : it + 1]
            )
        active[act] = res2[act] > epsilon

    # The incremental ||y||^2 - gamma.alpha estimate above drives the
    # stopping rule; report residuals computed directly from the codes so
    # near-zero values are not drowned in cancellation error.
    mask = np.arange(width)[None, :] < cnt[:, None]
    rows = np.repeat(np.arange(n_sig), cnt)
    codes = sp.coo_matrix(
        (coef[mask], (rows, idx[mask])), shape=(n_sig, n_atoms_total)
    ).tocsr()
    diff = signals - codes @ dictionary.T
    res2 = np.einsum("ij,ij->i", diff, diff)

    return idx, coef, cnt, res2
