"""K-SVD denoising: learn an overcomplete dictionary on noisy patches,
sparse-code every patch with OMP, aggregate, and blend with the input."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import _backend
from .errors import SizeError, TrainingError
from .image import accumulate_patches, as_image, extract_patches


@dataclass
class Dictionary:
    """Unit-norm atom matrix of shape (atom_length, n_atoms)."""

    atoms: np.ndarray

    def __post_init__(self):
        self.atoms = np.ascontiguousarray(self.atoms, dtype=np.float64)
        if self.atoms.ndim != 2:
            raise ValueError("atoms must be a 2-D matrix")
        norms = np.linalg.norm(self.atoms, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("dictionary columns must have unit norm (1e-9)")

    @property
    def atom_length(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    def gram(self) -> np.ndarray:
        return self.atoms.T @ self.atoms


@dataclass
class SparseCode:
    """OMP output: selected atom indices, their coefficients, and ||r||."""

    support: np.ndarray
    coefficients: np.ndarray
    residual_norm: float


@dataclass
class KsvdParams:
    sigma: float
    patch_size: int = 8
    n_atoms: int = 256
    train_iterations: int = 10
    gain: float = 1.15
    fidelity: float | None = None  # lambda; defaults to 30 / sigma
    max_train_patches: int = 40000
    stride: int = 1
    max_code_atoms: int | None = None  # defaults to patch_size**2 // 2
    train_seed: int = 0

    def __post_init__(self):
        if self.fidelity is None:
            self.fidelity = 30.0 / self.sigma if self.sigma > 0 else 0.0
        if self.max_code_atoms is None:
            self.max_code_atoms = self.patch_size * self.patch_size // 2
        if min(self.sigma, self.patch_size, self.n_atoms, self.train_iterations,
               self.gain, self.max_train_patches, self.stride) <= 0:
            raise ValueError("all K-SVD parameters must be positive")
        if self.patch_size * self.patch_size > self.n_atoms:
            raise ValueError("dictionary must be overcomplete: n_atoms >= patch_size^2")

    @property
    def epsilon(self) -> float:
        """OMP stopping threshold on the squared residual."""
        n2 = self.patch_size * self.patch_size
        return n2 * (self.gain * self.sigma) ** 2


def build_overcomplete_dct(patch_size: int, n_atoms: int) -> Dictionary:
    """Separable overcomplete-DCT dictionary used as the training start.

    1-D bases c_k[t] = cos(pi * k * t / sqrt(n_atoms)), mean-removed for
    k > 0, normalized; 2-D atoms are their outer products.
    """
    per_side = round(np.sqrt(n_atoms))
    if per_side * per_side != n_atoms:
        raise ValueError(f"n_atoms must be a perfect square, got {n_atoms}")
    if n_atoms < patch_size * patch_size:
        raise ValueError("dictionary must be overcomplete: n_atoms >= patch_size^2")
    t = np.arange(patch_size)
    base = np.empty((patch_size, per_side))
    for k in range(per_side):
        v = np.cos(np.pi * k * t / per_side)
        if k > 0:
            v = v - v.mean()
        base[:, k] = v / np.linalg.norm(v)
    return Dictionary(np.kron(base, base))


def dump_dictionary(dictionary: Dictionary, path) -> None:
    """Write atoms as a flat little-endian float64 matrix (column-major by
    atom) next to a small JSON header describing the layout."""
    path = Path(path)
    data = np.ascontiguousarray(dictionary.atoms.T, dtype="<f8")
    path.write_bytes(data.tobytes())
    header = {
        "atom_length": dictionary.atom_length,
        "n_atoms": dictionary.n_atoms,
        "dtype": "<f8",
        "layout": "atom-major rows",
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(header, indent=2) + "\n"
    )


def load_dictionary(path) -> Dictionary:
    """Inverse of :func:`dump_dictionary`."""
    path = Path(path)
    header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    flat = np.frombuffer(path.read_bytes(), dtype=header["dtype"])
    atoms = flat.reshape(header["n_atoms"], header["atom_length"]).T
    return Dictionary(atoms)


def omp(dictionary: Dictionary, signal, epsilon: float, max_atoms: int) -> SparseCode:
    """Orthogonal matching pursuit for a single signal."""
    signal = np.asarray(signal, dtype=np.float64).reshape(1, -1)
    if signal.shape[1] != dictionary.atom_length:
        raise ValueError(
            f"signal length {signal.shape[1]} != atom length {dictionary.atom_length}"
        )
    if max_atoms < 1:
        raise ValueError("max_atoms must be >= 1")
    kern = _backend.active_backend()
    idx, coef, cnt, res2 = kern.omp_batch(
        dictionary.atoms, dictionary.gram(), signal, float(epsilon), int(max_atoms)
    )
    n = int(cnt[0])
    return SparseCode(
        support=idx[0, :n].astype(int).copy(),
        coefficients=coef[0, :n].copy(),
        residual_norm=float(np.sqrt(res2[0])),
    )


def _code_patches(dictionary: Dictionary, patches: np.ndarray, epsilon: float,
                  max_atoms: int):
    kern = _backend.active_backend()
    return kern.omp_batch(
        dictionary.atoms, dictionary.gram(), patches, float(epsilon), int(max_atoms)
    )


def _codes_to_sparse(idx, coef, cnt, n_atoms: int) -> sp.csr_matrix:
    """Batch-OMP output as a (n_atoms, n_signals) CSR matrix."""
    n_sig = idx.shape[0]
    cols = np.repeat(np.arange(n_sig), cnt)
    mask = np.arange(idx.shape[1])[None, :] < cnt[:, None]
    rows = idx[mask]
    data = coef[mask]
    mat = sp.coo_matrix((data, (rows, cols)), shape=(n_atoms, n_sig))
    return mat.tocsr()


def _leading_pair(mat: np.ndarray, fallback: np.ndarray):
    """Dominant singular pair (unit left vector, coefficient row) of ``mat``.

    Computed from the Gram matrix of the smaller side; exact for the leading
    pair and much cheaper than a full SVD when one side is long.
    """
    n, m = mat.shape
    if m >= n:
        w, vecs = np.linalg.eigh(mat @ mat.T)
        u = vecs[:, -1]
        if w[-1] <= 0:
            return fallback, np.zeros(m)
        return u, mat.T @ u
    w, vecs = np.linalg.eigh(mat.T @ mat)
    if w[-1] <= 0:
        return fallback, np.zeros(m)
    v = vecs[:, -1]
    u = mat @ v
    scale = np.linalg.norm(u)
    if scale < 1e-300:
        return fallback, np.zeros(m)
    return u / scale, scale * v


def _ksvd_sweep(patches_t: np.ndarray, atoms: np.ndarray, codes: sp.csr_matrix,
                residual: np.ndarray, error_hook=None) -> None:
    """One pass of per-atom rank-1 updates, in atom-index order.

    ``patches_t`` is (atom_length, n_patches); ``residual`` holds
    ``patches_t - atoms @ codes`` and is kept current in place. Unused atoms
    are replaced by the worst-reconstructed (normalized) training patches,
    one distinct patch per replacement.
    """
    n_atoms = atoms.shape[1]
    consumed: set[int] = set()
    for k in range(n_atoms):
        lo, hi = codes.indptr[k], codes.indptr[k + 1]
        members = codes.indices[lo:hi]
        if members.size == 0:
            errors = np.einsum("ij,ij->j", residual, residual)
            for j in consumed:
                errors[j] = -1.0
            worst = int(np.argmax(errors))
            consumed.add(worst)
            patch = patches_t[:, worst]
            norm = np.linalg.norm(patch)
            if norm > 1e-12:
                atoms[:, k] = patch / norm
            else:
                atoms[:, k] = 0.0
                atoms[k % atoms.shape[0], k] = 1.0
            if error_hook is not None:
                error_hook(k, float(np.sum(residual * residual)))
            continue
        coeffs = codes.data[lo:hi]
        restricted = residual[:, members] + np.outer(atoms[:, k], coeffs)
        new_atom, new_coeffs = _leading_pair(restricted, atoms[:, k])
        residual[:, members] = restricted - np.outer(new_atom, new_coeffs)
        atoms[:, k] = new_atom
        codes.data[lo:hi] = new_coeffs
        if error_hook is not None:
            error_hook(k, float(np.sum(residual * residual)))


def ksvd_train(patches: np.ndarray, dict0: Dictionary, params: KsvdParams,
               error_hook=None) -> Dictionary:
    """Alternate OMP sparse coding and per-atom SVD updates.

    ``patches`` holds mean-removed training patches, one per row. Runs
    exactly ``params.train_iterations`` iterations.
    """
    patches = np.ascontiguousarray(patches, dtype=np.float64)
    if patches.shape[0] < dict0.n_atoms:
        raise TrainingError(
            f"need at least {dict0.n_atoms} training patches, got {patches.shape[0]}"
        )
    atoms = dict0.atoms.copy()
    patches_t = np.ascontiguousarray(patches.T)
    for _ in range(params.train_iterations):
        current = Dictionary(atoms)
        idx, coef, cnt, _ = _code_patches(
            current, patches, params.epsilon, params.max_code_atoms
        )
        codes = _codes_to_sparse(idx, coef, cnt, current.n_atoms)
        residual = patches_t - np.ascontiguousarray((codes.T @ atoms.T).T)
        _ksvd_sweep(patches_t, atoms, codes, residual, error_hook)
        atoms /= np.linalg.norm(atoms, axis=0)
    return Dictionary(atoms)


def _training_subset(patches: np.ndarray, limit: int, seed: int) -> np.ndarray:
    """Uniform-stride subsample with a seeded phase."""
    n = patches.shape[0]
    if n <= limit:
        return patches
    step = n // limit
    start = seed % step
    idx = np.arange(start, n, step)[:limit]
    return patches[idx]


def denoise_ksvd(noisy, params: KsvdParams, dump_dict_path=None) -> np.ndarray:
    """Full K-SVD denoiser: train on the noisy image's own patches, code
    every stride-1 patch, aggregate, and blend with the noisy input.

    ``dump_dict_path`` optionally writes the trained dictionary for
    inspection (see :func:`dump_dictionary`).
    """
    noisy = as_image(noisy)
    if min(noisy.shape) < params.patch_size:
        raise SizeError(
            f"image edge {min(noisy.shape)} smaller than patch {params.patch_size}"
        )
    pset = extract_patches(noisy, params.patch_size, params.stride)
    means = pset.patches.mean(axis=1, keepdims=True)
    centered = pset.patches - means

    train = _training_subset(centered, params.max_train_patches, params.train_seed)
    dict0 = build_overcomplete_dct(params.patch_size, params.n_atoms)
    learned = ksvd_train(train, dict0, params)
    if dump_dict_path is not None:
        dump_dictionary(learned, dump_dict_path)

    idx, coef, cnt, _ = _code_patches(
        learned, centered, params.epsilon, params.max_code_atoms
    )
    codes = _codes_to_sparse(idx, coef, cnt, learned.n_atoms)
    recon = (codes.T @ learned.atoms.T) + means
    num, den = accumulate_patches(pset, recon, np.ones(len(pset)), noisy.shape)
    lam = params.fidelity
    return (lam * noisy + num) / (lam + den)
