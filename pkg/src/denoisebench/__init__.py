"""Grayscale image-denoising benchmark toolkit.

Images are 2-D float64 arrays with intensities nominally in [0, 255];
quantization happens only when writing files. Three denoisers (NL-means,
K-SVD, BM3D) share the image/patch plumbing and are scored with PSNR/SSIM
under seeded AWGN corruption by the bench module.
"""

from ._backend import available_backends, backend_name
from .bm3d import Bm3dParams, block_match, denoise_bm3d, hard_threshold_stage, wiener_stage
from .image import (
    PatchSet,
    aggregate_patches,
    extract_patches,
    load_image,
    load_manifest,
    resize_to,
    save_image,
)
from .ksvd import Dictionary, KsvdParams, SparseCode, build_overcomplete_dct, denoise_ksvd, ksvd_train, omp
from .metrics import mse, psnr, ssim
from .nlm import NlmParams, denoise_nlm, patch_distance
from .noise import NoiseSpec, apply_noise, awgn, salt_pepper, speckle

__version__ = "0.1.0"

__all__ = [
    "Bm3dParams",
    "Dictionary",
    "KsvdParams",
    "NlmParams",
    "NoiseSpec",
    "PatchSet",
    "SparseCode",
    "aggregate_patches",
    "apply_noise",
    "available_backends",
    "awgn",
    "backend_name",
    "block_match",
    "build_overcomplete_dct",
    "denoise_bm3d",
    "denoise_ksvd",
    "denoise_nlm",
    "extract_patches",
    "hard_threshold_stage",
    "ksvd_train",
    "load_image",
    "load_manifest",
    "mse",
    "omp",
    "patch_distance",
    "psnr",
    "resize_to",
    "salt_pepper",
    "save_image",
    "speckle",
    "ssim",
    "wiener_stage",
]
