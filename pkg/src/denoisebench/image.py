"""Grayscale image values, file I/O, resizing, and patch plumbing.

An image is a 2-D float64 array of intensities, nominally in [0, 255].
Values stay real-valued through the whole pipeline; quantization to bytes
happens only in :func:`save_image`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import CoverageError, FormatError, SizeError

# Rec. 601 luma weights used for RGB -> gray conversion.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

RESIZE_TARGETS = (64, 128, 256)


def as_image(data) -> np.ndarray:
    """Validate and return ``data`` as a 2-D float64 image array."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2:
        raise SizeError(f"image must be 2-D, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise SizeError(f"image must be at least 1x1, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    return img


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Rec. 601 luma conversion of an ``(H, W, 3)`` array to ``(H, W)``."""
    r, g, b = LUMA_WEIGHTS
    rgb = np.asarray(rgb, dtype=np.float64)
    return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]


# ---------------------------------------------------------------------------
# File I/O: binary PGM (P5, maxval 255) and 8-bit PNG.
# ---------------------------------------------------------------------------

def _parse_pgm(raw: bytes) -> np.ndarray:
    if not raw.startswith(b"P5"):
        raise FormatError("PGM magic is not P5")
    # Header = magic, width, height, maxval as ASCII tokens; '#' starts a
    # comment running to end of line.
    pos = 2
    fields = []
    while len(fields) < 3:
        m = re.compile(rb"[ \t\r\n]+").match(raw, pos)
        if m:
            pos = m.end()
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            eol = raw.find(b"\n", pos)
            if eol < 0:
                raise FormatError("unterminated PGM comment")
            pos = eol + 1
            continue
        m = re.compile(rb"\d+").match(raw, pos)
        if not m:
            raise FormatError("malformed PGM header")
        fields.append(int(m.group()))
        pos = m.end()
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"unsupported PGM maxval {maxval} (only 255)")
    pos += 1  # single whitespace byte after maxval
    data = raw[pos:pos + width * height]
    if len(data) != width * height:
        raise FormatError("PGM pixel data truncated")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width).astype(np.float64)


def load_image(path) -> np.ndarray:
    """Load a binary PGM (P5) or 8-bit PNG file as a grayscale image.

    RGB PNGs are converted with Rec. 601 luma weights. Files are sniffed by
    magic bytes, not extension.
    """
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(b"P5"):
        return _parse_pgm(raw)
    if raw.startswith(b"\x89PNG"):
        with PILImage.open(path) as im:
            mode = im.mode
            if mode == "L":
                return np.asarray(im, dtype=np.float64)
            if mode == "RGB":
                return rgb_to_gray(np.asarray(im, dtype=np.float64))
            if mode in ("I", "I;16", "I;16B"):
                raise FormatError(f"unsupported PNG bit depth (mode {mode}, need 8-bit)")
            raise FormatError(f"unsupported PNG mode {mode} (need L or RGB)")
    raise FormatError(f"{path.name}: not a P5 PGM or PNG file")


def quantize(img: np.ndarray) -> np.ndarray:
    """Round half-away-from-zero and clip to [0, 255], returning uint8."""
    img = np.asarray(img, dtype=np.float64)
    rounded = np.sign(img) * np.floor(np.abs(img) + 0.5)
    return np.clip(rounded, 0.0, 255.0).astype(np.uint8)


def save_image(img, path) -> None:
    """Write an image as binary PGM or 8-bit grayscale PNG, by extension.

    ``.pgm`` selects PGM; anything else is written as PNG.
    """
    img = as_image(img)
    bytes_img = quantize(img)
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
        path.write_bytes(header + bytes_img.tobytes())
    else:
        PILImage.fromarray(bytes_img, mode="L").save(path, format="PNG")


# ---------------------------------------------------------------------------
# Resizing: center-crop to square, then exact area-average downsampling.
# ---------------------------------------------------------------------------

def _area_weights(src: int, dst: int) -> np.ndarray:
    """(dst, src) matrix averaging ``src`` samples into ``dst`` cells."""
    scale = src / dst
    w = np.zeros((dst, src))
    for i in range(dst):
        lo = i * scale
        hi = (i + 1) * scale
        j0 = int(np.floor(lo))
        j1 = int(np.ceil(hi))
        for j in range(j0, min(j1, src)):
            overlap = min(hi, j + 1) - max(lo, j)
            if overlap > 0:
                w[i, j] = overlap / scale
    return w


def center_crop_square(img: np.ndarray) -> np.ndarray:
    img = as_image(img)
    h, w = img.shape
    edge = min(h, w)
    r0 = (h - edge) // 2
    c0 = (w - edge) // 2
    return img[r0:r0 + edge, c0:c0 + edge]


def resize_to(img, target: int) -> np.ndarray:
    """Center-crop to square and box-filter down to ``target`` x ``target``."""
    img = center_crop_square(img)
    edge = img.shape[0]
    if edge < target:
        raise SizeError(f"source edge {edge} is smaller than target {target}")
    if edge == target:
        return img.copy()
    w = _area_weights(edge, target)
    return w @ img @ w.T


# ---------------------------------------------------------------------------
# Patch extraction / aggregation shared by the patch-based denoisers.
# ---------------------------------------------------------------------------

@dataclass
class PatchSet:
    """Flattened square patches plus the grid they came from.

    ``origins`` is an (N, 2) array of (row, col) top-left corners in
    row-major scan order; ``patches`` is (N, patch_size**2).
    """

    patch_size: int
    stride: int
    origins: np.ndarray
    patches: np.ndarray

    def __len__(self) -> int:
        return len(self.origins)


def grid_coords(extent: int, window: int, stride: int) -> np.ndarray:
    """Window origins at stride multiples, plus a snapped final origin.

    Guarantees the last ``window`` pixels of the extent are covered.
    """
    last = extent - window
    coords = list(range(0, last + 1, stride))
    if coords[-1] != last:
        coords.append(last)
    return np.asarray(coords, dtype=np.int64)


def extract_patches(img, patch_size: int, stride: int) -> PatchSet:
    img = as_image(img)
    h, w = img.shape
    if patch_size > min(h, w):
        raise SizeError(f"patch size {patch_size} exceeds image extent {min(h, w)}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    rows = grid_coords(h, patch_size, stride)
    cols = grid_coords(w, patch_size, stride)
    origins = np.stack(
        [np.repeat(rows, len(cols)), np.tile(cols, len(rows))], axis=1
    )
    windows = np.lib.stride_tricks.sliding_window_view(img, (patch_size, patch_size))
    patches = windows[origins[:, 0], origins[:, 1]].reshape(len(origins), -1)
    return PatchSet(patch_size, stride, origins, np.ascontiguousarray(patches))


def accumulate_patches(
    patches: PatchSet, values: np.ndarray, weights: np.ndarray, shape
) -> tuple[np.ndarray, np.ndarray]:
    """Weighted scatter-add of per-patch ``values`` onto a canvas.

    Returns the (numerator, denominator) pair so callers can blend before
    dividing.
    """
    n = patches.patch_size
    num = np.zeros(shape)
    den = np.zeros(shape)
    values = np.asarray(values, dtype=np.float64).reshape(len(patches), n, n)
    for (r, c), val, wt in zip(patches.origins, values, weights):
        num[r:r + n, c:c + n] += wt * val
        den[r:r + n, c:c + n] += wt
    return num, den


def aggregate_patches(patches: PatchSet, weights, shape) -> np.ndarray:
    """Recombine overlapping patches by weighted per-pixel averaging."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim == 0:
        weights = np.full(len(patches), float(weights))
    if len(weights) != len(patches):
        raise ValueError("one weight per patch required")
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    num, den = accumulate_patches(patches, patches.patches, weights, shape)
    if np.any(den == 0):
        uncovered = int(np.count_nonzero(den == 0))
        raise CoverageError(f"{uncovered} canvas pixels not covered by any patch")
    return num / den


# ---------------------------------------------------------------------------
# Dataset manifest: named images grouped into the four benchmark datasets.
# ---------------------------------------------------------------------------

DATASET_GROUPS = ("standard", "natural", "texture", "synthetic")


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    path: Path
    dataset: str


def load_manifest(path) -> list[ManifestEntry]:
    """Read a JSON manifest: a list of {name, path, dataset} records.

    Relative image paths are resolved against the manifest's directory.
    """
    path = Path(path)
    entries = json.loads(path.read_text())
    if not isinstance(entries, list):
        raise FormatError("manifest must be a JSON list")
    out = []
    for rec in entries:
        missing = {"name", "path", "dataset"} - set(rec)
        if missing:
            raise FormatError(f"manifest entry missing {sorted(missing)}: {rec}")
        if rec["dataset"] not in DATASET_GROUPS:
            raise FormatError(f"unknown dataset group {rec['dataset']!r}")
        img_path = Path(rec["path"])
        if not img_path.is_absolute():
            img_path = path.parent / img_path
        out.append(ManifestEntry(rec["name"], img_path, rec["dataset"]))
    return out
