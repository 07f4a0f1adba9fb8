"""Deterministic, seeded corruption of clean images.

Noise words come from a counter-based keyed stream (splitmix64 finalizer
over ``seed + GOLDEN * counter``), so the value at each pixel depends only
on (seed, pixel index) and never on evaluation order or thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import as_image

FAMILIES = ("awgn", "salt_pepper", "speckle")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = float(2.0 ** -53)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family + level + RNG seed; the corruption contract.

    ``level`` is sigma in intensity units for awgn, the corrupted-pixel
    density in (0, 0.5] for salt_pepper, and the relative variance for
    speckle.
    """

    family: str
    level: float
    seed: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}")
        if self.family == "awgn" and not self.level > 0:
            raise ValueError("awgn sigma must be > 0")
        if self.family == "salt_pepper" and not 0 < self.level <= 0.5:
            raise ValueError("salt_pepper density must be in (0, 0.5]")
        if self.family == "speckle" and not self.level > 0:
            raise ValueError("speckle variance must be > 0")

    _LEVEL_KEYS = {"awgn": "sigma", "salt_pepper": "density", "speckle": "variance"}

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            self._LEVEL_KEYS[self.family]: self.level,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, spec: dict) -> "NoiseSpec":
        family = spec["family"]
        if family not in cls._LEVEL_KEYS:
            raise ValueError(f"unknown noise family {family!r}")
        return cls(family, float(spec[cls._LEVEL_KEYS[family]]), int(spec["seed"]))


def _mix(state: np.ndarray) -> np.ndarray:
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _words(seed: int, start: int, count: int) -> np.ndarray:
    """Stream words [start, start+count) of the keyed counter sequence."""
    key = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    counters = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return _mix(key + _GOLDEN * counters)


def standard_normals(seed: int, count: int) -> np.ndarray:
    """Box-Muller normals, one per counter index."""
    w = _words(seed, 0, 2 * count)
    u1 = (np.float64(w[0::2] >> np.uint64(11)) + 1.0) * _U53  # (0, 1]
    u2 = np.float64(w[1::2] >> np.uint64(11)) * _U53  # [0, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def uniforms(seed: int, count: int) -> np.ndarray:
    """Uniform [0, 1) values, one per counter index."""
    w = _words(seed, 0, count)
    return np.float64(w >> np.uint64(11)) * _U53


def awgn(img, spec: NoiseSpec) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise of std ``spec.level``.

    The output is intentionally not clipped; clipping happens only at
    image export and at the metric boundary.
    """
    img = as_image(img)
    if spec.family != "awgn":
        raise ValueError(f"expected awgn spec, got {spec.family}")
    z = standard_normals(spec.seed, img.size).reshape(img.shape)
    return img + spec.level * z


def salt_pepper(img, spec: NoiseSpec) -> np.ndarray:
    """Replace pixels by 0 or 255, each with probability density/2."""
    img = as_image(img)
    if spec.family != "salt_pepper":
        raise ValueError(f"expected salt_pepper spec, got {spec.family}")
    u = uniforms(spec.seed, img.size).reshape(img.shape)
    out = img.copy()
    out[u < spec.level / 2.0] = 0.0
    out[(u >= spec.level / 2.0) & (u < spec.level)] = 255.0
    return out


def speckle(img, spec: NoiseSpec) -> np.ndarray:
    """Multiplicative noise: out = img * (1 + u), u uniform with variance v."""
    img = as_image(img)
    if spec.family != "speckle":
        raise ValueError(f"expected speckle spec, got {spec.family}")
    half_width = np.sqrt(3.0 * spec.level)
    u = (2.0 * uniforms(spec.seed, img.size).reshape(img.shape) - 1.0) * half_width
    return img * (1.0 + u)


_APPLY = {"awgn": awgn, "salt_pepper": salt_pepper, "speckle": speckle}


def apply_noise(img, spec: NoiseSpec) -> np.ndarray:
    return _APPLY[spec.family](img, spec)
