#!/usr/bin/env python3
"""Time the compiled kernels against the NumPy fallback.

Runs each hot kernel (NL-means, BM3D stages, block matching, batch OMP)
on identical inputs under every available backend and prints a table with
speedups and agreement checks.

    python3 benchmarks/backend_bench.py --size 256 --sigma 20 --repeats 3
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from denoisebench import _backend  # noqa: E402
from denoisebench.image import load_image, resize_to  # noqa: E402
from denoisebench.noise import NoiseSpec, awgn  # noqa: E402
from denoisebench.transforms import dct_matrix  # noqa: E402

DATA = Path(__file__).resolve().parent.parent / "data"


def make_inputs(size: int, sigma: float):
    source = DATA / "standard" / "camera.png"
    if source.exists():
        clean = resize_to(load_image(source), size)
    else:
        rng = np.random.default_rng(0)
        clean = np.kron(rng.uniform(0, 255, size=(size // 8, size // 8)),
                        np.ones((8, 8)))
    noisy = np.ascontiguousarray(awgn(clean, NoiseSpec("awgn", sigma, 1)))

    rng = np.random.default_rng(1)
    atoms = rng.normal(size=(64, 256))
    atoms /= np.linalg.norm(atoms, axis=0)
    signals = rng.normal(size=(20000, 64)) * 12.0
    return noisy, atoms, signals


def build_cases(noisy, atoms, signals, sigma):
    h, w = noisy.shape
    mat = dct_matrix(8)
    padded = np.ascontiguousarray(np.pad(noisy, 13, mode="symmetric"))
    gram = atoms.T @ atoms
    eps = 64 * (1.15 * sigma) ** 2
    basic_by_backend = {}

    def bm3d_full(kern):
        basic = kern.bm3d_hard_stage(noisy, sigma, 8, 3, 19, 3000.0, 16, 2.7, mat)
        basic_by_backend[kern.BACKEND_NAME] = basic
        return kern.bm3d_wiener_stage(noisy, basic, sigma, 8, 3, 19, 400.0, 16, mat)

    return [
        ("nlm_denoise", lambda kern: kern.nlm_denoise(
            padded, h, w, 3, 10, (0.55 * sigma) ** 2, 2.0 * sigma * sigma)),
        ("block_match x500", lambda kern: [
            kern.bm3d_block_match(noisy, r, c, 8, 19, 3000.0, 16)
            for r in range(0, min(h - 8, 100), 5)
            for c in range(0, min(w - 8, 125), 5)
        ] and None),
        ("bm3d both stages", bm3d_full),
        ("omp_batch 20k signals", lambda kern: kern.omp_batch(
            atoms, gram, signals, eps, 8)),
    ]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--sigma", type=float, default=20.0)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = _backend.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; run `pip install -e .` first")
    noisy, atoms, signals = make_inputs(args.size, args.sigma)

    results: dict[str, dict[str, float]] = {}
    for name in backends:
        kern = _backend.select(name)
        for label, fn in build_cases(noisy, atoms, signals, args.sigma):
            best = min(
                _timed(fn, kern) for _ in range(args.repeats)
            )
            results.setdefault(label, {})[name] = best
            print(f"  {name:7s} {label:24s} {best * 1e3:9.1f} ms")

    print(f"\nkernel timings, {args.size}x{args.size}, sigma={args.sigma:g} "
          f"(best of {args.repeats})")
    header = f"{'kernel':26s}" + "".join(f"{b:>12s}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10s}"
    print(header)
    for label, times in results.items():
        row = f"{label:26s}" + "".join(
            f"{times[b] * 1e3:10.1f}ms" for b in backends
        )
        if "python" in times and "cython" in times:
            row += f"{times['python'] / times['cython']:9.1f}x"
        print(row)


def _timed(fn, kern) -> float:
    start = time.perf_counter()
    fn(kern)
    return time.perf_counter() - start


if __name__ == "__main__":
    main()
