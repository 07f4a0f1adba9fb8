"""Benchmark orchestration: gather datasets, resize, corrupt once per cell,
fan out to the denoisers, score, and emit tables / plot series / montages."""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__ as _version
from .bm3d import Bm3dParams, denoise_bm3d
from .errors import SizeError
from .image import ManifestEntry, load_image, load_manifest, quantize, resize_to, save_image
from .ksvd import KsvdParams, denoise_ksvd
from .metrics import clip_for_scoring, psnr, ssim
from .nlm import NlmParams, denoise_nlm
from .noise import NoiseSpec, awgn

ALGORITHMS = ("nlmeans", "ksvd", "bm3d")
CELL_ORDER = ("noisy", "nlmeans", "ksvd", "bm3d")
ALGORITHM_LABELS = {
    "clean": "Clean",
    "noisy": "Noisy",
    "nlmeans": "NL-means",
    "ksvd": "K-SVD",
    "bm3d": "BM3D",
}
DEFAULT_SIGMAS = (5.0, 20.0, 35.0, 50.0, 65.0, 80.0, 95.0, 100.0)
WORKERS_ENV = "DENOISEBENCH_WORKERS"

CSV_HEADER = "dataset,image,size,sigma,algorithm,psnr_db,ssim,wall_ms"


@dataclass
class BenchConfig:
    manifest_path: Path
    sizes: tuple[int, ...] = (64, 128, 256)
    sigmas: tuple[float, ...] = DEFAULT_SIGMAS
    algorithms: tuple[str, ...] = ALGORITHMS
    seed: int = 0
    output_dir: Path = Path("bench_out")
    nlm: dict = field(default_factory=dict)
    ksvd: dict = field(default_factory=dict)
    bm3d: dict = field(default_factory=dict)
    datasets: tuple[str, ...] = ()  # empty = all manifest groups
    montage_sigmas: tuple[float, ...] = ()
    record_timing: bool = True

    def __post_init__(self):
        self.manifest_path = Path(self.manifest_path)
        self.output_dir = Path(self.output_dir)
        self.sizes = tuple(int(s) for s in self.sizes)
        self.sigmas = tuple(float(s) for s in self.sigmas)
        self.algorithms = tuple(self.algorithms)
        if not self.sizes or not self.sigmas or not self.algorithms:
            raise ValueError("sizes, sigmas, and algorithms must be non-empty")
        if any(b <= a for a, b in zip(self.sigmas, self.sigmas[1:])):
            raise ValueError("sigmas must be strictly increasing")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")

    @classmethod
    def from_json(cls, path) -> "BenchConfig":
        path = Path(path)
        raw = json.loads(path.read_text())
        kwargs = {"manifest_path": raw.pop("manifest")}
        if not Path(kwargs["manifest_path"]).is_absolute():
            kwargs["manifest_path"] = path.parent / kwargs["manifest_path"]
        if "output_dir" in raw:
            out = Path(raw.pop("output_dir"))
            kwargs["output_dir"] = out if out.is_absolute() else path.parent / out
        for key in ("sizes", "sigmas", "algorithms", "seed", "nlm", "ksvd", "bm3d",
                    "datasets", "montage_sigmas", "record_timing"):
            if key in raw:
                kwargs[key] = raw.pop(key)
        if raw:
            raise ValueError(f"unknown config keys {sorted(raw)}")
        return cls(**kwargs)

    def canonical_json(self) -> str:
        as_dict = {
            "manifest": str(self.manifest_path),
            "sizes": list(self.sizes),
            "sigmas": list(self.sigmas),
            "algorithms": list(self.algorithms),
            "seed": self.seed,
            "nlm": self.nlm,
            "ksvd": self.ksvd,
            "bm3d": self.bm3d,
            "datasets": list(self.datasets),
        }
        return json.dumps(as_dict, sort_keys=True)


@dataclass
class BenchCell:
    dataset: str
    image: str
    size: int
    sigma: float
    algorithm: str
    psnr: float
    ssim: float
    wall_ms: float


@dataclass
class BenchReport:
    cells: list[BenchCell]
    provenance: dict
    errors: list[dict] = field(default_factory=list)
    images: dict = field(default_factory=dict, repr=False)


def cell_seed(config_seed: int, image_name: str, size: int, sigma: float) -> int:
    """Stable per-cell RNG seed; reordering the run matrix cannot change it."""
    tag = f"{config_seed}|{image_name}|{size}|{sigma:g}".encode()
    return int.from_bytes(hashlib.sha256(tag).digest()[:8], "little")


def _worker_count() -> int:
    cap = os.environ.get(WORKERS_ENV, "").strip()
    if cap:
        return max(1, int(cap))
    return min(4, os.cpu_count() or 1)


def _denoise(algorithm: str, noisy: np.ndarray, sigma: float, config: BenchConfig):
    if algorithm == "nlmeans":
        return denoise_nlm(noisy, NlmParams(sigma=sigma, **config.nlm))
    if algorithm == "ksvd":
        return denoise_ksvd(noisy, KsvdParams(sigma=sigma, **config.ksvd))
    if algorithm == "bm3d":
        return denoise_bm3d(noisy, Bm3dParams(sigma=sigma, **config.bm3d))
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_benchmark(config: BenchConfig, keep_images: bool = False) -> BenchReport:
    """Execute the full (image x size x sigma x algorithm) matrix.

    Every (image, size, sigma) triple gets exactly one noisy realization,
    shared by all algorithms; metrics compare [0, 255]-clipped copies.
    With ``keep_images`` the report carries the per-cell output images
    (used for montages).
    """
    entries = load_manifest(config.manifest_path)
    if config.datasets:
        entries = [e for e in entries if e.dataset in config.datasets]
    cells: list[BenchCell] = []
    errors: list[dict] = []
    images: dict[tuple, np.ndarray] = {}
    jobs = []
    keep_sigmas = set(config.montage_sigmas) or set(config.sigmas)

    def keep_for(sigma: float) -> bool:
        return keep_images and sigma in keep_sigmas

    for entry in entries:
        try:
            source = load_image(entry.path)
        except (OSError, ValueError) as exc:
            errors.append({"image": entry.name, "error": str(exc)})
            continue
        for size in config.sizes:
            try:
                clean = resize_to(source, size)
            except SizeError as exc:
                errors.append({"image": entry.name, "size": size, "error": str(exc)})
                continue
            for sigma in config.sigmas:
                seed = cell_seed(config.seed, entry.name, size, sigma)
                t0 = time.perf_counter()
                noisy = awgn(clean, NoiseSpec("awgn", sigma, seed))
                noisy_ms = (time.perf_counter() - t0) * 1000.0
                key = (entry.dataset, entry.name, size, sigma)
                clean_clip = clip_for_scoring(clean)
                noisy_clip = clip_for_scoring(noisy)
                cells.append(BenchCell(
                    entry.dataset, entry.name, size, sigma, "noisy",
                    psnr(clean_clip, noisy_clip), ssim(clean_clip, noisy_clip),
                    noisy_ms if config.record_timing else 0.0,
                ))
                if keep_for(sigma):
                    images[key + ("clean",)] = clean
                    images[key + ("noisy",)] = noisy
                for algorithm in config.algorithms:
                    jobs.append((key, clean_clip, noisy, sigma, algorithm))

    def run_job(job):
        key, clean_clip, noisy, sigma, algorithm = job
        t0 = time.perf_counter()
        out = _denoise(algorithm, noisy, sigma, config)
        wall_ms = (time.perf_counter() - t0) * 1000.0
        out_clip = clip_for_scoring(out)
        return key, algorithm, psnr(clean_clip, out_clip), ssim(clean_clip, out_clip), wall_ms, out

    n_workers = _worker_count()
    if n_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run_job, jobs))
    else:
        results = [run_job(j) for j in jobs]

    for key, algorithm, p, s, wall_ms, out in results:
        dataset, name, size, sigma = key
        cells.append(BenchCell(
            dataset, name, size, sigma, algorithm, p, s,
            wall_ms if config.record_timing else 0.0,
        ))
        if keep_for(sigma):
            images[key + (algorithm,)] = out

    provenance = {
        "config_sha256": hashlib.sha256(config.canonical_json().encode()).hexdigest(),
        "seed": config.seed,
        "tool_version": _version,
    }
    return BenchReport(_sorted_cells(cells), provenance, errors, images)


def _sorted_cells(cells: list[BenchCell]) -> list[BenchCell]:
    rank = {a: i for i, a in enumerate(CELL_ORDER)}
    return sorted(
        cells,
        key=lambda c: (c.dataset, c.image, c.size, c.sigma, rank[c.algorithm]),
    )


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def emit_csv(report: BenchReport, path) -> None:
    lines = [CSV_HEADER]
    for c in _sorted_cells(report.cells):
        lines.append(
            f"{c.dataset},{c.image},{c.size},{c.sigma:g},{c.algorithm},"
            f"{_fmt(c.psnr)},{_fmt(c.ssim)},{c.wall_ms:.0f}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def emit_markdown_table(report: BenchReport, dataset: str, size: int) -> str:
    """One table per (dataset, size): sigma-major rows, four algorithm
    sub-rows, image columns with PSNR/SSIM cells."""
    cells = [c for c in report.cells if c.dataset == dataset and c.size == size]
    if not cells:
        return f"*(no results for dataset {dataset} at {size}x{size})*\n"
    names = sorted({c.image for c in cells})
    sigmas = sorted({c.sigma for c in cells})
    algorithms = [a for a in CELL_ORDER if any(c.algorithm == a for c in cells)]
    index = {(c.image, c.sigma, c.algorithm): c for c in cells}
    lines = [
        f"### {dataset} dataset, {size}x{size}",
        "",
        "| Noise | Algorithm | " + " | ".join(names) + " |",
        "|" + "---|" * (len(names) + 2),
    ]
    for sigma in sigmas:
        for i, algorithm in enumerate(algorithms):
            row = [f"{sigma:g}" if i == 0 else "", ALGORITHM_LABELS[algorithm]]
            for name in names:
                cell = index.get((name, sigma, algorithm))
                row.append(f"{_fmt(cell.psnr)}/{_fmt(cell.ssim)}" if cell else "-")
            lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def emit_plot_series(report: BenchReport, dataset: str, size: int, image: str,
                     out_dir) -> list[Path]:
    """Two TSV series files (PSNR vs sigma, SSIM vs sigma) for one image."""
    cells = [
        c for c in report.cells
        if c.dataset == dataset and c.size == size and c.image == image
    ]
    if not cells:
        raise ValueError(f"no results for {dataset}/{image} at {size}x{size}")
    sigmas = sorted({c.sigma for c in cells})
    algorithms = [a for a in CELL_ORDER if any(c.algorithm == a for c in cells)]
    index = {(c.sigma, c.algorithm): c for c in cells}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for metric in ("psnr", "ssim"):
        lines = ["sigma\t" + "\t".join(algorithms)]
        for sigma in sigmas:
            vals = [
                _fmt(getattr(index[(sigma, a)], metric)) if (sigma, a) in index else "nan"
                for a in algorithms
            ]
            lines.append(f"{sigma:g}\t" + "\t".join(vals))
        path = out_dir / f"{image}_{size}_{metric}.tsv"
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths


MONTAGE_GAP = 4


def emit_montage(clean, noisy, outputs: dict[str, np.ndarray], path) -> None:
    """Side-by-side grid (clean | noisy | one panel per algorithm) with
    4-pixel white separators, plus a JSON sidecar of labels and scores."""
    panels = [("clean", np.asarray(clean, dtype=np.float64)),
              ("noisy", np.asarray(noisy, dtype=np.float64))]
    for algorithm in CELL_ORDER[1:]:
        if algorithm in outputs:
            panels.append((algorithm, np.asarray(outputs[algorithm], dtype=np.float64)))
    shape = panels[0][1].shape
    for label, img in panels:
        if img.shape != shape:
            raise ValueError(f"panel {label} has shape {img.shape}, expected {shape}")
    h, w = shape
    total_w = len(panels) * w + MONTAGE_GAP * (len(panels) - 1)
    canvas = np.full((h, total_w), 255.0)
    captions = []
    clean_clip = clip_for_scoring(panels[0][1])
    for i, (label, img) in enumerate(panels):
        x0 = i * (w + MONTAGE_GAP)
        canvas[:, x0:x0 + w] = quantize(img)
        img_clip = clip_for_scoring(img)
        captions.append({
            "label": ALGORITHM_LABELS.get(label, label),
            "psnr": psnr(clean_clip, img_clip),
            "ssim": ssim(clean_clip, img_clip),
        })
    path = Path(path)
    save_image(canvas, path)
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(captions, indent=2, default=float) + "\n")


def emit_all(report: BenchReport, config: BenchConfig) -> Path:
    """Write results.csv, per-(dataset, size) markdown tables, and plot
    series under the config's output directory."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(report, out / "results.csv")
    slices = sorted({(c.dataset, c.size) for c in report.cells})
    tables = [emit_markdown_table(report, d, s) for d, s in slices]
    (out / "tables.md").write_text("\n".join(tables))
    for dataset, size in slices:
        names = sorted({c.image for c in report.cells
                        if c.dataset == dataset and c.size == size})
        for name in names:
            emit_plot_series(report, dataset, size, name, out / "series")
    if report.images:
        montage_dir = out / "montages"
        montage_dir.mkdir(exist_ok=True)
        keys = sorted({k[:4] for k in report.images})
        for dataset, name, size, sigma in keys:
            base = (dataset, name, size, sigma)
            outputs = {
                a: report.images[base + (a,)]
                for a in CELL_ORDER[1:]
                if base + (a,) in report.images
            }
            emit_montage(
                report.images[base + ("clean",)],
                report.images[base + ("noisy",)],
                outputs,
                montage_dir / f"{name}_{size}_sigma{sigma:g}.png",
            )
    if report.errors:
        (out / "errors.json").write_text(json.dumps(report.errors, indent=2) + "\n")
    return out
