#!/usr/bin/env python3
"""Build the bundled benchmark dataset under data/.

Photographic sources come from scikit-image's public-domain data files;
the synthetic group is generated procedurally. Re-running the script is
deterministic. The classic test photographs referenced in the literature
(cameraman, lena, house, ...) are not redistributable here: drop 8-bit
grayscale PNGs with those names into data/reference/ and the acceptance suite
will pick them up.
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from denoisebench.image import center_crop_square, load_image, save_image  # noqa: E402


try:
    import skimage.data as _skdata
    SKDATA = Path(_skdata.__file__).parent
except ImportError:
    sys.exit("scikit-image is required to build the photographic sets")

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"

# (output name, skimage file, dataset group)
PHOTOS = [
    ("camera", "camera.png", "standard"),
    ("astronaut", "astronaut.png", "standard"),
    ("cell", "cell.png", "standard"),
    ("chelsea", "chelsea.png", "standard"),
    ("coffee", "coffee.png", "standard"),
    ("coins", "coins.png", "standard"),
    ("moon", "moon.png", "standard"),
    ("motorcycle", "motorcycle_left.png", "standard"),
    ("rocket", "rocket.png", "standard"),
    ("clock", "clock_motion.png", "natural"),
    ("hubble", "hubble_deep_field.png", "natural"),
    ("ihc", "ihc.png", "natural"),
    ("retina", "retina.png", "natural"),
    ("brick", "brick.png", "texture"),
    ("grass", "grass.png", "texture"),
    ("gravel", "gravel.png", "texture"),
]

# JPEG sources are converted through PIL once at build time.
JPEG_SOURCES = {"hubble_deep_field.png": "hubble_deep_field.jpg",
                "retina.png": "retina.jpg", "rocket.png": "rocket.jpg"}


def _load_source(filename: str) -> np.ndarray:
    if filename in JPEG_SOURCES:
        from PIL import Image as PILImage

        from denoisebench.image import rgb_to_gray

        with PILImage.open(SKDATA / JPEG_SOURCES[filename]) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
        return rgb_to_gray(arr)
    return load_image(SKDATA / filename)


def synthetic_images(edge: int = 512) -> dict[str, np.ndarray]:
    """Deterministic man-made test patterns."""
    y, x = np.mgrid[0:edge, 0:edge]
    cx = cy = (edge - 1) / 2.0
    r2 = (x - cx) ** 2 + (y - cy) ** 2

    ramp = 255.0 * x / (edge - 1)

    checker = 255.0 * (((x // 32) + (y // 32)) % 2)

    zone = 127.5 + 127.5 * np.cos(r2 * np.pi / (edge * 2.2))

    shapes = np.full((edge, edge), 40.0)
    shapes[r2 < (edge * 0.28) ** 2] = 220.0
    shapes[(np.abs(x - cx) < edge * 0.08) & (np.abs(y - cy) < edge * 0.42)] = 130.0
    band = (x + y) % 128 < 20
    shapes[band] = np.maximum(shapes[band] - 25.0, 0.0)

    return {"ramp": ramp, "checker": checker, "zoneplate": zone, "shapes": shapes}


def main() -> None:
    manifest = []
    for name, filename, group in PHOTOS:
        img = center_crop_square(_load_source(filename))
        rel = Path(group) / f"{name}.png"
        out = DATA / rel
        out.parent.mkdir(parents=True, exist_ok=True)
        save_image(img, out)
        manifest.append({"name": name, "path": str(rel), "dataset": group})
        print(f"{group:9s} {name:12s} {img.shape[0]}x{img.shape[1]}")
    for name, img in synthetic_images().items():
        rel = Path("synthetic") / f"{name}.png"
        out = DATA / rel
        out.parent.mkdir(parents=True, exist_ok=True)
        save_image(img, out)
        manifest.append({"name": name, "path": str(rel), "dataset": "synthetic"})
        print(f"{'synthetic':9s} {name:12s} {img.shape[0]}x{img.shape[1]}")
    (DATA / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (DATA / "reference").mkdir(exist_ok=True)
    print(f"manifest: {DATA / 'manifest.json'} ({len(manifest)} images)")


if __name__ == "__main__":
    main()
