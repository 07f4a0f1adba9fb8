from pathlib import Path

import numpy as np
import pytest

from denoisebench import _backend
from denoisebench.image import load_image, resize_to

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
REFERENCE_DIR = DATA_DIR / "reference"


@pytest.fixture(params=_backend.available_backends())
def backend(request):
    """Run the test once per available kernel backend."""
    previous = _backend.backend_name()
    _backend.select(request.param)
    yield request.param
    _backend.select(previous)


@pytest.fixture(scope="session")
def camera():
    return load_image(DATA_DIR / "standard" / "camera.png")


@pytest.fixture(scope="session")
def camera64(camera):
    return resize_to(camera, 64)


@pytest.fixture(scope="session")
def camera256(camera):
    return resize_to(camera, 256)


def reference_image(name: str) -> np.ndarray:
    """Classic benchmark photographs (cameraman, lena, house, ...).

    They are not redistributable with this repository and no approved source
    exists in this build environment, so the literature-value checks skip
    unless the user drops the files into data/reference/.
    """
    path = REFERENCE_DIR / f"{name}.png"
    if not path.exists():
        pytest.skip(
            f"reference photograph {name!r} unavailable: place an 8-bit "
            f"grayscale PNG at {path} to enable this check"
        )
    return load_image(path)
