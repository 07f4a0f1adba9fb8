import math

import numpy as np
import pytest

from denoisebench.errors import SizeError
from denoisebench.metrics import clip_for_scoring, mse, psnr, ssim
from denoisebench.noise import NoiseSpec, awgn


def test_mse_basics():
    a = np.zeros((4, 4))
    assert mse(a, a) == 0.0
    assert mse(a, a + 16.0) == pytest.approx(256.0, abs=1e-12)
    assert mse(np.array([[0.0, 10.0]]), np.array([[10.0, 0.0]])) == pytest.approx(100.0)


def test_mse_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        mse(np.zeros((2, 2)), np.zeros((2, 3)))


def test_psnr_closed_form():
    a = np.zeros((8, 8))
    value = psnr(a, a + 16.0)  # mse = 256
    assert value == pytest.approx(10.0 * math.log10(255.0 ** 2 / 256.0), abs=1e-12)
    assert f"{value:.2f}" == "24.05"


def test_psnr_identical_is_inf():
    a = np.full((4, 4), 7.0)
    assert psnr(a, a) == float("inf")
    assert f"{psnr(a, a):.2f}" == "inf"


def test_ssim_self_is_exactly_one():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 255, size=(32, 32))
    assert ssim(x, x) == 1.0


def test_ssim_constant_images_closed_form():
    a = np.full((16, 16), 100.0)
    b = np.full((16, 16), 150.0)
    c1 = (0.01 * 255) ** 2
    expected = (2 * 100 * 150 + c1) / (100 ** 2 + 150 ** 2 + c1)
    assert ssim(a, b) == pytest.approx(expected, abs=1e-4)
    assert ssim(a, b) == pytest.approx(0.9231, abs=1e-4)


def test_ssim_symmetric():
    rng = np.random.default_rng(1)
    a = rng.uniform(0, 255, size=(24, 24))
    b = rng.uniform(0, 255, size=(24, 24))
    assert abs(ssim(a, b) - ssim(b, a)) <= 1e-12


def test_ssim_offset_below_one_and_psnr_decreases():
    rng = np.random.default_rng(2)
    a = rng.uniform(50, 200, size=(32, 32))
    previous = float("inf")
    for offset in (1.0, 5.0, 25.0):
        assert ssim(a, a + offset) < 1.0
        value = psnr(a, a + offset)
        assert value < previous
        previous = value


def test_ssim_too_small_raises():
    with pytest.raises(SizeError):
        ssim(np.zeros((10, 10)), np.zeros((10, 10)))


def test_psnr_monotone_in_sigma(camera64):
    # Fixed image and seed: heavier corruption always scores lower.
    values = []
    for sigma in (5.0, 20.0, 35.0, 50.0, 65.0, 80.0, 95.0, 100.0):
        noisy = awgn(camera64, NoiseSpec("awgn", sigma, 123))
        values.append(psnr(camera64, noisy))
    assert all(b < a for a, b in zip(values, values[1:]))


def test_clip_for_scoring():
    img = np.array([[-5.0, 300.0, 128.0]])
    assert clip_for_scoring(img).tolist() == [[0.0, 255.0, 128.0]]
