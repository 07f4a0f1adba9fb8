import numpy as np
import pytest

from denoisebench.metrics import psnr
from denoisebench.noise import NoiseSpec, apply_noise, awgn, salt_pepper, speckle

SIGMAS = (5.0, 20.0, 35.0, 50.0, 65.0, 80.0, 95.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec("awgn", 0.0, 1)
    with pytest.raises(ValueError):
        NoiseSpec("salt_pepper", 0.6, 1)
    with pytest.raises(ValueError):
        NoiseSpec("speckle", -1.0, 1)
    with pytest.raises(ValueError):
        NoiseSpec("brownian", 1.0, 1)


def test_spec_json_round_trip():
    spec = NoiseSpec.from_dict({"family": "awgn", "sigma": 20, "seed": 42})
    assert spec == NoiseSpec("awgn", 20.0, 42)
    assert spec.to_dict() == {"family": "awgn", "sigma": 20.0, "seed": 42}
    sp = NoiseSpec("salt_pepper", 0.1, 3)
    assert NoiseSpec.from_dict(sp.to_dict()) == sp


def test_awgn_deterministic(camera64):
    spec = NoiseSpec("awgn", 20.0, 12345)
    a = awgn(camera64, spec)
    b = awgn(camera64, spec)
    assert np.array_equal(a, b)
    c = awgn(camera64, NoiseSpec("awgn", 20.0, 12346))
    assert not np.array_equal(a, c)


def test_awgn_mismatched_family_rejected(camera64):
    with pytest.raises(ValueError):
        awgn(camera64, NoiseSpec("speckle", 0.1, 1))


def test_awgn_moments():
    img = np.full((256, 256), 128.0)
    sigma = 20.0
    residual = awgn(img, NoiseSpec("awgn", sigma, 99)) - img
    n = residual.size
    var_tol = 3.0 * sigma * sigma * np.sqrt(2.0 / n)
    assert abs(residual.mean()) < 4.0 * sigma / np.sqrt(n)
    assert abs(residual.var() - sigma * sigma) < var_tol


@pytest.mark.parametrize("sigma", SIGMAS)
def test_awgn_noisy_psnr_matches_theory(sigma):
    # Unclipped noisy PSNR averaged over seeds approaches 20*log10(255/sigma).
    img = np.full((256, 256), 128.0)
    values = [
        psnr(img, awgn(img, NoiseSpec("awgn", sigma, seed)))
        for seed in range(10)
    ]
    assert abs(np.mean(values) - 20.0 * np.log10(255.0 / sigma)) < 0.3


def test_awgn_not_clipped():
    img = np.full((64, 64), 250.0)
    noisy = awgn(img, NoiseSpec("awgn", 30.0, 5))
    assert noisy.max() > 255.0  # values may leave [0, 255] by design


def test_salt_pepper_counts_and_values():
    img = np.full((100, 100), 128.0)
    density = 0.1
    out = salt_pepper(img, NoiseSpec("salt_pepper", density, 77))
    corrupted = out != img
    assert set(np.unique(out[corrupted])) <= {0.0, 255.0}
    n = img.size
    expected = density * n
    spread = 4.0 * np.sqrt(n * density * (1 - density))
    assert abs(corrupted.sum() - expected) < spread
    # Salt and pepper arrive in roughly equal proportion.
    assert abs((out == 0.0).sum() - (out == 255.0).sum()) < spread


def test_salt_pepper_low_density_mostly_unchanged():
    img = np.full((64, 64), 90.0)
    out = salt_pepper(img, NoiseSpec("salt_pepper", 0.01, 3))
    assert (out == img).mean() > 0.95


def test_speckle_zero_image_stays_zero():
    img = np.zeros((32, 32))
    out = speckle(img, NoiseSpec("speckle", 0.05, 9))
    assert np.array_equal(out, img)


def test_speckle_variance():
    img = np.full((256, 256), 100.0)
    out = speckle(img, NoiseSpec("speckle", 0.01, 21))
    target = 100.0 * 100.0 * 0.01
    assert abs(out.var() - target) / target < 0.10
    assert abs(out.mean() - 100.0) < 0.5


def test_apply_noise_dispatch(camera64):
    spec = NoiseSpec("salt_pepper", 0.2, 4)
    assert np.array_equal(apply_noise(camera64, spec), salt_pepper(camera64, spec))
