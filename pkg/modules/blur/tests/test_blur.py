import math

import numpy as np
import pytest
from pydantic import ValidationError

from modules.blur.models import BlurSpec
from modules.blur.services import BlurService
from modules.imaging.models import GrayImage, SubpixelPoint
from modules.imaging.patterns import ScenePatterns
from modules.imaging.services import ImagingService


@pytest.fixture
def service():
    return BlurService(ImagingService())


@pytest.fixture
def center():
    return SubpixelPoint(x=47.3, y=48.6)


def test_blur_spec_invariants(center):
    with pytest.raises(ValidationError):
        BlurSpec(center=center, blur_angle=0.0)
    with pytest.raises(ValidationError):
        BlurSpec(center=center, blur_angle=2 * math.pi)
    with pytest.raises(ValidationError):
        BlurSpec(center=center, blur_angle=0.3, angular_samples=1)
    with pytest.raises(ValidationError):
        BlurSpec(center=center, blur_angle=0.3, noise_sigma=-0.01)


def test_default_angular_samples():
    assert BlurService.default_angular_samples(0.5, 100.0) == 101
    assert BlurService.default_angular_samples(1e-9, 10.0) == 2


def test_vanishing_blur_angle_is_identity(service, center):
    sharp = ScenePatterns.texture(64, 64, seed=1)
    spec = BlurSpec(center=center, blur_angle=1e-9, angular_samples=2)

    blurred = service.synthesize_rmb(sharp, spec)

    assert ImagingService().mean_abs_error(blurred, sharp) <= 1e-6


def test_rotationally_symmetric_image_is_unchanged(service, center):
    sharp = ScenePatterns.radial(96, 96, center, period=40.0)
    spec = BlurSpec(center=center, blur_angle=0.8)

    blurred = service.synthesize_rmb(sharp, spec)

    region = blurred.mask
    assert region.any()
    assert np.abs(blurred.data[region] - sharp.data[region]).max() <= 0.01


def test_center_pixel_is_preserved(service):
    sharp = ScenePatterns.texture(64, 64, seed=5)
    spec = BlurSpec(center=SubpixelPoint(x=30, y=33), blur_angle=1.0)

    blurred = service.synthesize_rmb(sharp, spec)

    assert blurred.value_at(30, 33) == pytest.approx(sharp.value_at(30, 33), abs=1e-12)


def test_mean_is_preserved_on_central_disc(service, center):
    sharp = ScenePatterns.texture(96, 96, seed=2)
    spec = BlurSpec(center=center, blur_angle=0.5)
    disc = ImagingService.disc_mask(96, 96, center, 30.0)

    blurred = service.synthesize_rmb(sharp, spec)

    before = sharp.data[disc].mean()
    after = blurred.data[disc].mean()
    assert abs(after - before) / before <= 0.005


def test_blur_commutes_with_rotation(service, center):
    imaging = ImagingService()
    sharp = ScenePatterns.texture(96, 96, seed=3)
    spec = BlurSpec(center=center, blur_angle=0.4)

    a = service.synthesize_rmb(imaging.rotate_about(sharp, center, 0.7), spec)
    b = imaging.rotate_about(service.synthesize_rmb(sharp, spec), center, 0.7)

    assert imaging.mean_abs_error(a, b) <= 0.02


def test_blur_does_not_overshoot(service, center):
    sharp = ScenePatterns.blocks(64, 64, seed=9)
    spec = BlurSpec(center=SubpixelPoint(x=31.5, y=30.2), blur_angle=0.6)

    blurred = service.synthesize_rmb(sharp, spec)
    values = blurred.data[blurred.mask]

    assert values.min() >= sharp.data.min() - 1e-12
    assert values.max() <= sharp.data.max() + 1e-12


def test_zero_noise_is_bit_identical(service):
    img = ScenePatterns.texture(32, 32)

    noisy = service.add_gaussian_noise(img, 0.0, seed=1)

    assert np.array_equal(noisy.data, img.data)


def test_noise_strength():
    service = BlurService()
    img = GrayImage.constant(512, 512, 0.5)

    noisy = service.add_gaussian_noise(img, 0.01, seed=11)

    assert 0.009 <= noisy.data.std(ddof=1) <= 0.011


def test_noise_is_deterministic(service):
    img = GrayImage.constant(32, 32, 0.5)

    a = service.add_gaussian_noise(img, 0.05, seed=4)
    b = service.add_gaussian_noise(img, 0.05, seed=4)
    c = service.add_gaussian_noise(img, 0.05, seed=5)

    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_noise_is_clamped(service):
    img = GrayImage.constant(64, 64, 0.99)

    noisy = service.add_gaussian_noise(img, 0.2, seed=0)

    assert noisy.data.max() <= 1.0
    assert noisy.data.min() >= 0.0
