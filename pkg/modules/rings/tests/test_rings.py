import csv
import math

import numpy as np
import pytest
from pydantic import ValidationError

from modules.blur.models import BlurSpec
from modules.blur.services import BlurService
from modules.exceptions.exceptions import ParameterError
from modules.imaging.models import GrayImage, SubpixelPoint
from modules.imaging.patterns import ScenePatterns
from modules.imaging.services import ImagingService
from modules.rings.models import RingSequence, RingStack
from modules.rings.services import RingTransformService


@pytest.fixture
def service():
    return RingTransformService(ImagingService())


@pytest.fixture
def center():
    return SubpixelPoint(x=47.3, y=48.6)


def test_ring_sample_counts():
    assert RingTransformService.ring_sample_count(1) == 8
    assert RingTransformService.ring_sample_count(2) == 13
    assert RingTransformService.ring_sample_count(10) == 63


def test_ring_sequence_needs_eight_samples():
    with pytest.raises(ValidationError):
        RingSequence(radius=1, values=np.zeros(7), valid=np.ones(7, dtype=bool))


def test_ring_stack_radii_must_be_contiguous():
    ring = RingSequence(radius=2, values=np.zeros(13), valid=None)

    with pytest.raises(ValidationError):
        RingStack(center=SubpixelPoint(x=0, y=0), rings=[ring], center_value=0.0)


def test_ring_kernel_length(service):
    assert service.ring_kernel_length(16, 2 * math.pi, 100) == pytest.approx(100.0)
    assert service.ring_kernel_length(10, math.pi / 2, 64) == pytest.approx(16.0)

    short = service.ring_kernel_length(10, 0.3, service.ring_sample_count(10))
    long = service.ring_kernel_length(20, 0.3, 2 * service.ring_sample_count(10))
    assert long == pytest.approx(2 * short)

    with pytest.raises(ParameterError):
        service.ring_kernel_length(10, 0.0, 64)


def test_inscribed_radius(service, center):
    assert service.inscribed_radius(center, 96, 96) == 46
    assert service.inscribed_radius(SubpixelPoint(x=0.5, y=10), 96, 96) == 0


def test_constant_image_gives_constant_rings(service, center):
    img = GrayImage.constant(96, 96, 0.7)

    stack = service.decompose_rings(img, center, 40)

    assert stack.r_max == 40
    assert stack.center_value == pytest.approx(0.7)
    for ring in stack.rings:
        assert ring.fully_valid
        np.testing.assert_allclose(ring.values, 0.7)


def test_radial_image_gives_flat_rings(service, center):
    img = ScenePatterns.radial(96, 96, center, period=40.0)

    stack = service.decompose_rings(img, center, 40)

    for ring in stack.rings:
        expected = 0.5 + 0.4 * math.cos(2 * math.pi * ring.radius / 40.0)
        assert np.abs(ring.values - expected).max() <= 0.01


def test_impulse_peaks_at_first_sample(service):
    img = ScenePatterns.impulse(41, 41, 32, 20)

    stack = service.decompose_rings(img, SubpixelPoint(x=20, y=20), 15)
    ring = stack.ring(12)

    assert int(np.argmax(ring.values)) == 0
    assert ring.values[0] == pytest.approx(1.0)
    assert stack.ring(11).values.max() < 1.0
    assert stack.ring(13).values.max() < 1.0


def test_out_of_frame_samples_are_invalid(service):
    img = GrayImage.constant(20, 20, 0.5)

    stack = service.decompose_rings(img, SubpixelPoint(x=5, y=10), 8)

    assert stack.ring(5).fully_valid
    assert not stack.ring(6).fully_valid
    assert stack.ring(6).values[~stack.ring(6).valid].max() == 0.0


def test_decompose_rejects_empty_radius(service, center):
    with pytest.raises(ParameterError):
        service.decompose_rings(GrayImage.constant(8, 8, 0.5), center, 0)


def test_constant_stack_recomposes_to_constant(service, center):
    rings = [
        RingSequence(
            radius=r,
            values=np.full(service.ring_sample_count(r), 0.3),
            valid=None,
        )
        for r in range(1, 31)
    ]
    stack = RingStack(center=center, rings=rings, center_value=0.3)

    img = service.recompose(stack, 96, 96)

    assert img.mask.sum() > 0
    np.testing.assert_allclose(img.data[img.mask], 0.3)
    far = ImagingService.disc_mask(96, 96, center, 1e9, r_min=30.0 + 1e-9)
    assert not img.mask[far].any()


def test_round_trip_on_smooth_image(service, center):
    imaging = ImagingService()
    img = ScenePatterns.texture(96, 96, seed=6)
    r_max = service.inscribed_radius(center, 96, 96)

    back = service.recompose(service.decompose_rings(img, center, r_max), 96, 96)
    annulus = imaging.disc_mask(96, 96, center, r_max - 2, r_min=2)

    assert imaging.psnr(back, img, annulus) >= 35.0


def test_round_trip_on_radial_image(service, center):
    imaging = ImagingService()
    img = ScenePatterns.radial(96, 96, center)
    r_max = service.inscribed_radius(center, 96, 96)

    back = service.recompose(service.decompose_rings(img, center, r_max), 96, 96)
    annulus = imaging.disc_mask(96, 96, center, r_max - 2, r_min=2)

    assert imaging.mean_abs_error(back, img, annulus) <= 0.01


def test_circular_box_convolve():
    seq = np.arange(16, dtype=np.float64)

    np.testing.assert_allclose(RingTransformService.circular_box_convolve(seq, 1.0), seq)

    blurred = RingTransformService.circular_box_convolve(seq, 2.5)
    assert blurred[5] == pytest.approx(0.4 * 5 + 0.4 * 4 + 0.2 * 3)
    assert blurred.sum() == pytest.approx(seq.sum())

    with pytest.raises(ParameterError):
        RingTransformService.circular_box_convolve(seq, 17.0)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_blurred_rings_match_box_convolution(service, center, seed):
    sharp = ScenePatterns.texture(96, 96, seed=seed)
    blur_angle = 0.3
    blurred = BlurService().synthesize_rmb(sharp, BlurSpec(center=center, blur_angle=blur_angle))
    r_max = service.inscribed_radius(center, 96, 96)

    sharp_rings = service.decompose_rings(sharp, center, r_max)
    blurred_rings = service.decompose_rings(blurred, center, r_max)

    checked = 0
    for radius in range(10, int(0.8 * r_max) + 1):
        observed = blurred_rings.ring(radius)
        if not observed.fully_valid:
            continue
        reference = sharp_rings.ring(radius)
        length = service.ring_kernel_length(radius, blur_angle, reference.sample_count)
        expected = service.circular_box_convolve(reference.values, length)

        rms = float(np.sqrt(np.mean((observed.values - expected) ** 2)))
        assert rms <= 0.02, f"ring {radius}: rms {rms:.4f}"
        checked += 1

    assert checked > 20


def test_dump_csv(service, center, tmp_path):
    stack = service.decompose_rings(GrayImage.constant(32, 32, 0.5), SubpixelPoint(x=15, y=15), 3)

    path = service.dump_csv(stack, tmp_path / "rings.csv")

    with open(path) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 1 + 8 + 13 + 19
    assert rows[0]["radius"] == "0"
    assert float(rows[-1]["value"]) == pytest.approx(0.5)
