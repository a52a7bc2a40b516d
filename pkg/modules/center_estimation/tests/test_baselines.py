import numpy as np
import pytest

from modules.blur.models import BlurSpec
from modules.blur.services import BlurService
from modules.center_estimation.baselines import BaselineEstimationService, DegenerateImageError
from modules.enums.enums import EstimationMethod
from modules.exceptions.exceptions import EstimationError, ParameterError
from modules.imaging.models import GrayImage, PixelRect, SubpixelPoint
from modules.imaging.patterns import ScenePatterns

SIZE = 128
BLUR_ANGLE = 0.6


@pytest.fixture
def service():
    return BaselineEstimationService()


@pytest.fixture(scope="module")
def truth():
    return SubpixelPoint(x=63.0, y=65.0)


@pytest.fixture(scope="module")
def blurred(truth):
    sharp = ScenePatterns.speckle(SIZE, SIZE, seed=4)
    return BlurService().synthesize_rmb(sharp, BlurSpec(center=truth, blur_angle=BLUR_ANGLE))


def test_derivative_autocorrelation_of_constant():
    assert BaselineEstimationService.derivative_autocorrelation(np.full(64, 0.3)) is None


def test_box_blur_puts_the_lobe_at_its_length():
    rng = np.random.default_rng(0)
    sharp = rng.uniform(0, 1, 256)
    blurred = sum(np.roll(sharp, j) for j in range(12)) / 12

    rho = BaselineEstimationService.derivative_autocorrelation(blurred)
    extent, depth = BaselineEstimationService.blur_extent(rho, expected=12.0)

    assert extent == pytest.approx(12.0, abs=0.5)
    assert depth < -0.3


def test_lobe_on_the_window_edge_is_not_an_extent():
    falling = np.cos(np.linspace(0, np.pi, 64))

    assert BaselineEstimationService.blur_extent(falling, expected=8.0) is None


def test_positive_dip_is_not_an_extent():
    rho = np.ones(64)
    rho[7:10] = [0.5, 0.2, 0.5]

    assert BaselineEstimationService.blur_extent(rho, expected=8.0) is None


def test_hong_score_is_the_line_fit_residual(service, blurred, truth):
    candidates = PixelRect.around(int(truth.x), int(truth.y), 1)

    estimate = service.estimate_center_hong(blurred, candidates, BLUR_ANGLE)
    score, depth, textured = service._hong_score(
        blurred, int(estimate.center.x), int(estimate.center.y), BLUR_ANGLE
    )

    assert estimate.score == score
    assert depth < 0
    assert textured >= 3


def test_hong_finds_center(service, blurred, truth):
    candidates = PixelRect.around(int(truth.x), int(truth.y), 4)

    estimate = service.estimate_center_hong(blurred, candidates, BLUR_ANGLE)

    assert estimate.method is EstimationMethod.HONG
    assert estimate.center.distance_to(truth) <= 2.0


def test_hough_finds_center(service, blurred, truth):
    candidates = PixelRect.around(int(truth.x), int(truth.y), 4)

    estimate = service.estimate_center_hough(blurred, candidates)

    assert estimate.method is EstimationMethod.HOUGH
    assert estimate.center.distance_to(truth) <= 3.0
    assert 0.0 < estimate.score <= 1.0


@pytest.mark.parametrize("seed", [5, 6, 7])
def test_hough_stays_off_the_candidate_border(service, seed):
    truth = SubpixelPoint(x=62.4, y=65.7)
    sharp = ScenePatterns.speckle(SIZE, SIZE, seed=seed)
    image = BlurService().synthesize_rmb(sharp, BlurSpec(center=truth, blur_angle=BLUR_ANGLE))

    estimate = service.estimate_center_hough(image, PixelRect.around(62, 66, 4)).with_truth(truth)

    assert estimate.max_axis_error <= 3.0


def test_estimates_are_deterministic(blurred, truth):
    candidates = PixelRect.around(int(truth.x), int(truth.y), 2)

    serial = BaselineEstimationService(max_workers=1)
    parallel = BaselineEstimationService(max_workers=4)

    assert serial.estimate_center_hough(blurred, candidates) == parallel.estimate_center_hough(
        blurred, candidates
    )
    assert serial.estimate_center_hong(blurred, candidates, BLUR_ANGLE) == (
        parallel.estimate_center_hong(blurred, candidates, BLUR_ANGLE)
    )


def test_constant_image_is_degenerate(service):
    flat = GrayImage.constant(64, 64, 0.5)
    candidates = PixelRect.around(32, 32, 2)

    with pytest.raises(DegenerateImageError):
        service.estimate_center_hong(flat, candidates, BLUR_ANGLE)
    with pytest.raises(EstimationError):
        service.estimate_center_hough(flat, candidates)


def test_candidates_must_fit_the_image(service, blurred):
    with pytest.raises(ParameterError):
        service.estimate_center_hough(blurred, PixelRect.from_bounds(120, 130, 10, 12))
    with pytest.raises(ParameterError):
        service.estimate_center_hong(blurred, PixelRect.around(60, 60, 2), 0.0)
