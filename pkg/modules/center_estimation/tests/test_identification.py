import math

import numpy as np
import pytest

from modules.center_estimation.services import (
    GeometricIdentificationService,
    NoCandidateAcceptedError,
    NotTangentError,
    ObjectNotFoundError,
)
from modules.enums.enums import Axis, EstimationMethod
from modules.exceptions.exceptions import ProtocolError
from modules.imaging.models import GrayImage, IntRange, PixelRect, ReferenceBox, SubpixelPoint
from modules.imaging.patterns import ScenePatterns
from modules.rig.models import JitterModel
from modules.rig.services import RigSimulator

FRAME = 96
SCENE = 160
ORIGIN = (SCENE - FRAME) // 2


@pytest.fixture
def service():
    return GeometricIdentificationService()


@pytest.fixture(scope="module")
def scene():
    """Calibration object resting near the frame middle."""
    return ScenePatterns.tangency_object(
        SCENE, SCENE, SubpixelPoint(x=ORIGIN + 40.0, y=ORIGIN + 36.0)
    )


def make_rig(scene: GrayImage, truth: SubpixelPoint, sigma: float = 0.0, seed: int = 0):
    return RigSimulator.rig_new(
        scene, truth, FRAME, FRAME, JitterModel(axis_sigma=sigma, seed=seed)
    )


def test_locate_edges_of_square(service):
    frame = ScenePatterns.tangency_object(64, 64, SubpixelPoint(x=30.25, y=20.6))

    edges = service.locate_edges(frame)

    assert edges.top == pytest.approx(12.6, abs=1e-9)
    assert edges.bottom == pytest.approx(28.6, abs=1e-9)
    assert edges.left == pytest.approx(22.25, abs=1e-9)
    assert edges.right == pytest.approx(38.25, abs=1e-9)


def test_locate_edges_without_object(service):
    with pytest.raises(ObjectNotFoundError):
        service.locate_edges(GrayImage.constant(32, 32, 1.0))


@pytest.mark.parametrize("axis", [Axis.X, Axis.Y])
def test_residual_vanishes_at_true_center(service, scene, axis):
    rig = make_rig(scene, SubpixelPoint(x=47, y=45))
    coordinate = 47 if axis is Axis.X else 45

    reading = service.read_candidate(rig, axis, coordinate, cross_coordinate=46.0)

    assert reading.accepted
    assert abs(reading.residual) < 0.1


def test_residual_is_twice_the_candidate_error(service, scene):
    rig = make_rig(scene, SubpixelPoint(x=47.0, y=45.4))

    reading = service.read_candidate(rig, Axis.Y, 45, cross_coordinate=47.0)

    assert reading.residual == pytest.approx(0.8, abs=0.02)
    assert reading.accepted


def test_y_residual_ignores_x_error(service, scene):
    truth = SubpixelPoint(x=46.0, y=44.0)
    rig = make_rig(scene, truth)

    # candidate (51, 45): 5 px off on x, 1 px off on y
    reading = service.read_candidate(rig, Axis.Y, 45, cross_coordinate=51.0)

    assert reading.residual == pytest.approx(-2.0, abs=0.02)
    assert not reading.accepted


def test_tangency_residual_requires_contact(service):
    frame = ScenePatterns.tangency_object(64, 64, SubpixelPoint(x=32, y=20))
    box = ReferenceBox(center=SubpixelPoint(x=32, y=45), half_width=12, half_height=12)

    with pytest.raises(NotTangentError):
        service.tangency_residual(frame, frame, box, Axis.Y)

    reading = service.tangency_residual(frame, frame, box, Axis.Y, strict=False)
    assert not reading.tangent_at_zero
    assert reading.residual is None


def test_tangency_residual_reads_far_edge(service):
    # object bottom at 28 touches box top; after the "half turn" its top sits at 41
    box = ReferenceBox(center=SubpixelPoint(x=32, y=40), half_width=12, half_height=12)
    frame0 = ScenePatterns.tangency_object(64, 64, SubpixelPoint(x=32, y=20))
    frame180 = ScenePatterns.tangency_object(64, 64, SubpixelPoint(x=32, y=49))

    reading = service.tangency_residual(frame0, frame180, box, Axis.Y)

    assert reading.tangent_at_zero
    assert reading.residual == pytest.approx(-11.0, abs=1e-9)


def test_scan_accepts_only_the_nearest_candidate(service, scene):
    rig = make_rig(scene, SubpixelPoint(x=46.6, y=45.3))

    scan = service.identify_axis(rig, Axis.Y, IntRange(start=44, stop=46))

    assert scan.selected == 45
    assert [r.coordinate for r in scan.accepted] == [45]
    assert scan.rounds == 1


def test_residual_table_is_monotone_in_error(service, scene):
    truth_y = 45.2
    rig = make_rig(scene, SubpixelPoint(x=47.0, y=truth_y))

    scan = service.identify_axis(rig, Axis.Y, IntRange(start=42, stop=48))

    by_error = sorted(scan.readings, key=lambda r: abs(r.coordinate - truth_y))
    magnitudes = [abs(r.residual) for r in by_error]
    assert magnitudes == sorted(magnitudes)
    for reading in scan.readings:
        assert reading.residual == pytest.approx(2 * (truth_y - reading.coordinate), abs=0.02)


def test_half_integer_truth_ties_to_lower(service, scene):
    rig = make_rig(scene, SubpixelPoint(x=47.0, y=45.5))

    scan = service.identify_axis(rig, Axis.Y, IntRange(start=44, stop=47))

    assert [r.coordinate for r in scan.accepted] == [45, 46]
    assert scan.selected == 45
    assert abs(scan.selected - 45.5) == 0.5


def test_no_candidate_accepted_outside_range(service, scene):
    rig = make_rig(scene, SubpixelPoint(x=47.0, y=45.3))

    with pytest.raises(NoCandidateAcceptedError):
        service.identify_axis(rig, Axis.Y, IntRange(start=40, stop=42))


def test_identify_exact_integer_center(service, scene):
    truth = SubpixelPoint(x=47, y=45)
    rig = make_rig(scene, truth)

    estimate = service.identify_center(rig, PixelRect.around(47, 45, 2))

    assert estimate.center == truth
    assert estimate.method is EstimationMethod.GEOMETRIC
    for scan in estimate.scans:
        assert abs(scan.reading_for(scan.selected).residual) < 0.1


def test_identify_center_on_a_wide_frame(service):
    truth = SubpixelPoint(x=591.2, y=417.3)
    scene = ScenePatterns.tangency_object(1000, 1000, SubpixelPoint(x=680.0, y=600.0))
    rig = RigSimulator.rig_new(scene, truth, 800, 600)

    estimate = service.identify_center(rig, PixelRect.from_bounds(590, 592, 416, 418))

    assert estimate.center == SubpixelPoint(x=591, y=417)
    scan_x, scan_y = estimate.scans
    assert [r.coordinate for r in scan_x.accepted] == [591]
    assert [r.coordinate for r in scan_y.accepted] == [417]


@pytest.mark.parametrize("axis", [Axis.X, Axis.Y])
def test_axis_scan_ignores_cross_coordinate(service, scene, axis):
    rng = np.random.default_rng(5 if axis is Axis.Y else 6)

    for _ in range(50):
        truth = SubpixelPoint(x=float(rng.uniform(44, 50)), y=float(rng.uniform(42, 48)))
        rig = make_rig(scene, truth)
        coordinate, cross = (truth.x, 45.0) if axis is Axis.X else (truth.y, 47.0)
        search = IntRange(start=math.floor(coordinate) - 1, stop=math.floor(coordinate) + 2)

        selected = {
            service.identify_axis(rig, axis, search, cross_coordinate=cross + shift).selected
            for shift in range(-5, 6)
        }

        assert selected == {round(coordinate)}


def monte_carlo(service, scene, trials: int, sigma: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    errors = np.empty((trials, 2))

    for trial in range(trials):
        truth = SubpixelPoint(x=float(rng.uniform(44, 50)), y=float(rng.uniform(42, 48)))
        rig = make_rig(scene, truth, sigma=sigma, seed=trial)
        box = PixelRect.from_bounds(
            math.floor(truth.x) - 1,
            math.floor(truth.x) + 2,
            math.floor(truth.y) - 1,
            math.floor(truth.y) + 2,
        )
        estimate = service.identify_center(rig, box).with_truth(truth)
        errors[trial] = np.abs(estimate.per_axis_error)

    return errors


def test_jitter_free_error_bound(service, scene):
    errors = monte_carlo(service, scene, trials=500, sigma=0.0, seed=11)

    assert errors.max() <= 0.5 + 1e-9


def test_jittered_error_bound(service, scene):
    errors = monte_carlo(service, scene, trials=500, sigma=0.25, seed=12)

    assert np.mean(errors.max(axis=1) < 1.0) >= 0.95


def test_jitter_free_rejects_far_candidates(service, scene):
    truth = SubpixelPoint(x=47.0, y=44.7)
    rig = make_rig(scene, truth)

    scan = service.identify_axis(rig, Axis.Y, IntRange(start=42, stop=47))

    for reading in scan.readings:
        if abs(reading.coordinate - truth.y) >= 1:
            assert not reading.accepted
    for reading in scan.accepted:
        assert abs(reading.coordinate - truth.y) <= 0.5


def test_protocol_errors_share_exit_code():
    assert NoCandidateAcceptedError("x").exit_code == ProtocolError("x").exit_code == 3
