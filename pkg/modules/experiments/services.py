import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import ndimage

from libs.config.app_config import AppConfig
from libs.json.serializer_deserializer import DataclassSerializer
from libs.log.base_logger import ILogger
from libs.log.file_logger import FileLogger
from modules.blur.models import BlurSpec
from modules.blur.services import BlurService
from modules.center_estimation.baselines import BaselineEstimationService
from modules.center_estimation.models import CenterEstimate
from modules.center_estimation.services import GeometricIdentificationService
from modules.deconvolution.models import DeblurConfig
from modules.deconvolution.services import DeconvolutionService
from modules.enums.enums import EstimationMethod
from modules.exceptions.exceptions import ImageIOError, ParameterError
from modules.experiments.models import ExperimentReport
from modules.imaging.models import GrayImage, PixelRect, SubpixelPoint
from modules.imaging.patterns import ScenePatterns
from modules.imaging.services import ImagingService
from modules.rig.models import JitterModel
from modules.rig.services import RigService, RigSimulator
from modules.rings.services import RingTransformService

STUDY_CANDIDATE_REACH = 4


def strictly_monotone(values: Sequence[float], increasing: bool) -> bool:
    pairs = zip(values, values[1:])
    if increasing:
        return all(b > a for a, b in pairs)
    return all(b < a for a, b in pairs)


class ExperimentService:
    """
    Experiment harness behind the CLI: center-error sensitivity of deblurring,
    identification and verification reports, baseline estimates and the
    Monte-Carlo identification study. Independent cases run on a thread pool;
    rows always follow input order.
    """

    def __init__(
        self,
        imaging: ImagingService | None = None,
        blur: BlurService | None = None,
        deconvolution: DeconvolutionService | None = None,
        rigs: RigService | None = None,
        identification: GeometricIdentificationService | None = None,
        baselines: BaselineEstimationService | None = None,
        max_workers: int = AppConfig.MAX_WORKERS,
        logger: ILogger = FileLogger("ExperimentService"),
    ):
        self.imaging = imaging or ImagingService()
        self.blur = blur or BlurService(self.imaging)
        self.deconvolution = deconvolution or DeconvolutionService()
        self.rigs = rigs or RigService()
        self.identification = identification or GeometricIdentificationService()
        self.baselines = baselines or BaselineEstimationService()
        self.max_workers = max_workers
        self.logger = logger

    # ===============================
    # REPORTS
    # ===============================

    @staticmethod
    def sidecar_path(path: str | Path) -> Path:
        path = Path(path)
        return path.with_name(path.name + ".json")

    def write_report(self, report: ExperimentReport, path: str | Path) -> Path:
        """CSV rows with a header, plus a JSON sidecar holding parameters and summary."""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="") as f:
                writer = csv.DictWriter(f, fieldnames=report.columns)
                writer.writeheader()
                writer.writerows(report.rows)

            self.sidecar_path(path).write_text(
                DataclassSerializer.serialize(
                    {
                        "experiment_id": report.experiment_id,
                        "parameters": report.parameters,
                        "summary": report.summary,
                    },
                    indent=2,
                )
            )
        except OSError as e:
            raise ImageIOError(f"Could not write report {path}: {e}")

        self.logger.info(f"Wrote {report.experiment_id} report ({len(report.rows)} rows) to {path}")
        return path

    # ===============================
    # RINGING
    # ===============================

    @staticmethod
    def ringing_index(
        img: GrayImage, flat_regions: Iterable[PixelRect], window: int = AppConfig.RINGING_WINDOW
    ) -> float:
        """
        Mean local standard deviation over window×window neighbourhoods lying
        entirely inside the flat regions. Zero on a flat image.
        """
        regions = list(flat_regions)
        if not regions:
            raise ParameterError("At least one flat region is required")

        mean = ndimage.uniform_filter(img.data, size=window)
        mean_sq = ndimage.uniform_filter(img.data * img.data, size=window)
        local_std = np.sqrt(np.maximum(mean_sq - mean * mean, 0.0))

        half = window // 2
        picked = np.zeros(img.shape, dtype=bool)
        for region in regions:
            if not region.inside(img.width, img.height):
                raise ParameterError(f"Flat region {region} leaves the {img.width}x{img.height} image")
            if not img.mask[region.slices()].all():
                raise ParameterError(f"Flat region {region} holds invalid pixels")
            if region.x.size < window or region.y.size < window:
                raise ParameterError(f"Flat region {region} is smaller than the {window}px window")

            picked[
                region.y.start + half : region.y.stop - half + 1,
                region.x.start + half : region.x.stop - half + 1,
            ] = True

        return float(local_std[picked].mean())

    @staticmethod
    def flat_tiles(
        reference: GrayImage,
        tile: int = AppConfig.FLAT_TILE,
        std_threshold: float = AppConfig.FLAT_STD,
        mask: Optional[np.ndarray] = None,
    ) -> list[PixelRect]:
        """Grid tiles of the reference that are valid, inside mask and nearly constant."""
        usable = reference.mask if mask is None else reference.mask & np.asarray(mask, dtype=bool)
        tiles = []
        for y0 in range(0, reference.height - tile + 1, tile):
            for x0 in range(0, reference.width - tile + 1, tile):
                rect = PixelRect.from_bounds(x0, x0 + tile - 1, y0, y0 + tile - 1)
                if usable[rect.slices()].all() and reference.data[rect.slices()].std() < std_threshold:
                    tiles.append(rect)
        return tiles

    # ===============================
    # SENSITIVITY
    # ===============================

    def sensitivity(
        self,
        sharp: GrayImage,
        center: SubpixelPoint,
        blur_angle: float,
        offsets: Sequence[float],
        sigma: float = 0.0,
        seed: int = 0,
        config: DeblurConfig | None = None,
    ) -> ExperimentReport:
        """
        Blur about center, then deblur about center shifted by each offset
        along x. PSNR against sharp and ringing are read on one fixed annulus
        that every shifted center fully covers.
        """
        offsets = list(offsets)
        if not offsets:
            raise ParameterError("At least one center offset is required")
        config = config or DeblurConfig()

        blurred = self.blur.blur_and_noise(
            sharp, BlurSpec(center=center, blur_angle=blur_angle, noise_sigma=sigma), seed
        )

        reach = max(abs(offset) for offset in offsets)
        outer = RingTransformService.inscribed_radius(center, sharp.width, sharp.height) - 2 * reach - 2
        if outer < 3:
            raise ParameterError(f"Offsets up to {reach} px leave no evaluation annulus")
        region = self.imaging.disc_mask(sharp.width, sharp.height, center, outer, r_min=3)
        tiles = self.flat_tiles(sharp, mask=region)
        if not tiles:
            self.logger.warning("No flat tiles in the reference: ringing is not measured")

        def run(offset: float) -> dict:
            used = center.shifted(dx=offset)
            started = time.perf_counter()
            restored = self.deconvolution.deblur_rmd(blurred, used, blur_angle, config)
            runtime_ms = (time.perf_counter() - started) * 1000.0
            return {
                "offset": offset,
                "center_x": used.x,
                "center_y": used.y,
                "psnr_db": self.imaging.psnr(restored, sharp, region),
                "ringing": self.ringing_index(restored, tiles) if tiles else math.nan,
                "runtime_ms": round(runtime_ms, 3),
            }

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            rows = list(pool.map(run, offsets))

        # one row per distinct |offset|, in increasing order
        distinct = {}
        for row in sorted(rows, key=lambda row: abs(row["offset"])):
            distinct.setdefault(abs(row["offset"]), row)
        distinct = list(distinct.values())

        summary = {
            "blurred_psnr_db": self.imaging.psnr(blurred, sharp, region),
            "psnr_decreasing": strictly_monotone([r["psnr_db"] for r in distinct], increasing=False),
            "ringing_increasing": bool(tiles)
            and strictly_monotone([r["ringing"] for r in distinct], increasing=True),
            "flat_tiles": len(tiles),
        }
        self.logger.info(f"Sensitivity over offsets {offsets}: {summary}")

        return ExperimentReport(
            experiment_id="sensitivity",
            parameters={
                "center_x": center.x,
                "center_y": center.y,
                "blur_angle": blur_angle,
                "sigma": sigma,
                "seed": seed,
                "offsets": offsets,
                "method": config.method.value,
                "nsr": config.nsr,
                "freq_threshold": config.freq_threshold,
                "lambda": config.lam,
                "eval_radius": [3, outer],
            },
            rows=rows,
            summary=summary,
        )

    # ===============================
    # IDENTIFICATION AND VERIFICATION
    # ===============================

    def identify(self, rig: RigSimulator, search_box: PixelRect) -> tuple[CenterEstimate, ExperimentReport]:
        estimate = self.identification.identify_center(rig, search_box)
        truth = rig.reveal_true_center()
        estimate = estimate.with_truth(truth)

        rows = [
            {
                "axis": scan.axis.value,
                "candidate": reading.coordinate,
                "residual": reading.residual,
                "accepted": reading.accepted,
                "selected": reading.coordinate == scan.selected,
            }
            for scan in estimate.scans
            for reading in scan.readings
        ]
        report = ExperimentReport(
            experiment_id="identify",
            parameters={
                "search_x": [search_box.x.start, search_box.x.stop],
                "search_y": [search_box.y.start, search_box.y.stop],
                "jitter_sigma": rig.jitter.axis_sigma,
                "seed": rig.jitter.seed,
            },
            rows=rows,
            summary={
                "center_x": estimate.center.x,
                "center_y": estimate.center.y,
                "truth_x": truth.x,
                "truth_y": truth.y,
                "error_x": estimate.per_axis_error[0],
                "error_y": estimate.per_axis_error[1],
                "rounds": {scan.axis.value: scan.rounds for scan in estimate.scans},
            },
        )
        return estimate, report

    def verify(
        self,
        rig: RigSimulator,
        candidates: Sequence[SubpixelPoint],
        angles_deg: Sequence[float] = AppConfig.VERIFY_ANGLES_DEG,
        frames_dir: Optional[Path] = None,
    ) -> ExperimentReport:
        """
        Dot tracking around each candidate; one row per candidate and angle.
        With frames_dir, the parked dot is also captured at every angle as PNG.
        """
        if not candidates:
            raise ParameterError("At least one candidate is required")
        angles_deg = list(angles_deg)

        rows = []
        worst = {}
        for candidate in candidates:
            track = self.rigs.track_dot_error(
                rig, candidate, [math.radians(angle) for angle in angles_deg]
            )
            for angle, position, displacement in zip(angles_deg, track.positions, track.displacements):
                rows.append(
                    {
                        "candidate_x": candidate.x,
                        "candidate_y": candidate.y,
                        "angle_deg": angle,
                        "dot_x": position.x,
                        "dot_y": position.y,
                        "displacement": displacement,
                    }
                )
            worst[f"{candidate.x:g},{candidate.y:g}"] = track.max_displacement
            if frames_dir is not None:
                self._dump_turn(rig, Path(frames_dir), candidate, angles_deg)

        return ExperimentReport(
            experiment_id="verify",
            parameters={
                "candidates": [[c.x, c.y] for c in candidates],
                "angles_deg": angles_deg,
                "jitter_sigma": rig.jitter.axis_sigma,
                "seed": rig.jitter.seed,
            },
            rows=rows,
            summary={"max_displacement": worst},
        )

    def _dump_turn(
        self, rig: RigSimulator, frames_dir: Path, candidate: SubpixelPoint, angles_deg: Sequence[float]
    ) -> None:
        for angle in angles_deg:
            rig.set_angle(math.radians(angle))
            self.rigs.dump_frame(
                rig, frames_dir / f"dot_{candidate.x:g}_{candidate.y:g}_{angle:g}deg.png"
            )
        rig.set_angle(0.0)

    # ===============================
    # BASELINES
    # ===============================

    def estimate(
        self,
        blurred: GrayImage,
        method: EstimationMethod,
        candidates: PixelRect,
        blur_angle: Optional[float] = None,
        truth: Optional[SubpixelPoint] = None,
    ) -> tuple[CenterEstimate, ExperimentReport]:
        match method:
            case EstimationMethod.HONG:
                if blur_angle is None:
                    raise ParameterError("The hong estimator needs the blur angle")
                estimate = self.baselines.estimate_center_hong(blurred, candidates, blur_angle)
            case EstimationMethod.HOUGH:
                estimate = self.baselines.estimate_center_hough(blurred, candidates)
            case _:
                raise ParameterError(
                    f"'{method.value}' needs a rig; image estimators are hong and hough"
                )

        if truth is not None:
            estimate = estimate.with_truth(truth)

        row = {
            "method": method.value,
            "center_x": estimate.center.x,
            "center_y": estimate.center.y,
            "score": estimate.score,
            "truth_x": truth.x if truth else None,
            "truth_y": truth.y if truth else None,
            "error_x": estimate.per_axis_error[0] if truth else None,
            "error_y": estimate.per_axis_error[1] if truth else None,
        }
        report = ExperimentReport(
            experiment_id="estimate",
            parameters={
                "method": method.value,
                "candidates_x": [candidates.x.start, candidates.x.stop],
                "candidates_y": [candidates.y.start, candidates.y.stop],
                "blur_angle": blur_angle,
            },
            rows=[row],
            summary={"max_axis_error": estimate.max_axis_error},
        )
        return estimate, report

    # ===============================
    # MONTE-CARLO STUDY
    # ===============================

    @staticmethod
    def study_scene(frame: int) -> GrayImage:
        """Tangency scene wide enough for a full turn of a frame x frame window."""
        scene_size = math.ceil(frame * math.sqrt(2)) + 8
        origin = (scene_size - frame) // 2
        return ScenePatterns.tangency_object(
            scene_size,
            scene_size,
            SubpixelPoint(x=origin + frame / 2 - 8, y=origin + frame / 2 - 12),
        )

    def _study_trial(
        self,
        trial: int,
        truth: SubpixelPoint,
        scene: GrayImage,
        sigma: float,
        frame: int,
        with_baselines: bool,
        blur_angle: float,
        config: DeblurConfig,
    ) -> dict:
        rig = RigSimulator.rig_new(
            scene, truth, frame, frame, JitterModel(axis_sigma=sigma, seed=trial)
        )
        box = PixelRect.from_bounds(
            math.floor(truth.x) - 1,
            math.floor(truth.x) + 2,
            math.floor(truth.y) - 1,
            math.floor(truth.y) + 2,
        )

        geometric = self.identification.identify_center(rig, box).with_truth(truth)
        row = {
            "trial": trial,
            "truth_x": truth.x,
            "truth_y": truth.y,
            "center_x": geometric.center.x,
            "center_y": geometric.center.y,
            "error_x": geometric.per_axis_error[0],
            "error_y": geometric.per_axis_error[1],
        }
        if not with_baselines:
            return row

        sharp = ScenePatterns.speckle(frame, frame, seed=trial)
        blurred = self.blur.synthesize_rmb(sharp, BlurSpec(center=truth, blur_angle=blur_angle))
        candidates = PixelRect.around(round(truth.x), round(truth.y), STUDY_CANDIDATE_REACH)
        centers = {EstimationMethod.GEOMETRIC: geometric.center}
        for method in (EstimationMethod.HONG, EstimationMethod.HOUGH):
            estimate, _ = self.estimate(blurred, method, candidates, blur_angle, truth)
            centers[method] = estimate.center
            row[f"{method.value}_x"] = estimate.center.x
            row[f"{method.value}_y"] = estimate.center.y
            row[f"{method.value}_error"] = estimate.max_axis_error

        # annulus covered by the rings of every candidate
        outer = RingTransformService.inscribed_radius(truth, frame, frame) - 3 * STUDY_CANDIDATE_REACH - 2
        region = self.imaging.disc_mask(frame, frame, truth, outer, r_min=3)
        tiles = self.flat_tiles(sharp, mask=region)
        for method, center in centers.items():
            restored = self.deconvolution.deblur_rmd(blurred, center, blur_angle, config)
            row[f"{method.value}_psnr_db"] = self.imaging.psnr(restored, sharp, region)
            row[f"{method.value}_ringing"] = self.ringing_index(restored, tiles) if tiles else math.nan
        return row

    def study(
        self,
        trials: int,
        sigma: float = 0.0,
        seed: int = 0,
        frame: int = 96,
        with_baselines: bool = False,
        blur_angle: float = 0.6,
        config: DeblurConfig | None = None,
    ) -> ExperimentReport:
        """
        Identification over rigs with uniformly drawn subpixel centers near
        the frame middle. With baselines, each trial also blurs a speckle
        scene about the same center, runs both image estimators on it and
        deblurs it about every estimated center.
        """
        if trials < 1:
            raise ParameterError(f"At least one trial is required, got {trials}")
        if frame < 64:
            raise ParameterError(f"Frame must be at least 64 px, got {frame}")
        config = config or DeblurConfig()

        rng = np.random.default_rng(seed)
        middle = frame / 2
        truths = [
            SubpixelPoint(x=float(x), y=float(y))
            for x, y in rng.uniform(middle - 3, middle + 3, size=(trials, 2))
        ]
        scene = self.study_scene(frame)

        started = time.perf_counter()
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            rows = list(
                pool.map(
                    lambda args: self._study_trial(
                        *args, scene, sigma, frame, with_baselines, blur_angle, config
                    ),
                    enumerate(truths),
                )
            )
        runtime_s = time.perf_counter() - started

        errors = np.array([[abs(r["error_x"]), abs(r["error_y"])] for r in rows])
        summary = {
            "max_axis_error": float(errors.max()),
            "within_half_pixel": float(np.mean(errors.max(axis=1) <= 0.5 + 1e-9)),
            "within_one_pixel": float(np.mean(errors.max(axis=1) < 1.0)),
            "runtime_s": round(runtime_s, 3),
        }
        if with_baselines:
            geometric = errors.max(axis=1)
            hong = np.array([r["hong_error"] for r in rows])
            hough = np.array([r["hough_error"] for r in rows])
            psnr = {
                method.value: np.array([r[f"{method.value}_psnr_db"] for r in rows])
                for method in EstimationMethod
            }
            best_baseline = np.maximum(psnr["hong"], psnr["hough"])
            summary.update(
                {
                    "geometric_not_worse": bool(np.all(geometric <= hong) and np.all(geometric <= hough)),
                    "hong_within_2px": float(np.mean(hong <= 2.0)),
                    "hough_within_3px": float(np.mean(hough <= 3.0)),
                    "mean_psnr_db": {name: float(values.mean()) for name, values in psnr.items()},
                    "geometric_best_psnr": float(np.mean(psnr["geometric"] >= best_baseline - 1e-9)),
                }
            )
        self.logger.info(f"Study of {trials} trials at jitter {sigma}: {summary}")

        return ExperimentReport(
            experiment_id="study",
            parameters={
                "trials": trials,
                "sigma": sigma,
                "seed": seed,
                "frame": frame,
                "with_baselines": with_baselines,
                "blur_angle": blur_angle,
                "method": config.method.value,
                "nsr": config.nsr,
                "freq_threshold": config.freq_threshold,
                "lambda": config.lam,
            },
            rows=rows,
            summary=summary,
        )
