import math
from pathlib import Path
from threading import Lock
from typing import Iterable

import dacite
import numpy as np
from scipy import ndimage

from libs.config.app_config import AppConfig
from libs.json.serializer_deserializer import DataclassSerializer
from libs.log.base_logger import ILogger
from libs.log.file_logger import FileLogger
from modules.exceptions.exceptions import ImageIOError, ParameterError, ProtocolError
from modules.imaging.image_io import ImageFileService
from modules.imaging.models import GrayImage, SubpixelPoint
from modules.imaging.services import ImagingService
from modules.rig.models import DotTrack, JitterModel, RigConfig, RigState


class DotNotFoundError(ProtocolError):
    def __init__(self, message, message_markup=None, *args, **kwargs) -> None:
        super().__init__(message, message_markup=message_markup, *args, **kwargs)


class RigSimulator:
    """
    A camera riding a rotating platform above a scene.

    Captures are instantaneous: the scene is rotated about the (jittered)
    center, shifted by the operator offset and cropped to the frame.
    Pose changes and captures are serialised per rig.
    """

    def __init__(
        self,
        state: RigState,
        imaging: ImagingService | None = None,
        logger: ILogger = FileLogger("RigSimulator"),
    ):
        self._validate(state)
        self._state = state
        self._captures = 0
        self._lock = Lock()
        self.imaging = imaging or ImagingService()
        self.logger = logger

    @staticmethod
    def _validate(state: RigState) -> None:
        if min(state.scene.width, state.scene.height) < state.frame_diagonal:
            raise ParameterError(
                f"Scene {state.scene.width}x{state.scene.height} is smaller than "
                f"the frame diagonal {state.frame_diagonal:.1f}"
            )

        center = state.true_center
        if not (0 <= center.x <= state.frame_width - 1 and 0 <= center.y <= state.frame_height - 1):
            raise ParameterError(f"Rotation center {center} lies outside the frame")

    @classmethod
    def rig_new(
        cls,
        scene: GrayImage,
        true_center: SubpixelPoint,
        frame_width: int,
        frame_height: int,
        jitter: JitterModel | None = None,
        **kwargs,
    ) -> "RigSimulator":
        state = RigState(
            scene=scene,
            true_center=true_center,
            frame_width=frame_width,
            frame_height=frame_height,
            jitter=jitter or JitterModel(),
        )
        return cls(state, **kwargs)

    # ===============================
    # POSE
    # ===============================

    @property
    def frame_size(self) -> tuple[int, int]:
        return self._state.frame_width, self._state.frame_height

    @property
    def angle(self) -> float:
        return self._state.current_angle

    @property
    def offset(self) -> SubpixelPoint:
        return self._state.scene_offset

    @property
    def jitter(self) -> JitterModel:
        return self._state.jitter

    @property
    def capture_count(self) -> int:
        return self._captures

    def set_angle(self, angle: float) -> None:
        if not math.isfinite(angle):
            raise ParameterError(f"Platform angle must be finite, got {angle}")
        with self._lock:
            self._state = self._state.model_copy(update={"current_angle": angle})

    def translate(self, dx: float, dy: float) -> None:
        with self._lock:
            self._state = self._state.model_copy(
                update={"scene_offset": self._state.scene_offset.shifted(dx, dy)}
            )

    def reveal_true_center(self) -> SubpixelPoint:
        """Ground truth, for test oracles and reports only."""
        return self._state.true_center

    # ===============================
    # CAPTURE
    # ===============================

    def _effective_center(self, counter: int) -> SubpixelPoint:
        jitter = self._state.jitter
        center = self._state.true_center
        if not jitter.enabled:
            return center

        rng = np.random.default_rng([jitter.seed, counter])
        dx, dy = rng.normal(0.0, jitter.axis_sigma, 2)
        return center.shifted(float(dx), float(dy))

    def capture(self) -> GrayImage:
        with self._lock:
            state = self._state
            counter = self._captures
            self._captures += 1

        center = self._effective_center(counter)
        origin_x, origin_y = state.scene_origin
        xs, ys = self.imaging.pixel_grid(state.frame_width, state.frame_height)
        sx, sy = self.imaging.rotation_source(center, state.current_angle, xs, ys)
        sx += origin_x - state.scene_offset.x
        sy += origin_y - state.scene_offset.y

        values, valid = self.imaging.sample_bilinear_many(state.scene, sx, sy)
        self.logger.debug(
            f"Capture #{counter} at {math.degrees(state.current_angle):.1f} deg, "
            f"offset {state.scene_offset}"
        )
        return GrayImage(data=values, valid_mask=valid)


class RigService:
    """Rig scenarios, dot localisation and the dot-tracking verification."""

    def __init__(
        self,
        files: ImageFileService | None = None,
        logger: ILogger = FileLogger("RigService"),
    ):
        self.files = files or ImageFileService()
        self.logger = logger

    # ===============================
    # SCENARIOS
    # ===============================

    def load_config(self, path: str | Path) -> RigConfig:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ImageIOError(f"Could not read rig config {path}: {e}")

        try:
            return DataclassSerializer.deserialize(text, RigConfig, strict=True)
        except (ValueError, dacite.DaciteError) as e:
            raise ParameterError(f"Invalid rig config {path}: {e}")

    def build_rig(self, config: RigConfig, base_dir: str | Path = ".") -> RigSimulator:
        scene_path = Path(config.scene)
        if not scene_path.is_absolute():
            scene_path = Path(base_dir) / scene_path

        rig = RigSimulator.rig_new(
            scene=self.files.load_image(scene_path),
            true_center=SubpixelPoint(x=config.true_center_x, y=config.true_center_y),
            frame_width=config.frame_w,
            frame_height=config.frame_h,
            jitter=JitterModel(axis_sigma=config.jitter_sigma, seed=config.seed),
        )
        self.logger.info(
            f"Built rig {config.frame_w}x{config.frame_h} from {scene_path}, "
            f"jitter {config.jitter_sigma}"
        )
        return rig

    def load_rig(self, path: str | Path) -> RigSimulator:
        path = Path(path)
        return self.build_rig(self.load_config(path), base_dir=path.parent)

    def dump_frame(self, rig: RigSimulator, path: str | Path) -> Path:
        return self.files.save_image(rig.capture(), path)

    # ===============================
    # DOT TRACKING
    # ===============================

    @staticmethod
    def localize_dot(frame: GrayImage) -> SubpixelPoint:
        """
        Intensity-weighted centroid of the largest dark blob.

        Pixels below the threshold seed the blob; the blob is grown by a few
        pixels so its soft rim weighs in symmetrically.
        """
        dark = frame.mask & (frame.data < AppConfig.DOT_THRESHOLD)
        labels, count = ndimage.label(dark)
        if count == 0:
            raise DotNotFoundError("No dark object below the detection threshold")

        sizes = ndimage.sum_labels(dark, labels, index=np.arange(1, count + 1))
        blob = labels == int(np.argmax(sizes)) + 1
        region = ndimage.binary_dilation(blob, iterations=AppConfig.DOT_MARGIN) & frame.mask

        weights = np.where(region, 1.0 - frame.data, 0.0)
        total = weights.sum()
        ys, xs = np.mgrid[0 : frame.height, 0 : frame.width]
        return SubpixelPoint(
            x=float((weights * xs).sum() / total),
            y=float((weights * ys).sum() / total),
        )

    def track_dot_error(
        self, rig: RigSimulator, candidate: SubpixelPoint, angles: Iterable[float]
    ) -> DotTrack:
        """
        Park the dot on candidate at angle 0, then report how far it strays
        from candidate at every platform angle.
        """
        angles = list(angles)
        if not angles:
            raise ParameterError("At least one angle is required")

        rig.set_angle(0.0)
        start = self.localize_dot(rig.capture())
        rig.translate(candidate.x - start.x, candidate.y - start.y)

        positions = []
        for angle in angles:
            rig.set_angle(angle)
            positions.append(self.localize_dot(rig.capture()))
        rig.set_angle(0.0)

        track = DotTrack(
            candidate=candidate,
            angles=angles,
            positions=positions,
            displacements=[p.distance_to(candidate) for p in positions],
        )
        self.logger.info(
            f"Tracked dot around {candidate}: max displacement {track.max_displacement:.3f} px"
        )
        return track
