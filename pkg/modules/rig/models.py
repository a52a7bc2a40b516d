import math
from dataclasses import dataclass

from pydantic import Field, NonNegativeFloat

from modules.base.models import BaseDomainModel
from modules.imaging.models import GrayImage, SubpixelPoint


class JitterModel(BaseDomainModel):
    """Per-capture zero-mean wobble of the effective rotation center."""

    axis_sigma: NonNegativeFloat = 0.0
    seed: int = 0

    @property
    def enabled(self) -> bool:
        return self.axis_sigma > 0


class RigState(BaseDomainModel):
    """
    Pose of the simulated platform. true_center never changes for the
    lifetime of a rig; pose updates produce new states.
    """

    scene: GrayImage
    true_center: SubpixelPoint
    scene_offset: SubpixelPoint = SubpixelPoint(x=0.0, y=0.0)
    current_angle: float = 0.0
    jitter: JitterModel = JitterModel()
    frame_width: int = Field(gt=0)
    frame_height: int = Field(gt=0)

    @property
    def frame_diagonal(self) -> float:
        return math.hypot(self.frame_width, self.frame_height)

    @property
    def scene_origin(self) -> tuple[int, int]:
        """Scene pixel shown at frame pixel (0, 0) when the rig is at rest."""
        return (
            (self.scene.width - self.frame_width) // 2,
            (self.scene.height - self.frame_height) // 2,
        )


class DotTrack(BaseDomainModel):
    candidate: SubpixelPoint
    angles: list[float]
    positions: list[SubpixelPoint]
    displacements: list[float]

    @property
    def max_displacement(self) -> float:
        return max(self.displacements)


@dataclass
class RigConfig:
    """Rig scenario file; the scene path is relative to the file."""

    scene: str
    true_center_x: float
    true_center_y: float
    frame_w: int
    frame_h: int
    jitter_sigma: float
    seed: int
