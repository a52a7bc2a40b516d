import math
from typing import Optional

from pydantic import Field, NonNegativeFloat

from modules.base.models import BaseDomainModel
from modules.imaging.models import SubpixelPoint


class BlurSpec(BaseDomainModel):
    """
    Rotary blur parameters: the camera sweeps blur_angle radians about center
    during one exposure, at constant angular speed.

    angular_samples discretises the exposure; None picks the count that keeps
    the arc step at the outermost pixel below half a pixel.
    """

    center: SubpixelPoint
    blur_angle: float = Field(gt=0.0, lt=2 * math.pi)
    angular_samples: Optional[int] = Field(default=None, ge=2)
    noise_sigma: NonNegativeFloat = 0.0
