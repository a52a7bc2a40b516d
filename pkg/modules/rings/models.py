from typing import Any

import numpy as np
from pydantic import Field, model_validator

from libs.config.app_config import AppConfig
from modules.base.models import BaseDomainModel
from modules.imaging.models import SubpixelPoint


class RingSequence(BaseDomainModel):
    """Cyclic samples of an image along the circle of integer radius about a center."""

    radius: int = Field(ge=1)
    values: np.ndarray
    valid: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _coerce_arrays(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data

        values = np.array(data.get("values"), dtype=np.float64, copy=True).ravel()
        valid = data.get("valid")
        valid = (
            np.ones(values.shape, dtype=bool)
            if valid is None
            else np.array(valid, dtype=bool, copy=True).ravel()
        )

        if values.size < AppConfig.MIN_RING_SAMPLES:
            raise ValueError(
                f"A ring needs at least {AppConfig.MIN_RING_SAMPLES} samples, got {values.size}"
            )
        if valid.shape != values.shape:
            raise ValueError("values and valid must have the same length")

        values.setflags(write=False)
        valid.setflags(write=False)
        return {**data, "values": values, "valid": valid}

    @property
    def sample_count(self) -> int:
        return int(self.values.size)

    @property
    def fully_valid(self) -> bool:
        return bool(self.valid.all())

    def at(self, index: int) -> float:
        return float(self.values[index % self.sample_count])

    def with_values(self, values: np.ndarray) -> "RingSequence":
        return RingSequence(radius=self.radius, values=values, valid=self.valid)

    def mean(self) -> float:
        return float(self.values[self.valid].mean()) if self.valid.any() else 0.0


class RingStack(BaseDomainModel):
    """Polar decomposition: rings 1..r_max plus the single sample at radius 0."""

    center: SubpixelPoint
    rings: list[RingSequence]
    center_value: float = Field(ge=0.0, le=1.0)
    center_valid: bool = True

    @model_validator(mode="after")
    def _check_radii(self) -> "RingStack":
        if not self.rings:
            raise ValueError("A ring stack needs at least one ring")

        radii = [ring.radius for ring in self.rings]
        if radii != list(range(1, len(radii) + 1)):
            raise ValueError("Ring radii must be 1, 2, ..., r_max")
        return self

    @property
    def r_max(self) -> int:
        return len(self.rings)

    def ring(self, radius: int) -> RingSequence:
        return self.rings[radius - 1]

    def with_rings(self, rings: list[RingSequence]) -> "RingStack":
        return RingStack(
            center=self.center,
            rings=rings,
            center_value=self.center_value,
            center_valid=self.center_valid,
        )

    def packed(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Flat (values, valid, offsets, sizes) with radius 0 as a one-sample ring.

        Sample k of ring r lives at offsets[r] + k.
        """
        sizes = np.array([1] + [ring.sample_count for ring in self.rings])
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        values = np.concatenate([[self.center_value]] + [ring.values for ring in self.rings])
        valid = np.concatenate([[self.center_valid]] + [ring.valid for ring in self.rings])
        return values, valid, offsets, sizes
