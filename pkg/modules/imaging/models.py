import math
from typing import Any, Optional

import numpy as np
from pydantic import FiniteFloat, PositiveFloat, model_validator

from modules.base.models import BaseDomainModel
from modules.enums.enums import Axis

# Slack for values produced by floating point averaging before they are clamped
RANGE_TOLERANCE = 1e-6


class GrayImage(BaseDomainModel):
    """
    Luminance raster in [0, 1], stored row-major as a (height, width) array.

    valid_mask is False where a warp sampled outside its source; None means
    every pixel is valid.
    """

    data: np.ndarray
    valid_mask: Optional[np.ndarray] = None

    @model_validator(mode="before")
    @classmethod
    def _coerce_arrays(cls, values: Any) -> Any:
        if not isinstance(values, dict):
            return values

        data = np.array(values.get("data"), dtype=np.float64, copy=True)
        if data.ndim != 2 or data.size == 0:
            raise ValueError(f"Image data must be a non-empty 2D array, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("Image data contains non-finite values")
        if data.min() < -RANGE_TOLERANCE or data.max() > 1 + RANGE_TOLERANCE:
            raise ValueError(
                f"Luminance out of [0, 1]: [{data.min():.6f}, {data.max():.6f}]"
            )
        np.clip(data, 0.0, 1.0, out=data)
        data.setflags(write=False)

        mask = values.get("valid_mask")
        if mask is not None:
            mask = np.array(mask, dtype=bool, copy=True)
            if mask.shape != data.shape:
                raise ValueError(
                    f"valid_mask shape {mask.shape} does not match data {data.shape}"
                )
            mask.setflags(write=False)

        return {"data": data, "valid_mask": mask}

    @classmethod
    def from_array(
        cls, data: np.ndarray, valid_mask: Optional[np.ndarray] = None
    ) -> "GrayImage":
        return cls(data=data, valid_mask=valid_mask)

    @classmethod
    def constant(cls, width: int, height: int, value: float) -> "GrayImage":
        return cls(data=np.full((height, width), value, dtype=np.float64))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def mask(self) -> np.ndarray:
        """valid_mask, materialised as an all-True array when absent."""
        if self.valid_mask is None:
            return np.ones(self.data.shape, dtype=bool)
        return self.valid_mask

    @property
    def fully_valid(self) -> bool:
        return self.valid_mask is None or bool(self.valid_mask.all())

    def value_at(self, x: int, y: int) -> float:
        return float(self.data[y, x])

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height}, fully_valid={self.fully_valid})"


class SubpixelPoint(BaseDomainModel):
    """Continuous pixel coordinate: x grows rightward, y grows downward."""

    x: FiniteFloat
    y: FiniteFloat

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)

    def shifted(self, dx: float = 0.0, dy: float = 0.0) -> "SubpixelPoint":
        return SubpixelPoint(x=self.x + dx, y=self.y + dy)

    def distance_to(self, other: "SubpixelPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def coordinate(self, axis: Axis) -> float:
        return self.x if axis is Axis.X else self.y

    def __str__(self) -> str:
        return f"({self.x:.3f}, {self.y:.3f})"


class ReferenceBox(BaseDomainModel):
    """Box drawn around a candidate rotation center; its edges are the tangency lines."""

    center: SubpixelPoint
    half_width: PositiveFloat
    half_height: PositiveFloat

    @property
    def top(self) -> float:
        return self.center.y - self.half_height

    @property
    def bottom(self) -> float:
        return self.center.y + self.half_height

    @property
    def left(self) -> float:
        return self.center.x - self.half_width

    @property
    def right(self) -> float:
        return self.center.x + self.half_width

    def near_edge(self, axis: Axis) -> float:
        """Edge the object touches before rotation (top for y, left for x)."""
        return self.top if axis is Axis.Y else self.left

    def far_edge(self, axis: Axis) -> float:
        """Edge the rotated object must touch (bottom for y, right for x)."""
        return self.bottom if axis is Axis.Y else self.right


class IntRange(BaseDomainModel):
    """Inclusive integer interval."""

    start: int
    stop: int

    @model_validator(mode="after")
    def _check_order(self) -> "IntRange":
        if self.stop < self.start:
            raise ValueError(f"Empty range [{self.start}, {self.stop}]")
        return self

    def as_range(self) -> range:
        return range(self.start, self.stop + 1)

    @property
    def size(self) -> int:
        return self.stop - self.start + 1

    @property
    def middle(self) -> int:
        return (self.start + self.stop) // 2

    def contains(self, value: float) -> bool:
        return self.start <= value <= self.stop


class PixelRect(BaseDomainModel):
    """Inclusive integer rectangle, used for candidate regions and flat regions."""

    x: IntRange
    y: IntRange

    @classmethod
    def from_bounds(cls, x_min: int, x_max: int, y_min: int, y_max: int) -> "PixelRect":
        return cls(x=IntRange(start=x_min, stop=x_max), y=IntRange(start=y_min, stop=y_max))

    @classmethod
    def around(cls, x: int, y: int, half_size: int) -> "PixelRect":
        return cls.from_bounds(x - half_size, x + half_size, y - half_size, y + half_size)

    def candidates(self) -> list[tuple[int, int]]:
        """Candidate (x, y) pairs ordered by y, then x."""
        return [(x, y) for y in self.y.as_range() for x in self.x.as_range()]

    def contains(self, point: SubpixelPoint) -> bool:
        return self.x.contains(point.x) and self.y.contains(point.y)

    def inside(self, width: int, height: int) -> bool:
        return (
            self.x.start >= 0
            and self.y.start >= 0
            and self.x.stop < width
            and self.y.stop < height
        )

    def slices(self) -> tuple[slice, slice]:
        return slice(self.y.start, self.y.stop + 1), slice(self.x.start, self.x.stop + 1)

    def range_for(self, axis: Axis) -> IntRange:
        return self.x if axis is Axis.X else self.y

    def __str__(self) -> str:
        return f"[{self.x.start}..{self.x.stop}] x [{self.y.start}..{self.y.stop}]"
