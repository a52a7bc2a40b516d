from typing import Optional

import numpy as np
from pydantic import model_validator
from scipy import ndimage

from modules.base.models import BaseDomainModel
from modules.enums.enums import Axis, EstimationMethod
from modules.imaging.models import GrayImage, SubpixelPoint


class ObjectEdges(BaseDomainModel):
    """Subpixel 0.5-level edges of the dark calibration object in one frame."""

    top: float
    bottom: float
    left: float
    right: float
    centroid: SubpixelPoint


class TangencyReading(BaseDomainModel):
    """
    residual is the signed gap between the half-turned object's edge and the
    far box edge: twice the true coordinate minus the candidate's.
    """

    axis: Axis
    tangent_at_zero: bool
    edge_at_zero: float
    edge_at_half_turn: Optional[float] = None
    residual: Optional[float] = None

    @model_validator(mode="after")
    def _residual_needs_tangency(self) -> "TangencyReading":
        if self.tangent_at_zero != (self.residual is not None):
            raise ValueError("A residual is defined exactly when the object was tangent at 0")
        return self


class CandidateReading(BaseDomainModel):
    coordinate: int
    residual: float
    accepted: bool


class AxisScan(BaseDomainModel):
    """Per-candidate readings of one identification round along one axis."""

    axis: Axis
    readings: list[CandidateReading]
    selected: Optional[int] = None
    rounds: int = 1

    @property
    def accepted(self) -> list[CandidateReading]:
        return [r for r in self.readings if r.accepted]

    def reading_for(self, coordinate: int) -> Optional[CandidateReading]:
        return next((r for r in self.readings if r.coordinate == coordinate), None)


class CenterEstimate(BaseDomainModel):
    center: SubpixelPoint
    method: EstimationMethod
    score: Optional[float] = None
    scans: list[AxisScan] = []
    per_axis_error: Optional[tuple[float, float]] = None

    def with_truth(self, truth: SubpixelPoint) -> "CenterEstimate":
        """Attach the signed (x, y) error estimate − truth."""
        return self.model_copy(
            update={"per_axis_error": (self.center.x - truth.x, self.center.y - truth.y)}
        )

    @property
    def max_axis_error(self) -> Optional[float]:
        if self.per_axis_error is None:
            return None
        return max(abs(e) for e in self.per_axis_error)

    def __str__(self) -> str:
        return f"{self.method.value} → {self.center}"


class EdgeVoters(BaseDomainModel):
    """Edge pixel positions with the Sobel gradient at each of them."""

    x: np.ndarray
    y: np.ndarray
    gx: np.ndarray
    gy: np.ndarray

    @classmethod
    def from_image(cls, img: GrayImage, edges: np.ndarray) -> "EdgeVoters":
        gx = ndimage.sobel(img.data, axis=1)
        gy = ndimage.sobel(img.data, axis=0)
        ys, xs = np.nonzero(edges)
        return cls(x=xs.astype(np.float64), y=ys.astype(np.float64), gx=gx[edges], gy=gy[edges])

    @property
    def energy(self) -> np.ndarray:
        return self.gx**2 + self.gy**2
