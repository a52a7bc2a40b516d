from typing import Any

import numpy as np
from pydantic import ConfigDict, Field, NonNegativeFloat, PositiveFloat, model_validator

from libs.config.app_config import AppConfig
from modules.base.models import BaseDomainModel
from modules.enums.enums import DeblurMethod


class CyclicKernel(BaseDomainModel):
    """
    Nonnegative blur kernel on a ring of ring_size samples. taps[j] weighs the
    sample j steps behind, so the blur trails the signal in increasing angle.
    delay moves the whole kernel a fraction of a sample further behind.
    """

    length: PositiveFloat
    ring_size: int = Field(ge=1)
    taps: np.ndarray
    delay: float = Field(default=0.0, ge=0.0, lt=1.0)

    @model_validator(mode="before")
    @classmethod
    def _coerce_taps(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data

        taps = np.array(data.get("taps"), dtype=np.float64, copy=True).ravel()
        if taps.size == 0 or taps.size > int(data.get("ring_size", 0)):
            raise ValueError(f"Kernel needs 1..ring_size taps, got {taps.size}")
        if (taps < 0).any():
            raise ValueError("Kernel taps must be nonnegative")
        if abs(taps.sum() - 1.0) > 1e-9:
            raise ValueError(f"Kernel taps must sum to 1, got {taps.sum()}")

        taps.setflags(write=False)
        return {**data, "taps": taps}

    def padded(self) -> np.ndarray:
        """Taps laid out on the full ring."""
        full = np.zeros(self.ring_size)
        full[: self.taps.size] = self.taps
        return full

    def centroid(self) -> float:
        """Mean lag in samples, delay included."""
        return float(np.arange(self.taps.size) @ self.taps) + self.delay

    @property
    def is_identity(self) -> bool:
        return self.taps.size == 1 and self.delay == 0.0


class DeblurConfig(BaseDomainModel):
    model_config = ConfigDict(populate_by_name=True)

    method: DeblurMethod = DeblurMethod.SDP
    nsr: NonNegativeFloat = AppConfig.DEFAULT_NSR
    freq_threshold: PositiveFloat = AppConfig.DEFAULT_FREQ_THRESHOLD
    lam: NonNegativeFloat = Field(default=AppConfig.DEFAULT_LAMBDA, alias="lambda")

    def describe(self) -> str:
        match self.method:
            case DeblurMethod.WIENER:
                return f"wiener(nsr={self.nsr:g})"
            case DeblurMethod.MWIENER:
                return f"mwiener(threshold={self.freq_threshold:g})"
            case DeblurMethod.SDP:
                return f"sdp(lambda={self.lam:g})"
