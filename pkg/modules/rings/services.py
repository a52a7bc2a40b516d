import csv
import math
from pathlib import Path

import numpy as np

from libs.config.app_config import AppConfig
from libs.log.base_logger import ILogger
from libs.log.file_logger import FileLogger
from modules.exceptions.exceptions import ImageIOError, ParameterError
from modules.imaging.models import GrayImage, SubpixelPoint
from modules.imaging.services import ImagingService
from modules.rings.models import RingSequence, RingStack


class RingTransformService:
    """Polar ring decomposition about a center and its inverse."""

    def __init__(
        self,
        imaging: ImagingService | None = None,
        logger: ILogger = FileLogger("RingTransformService"),
    ):
        self.imaging = imaging or ImagingService()
        self.logger = logger

    # ===============================
    # GEOMETRY
    # ===============================

    @staticmethod
    def ring_sample_count(radius: int) -> int:
        return max(AppConfig.MIN_RING_SAMPLES, int(round(AppConfig.FULL_TURN * radius)))

    @staticmethod
    def ring_angles(sample_count: int) -> np.ndarray:
        return AppConfig.FULL_TURN * np.arange(sample_count) / sample_count

    @staticmethod
    def inscribed_radius(center: SubpixelPoint, width: int, height: int) -> int:
        """Largest integer radius whose circle stays inside the raster."""
        margin = min(center.x, center.y, width - 1 - center.x, height - 1 - center.y)
        return max(0, math.floor(margin))

    @staticmethod
    def ring_kernel_length(radius: float, blur_angle: float, sample_count: int) -> float:
        """Box support in ring samples: θ·N/(2π), about r·θ for N ≈ 2πr."""
        if radius <= 0 or blur_angle <= 0 or sample_count <= 0:
            raise ParameterError(
                f"Ring kernel needs positive inputs, got r={radius}, "
                f"angle={blur_angle}, N={sample_count}"
            )
        return blur_angle * sample_count / AppConfig.FULL_TURN

    @staticmethod
    def circular_box_convolve(values: np.ndarray, length: float) -> np.ndarray:
        """
        Direct cyclic convolution with the fractional box of support length:
        floor(length) taps of 1/length then one tap of frac(length)/length.
        """
        values = np.asarray(values, dtype=np.float64)
        n = values.size
        if not 0 < length <= n:
            raise ParameterError(f"Box length must be in (0, {n}], got {length}")

        whole = math.floor(length)
        out = np.zeros(n)
        for j in range(whole):
            out += np.roll(values, j)
        frac = length - whole
        if frac > 0:
            out += frac * np.roll(values, whole)
        return out / length

    # ===============================
    # TRANSFORMS
    # ===============================

    def decompose_rings(self, img: GrayImage, center: SubpixelPoint, r_max: int) -> RingStack:
        if r_max < 1:
            raise ParameterError(f"r_max must be at least 1, got {r_max}")

        counts = [self.ring_sample_count(r) for r in range(1, r_max + 1)]
        radii = np.repeat(np.arange(1, r_max + 1), counts)
        angles = np.concatenate([self.ring_angles(n) for n in counts])

        xs = center.x + radii * np.cos(angles)
        ys = center.y + radii * np.sin(angles)
        values, valid = self.imaging.sample_bilinear_many(img, xs, ys)

        bounds = np.cumsum(counts)[:-1]
        rings = [
            RingSequence(radius=r, values=v, valid=ok)
            for r, v, ok in zip(
                range(1, r_max + 1), np.split(values, bounds), np.split(valid, bounds)
            )
        ]

        center_value = self.imaging.sample_bilinear(img, center)
        self.logger.debug(f"Decomposed {r_max} rings about {center}")
        return RingStack(
            center=center,
            rings=rings,
            center_value=center_value if center_value is not None else 0.0,
            center_valid=center_value is not None,
        )

    def recompose(self, stack: RingStack, width: int, height: int) -> GrayImage:
        """
        Pull each output pixel from the stack: linear in radius between the two
        nearest rings, cyclic linear in angle within each ring.
        """
        values, valid, offsets, sizes = stack.packed()

        xs, ys = self.imaging.pixel_grid(width, height)
        dx = xs - stack.center.x
        dy = ys - stack.center.y
        r = np.hypot(dx, dy)
        phi = np.mod(np.arctan2(dy, dx), AppConfig.FULL_TURN)

        inside = r <= stack.r_max
        r_clamped = np.minimum(r, stack.r_max)
        r0 = np.minimum(np.floor(r_clamped).astype(int), stack.r_max)
        r1 = np.minimum(r0 + 1, stack.r_max)
        wr = r_clamped - r0

        def ring_pull(radius: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            n = sizes[radius]
            position = phi / AppConfig.FULL_TURN * n
            k0 = np.floor(position).astype(int) % n
            k1 = (k0 + 1) % n
            wk = position - np.floor(position)
            i0 = offsets[radius] + k0
            i1 = offsets[radius] + k1
            pulled = (1 - wk) * values[i0] + wk * values[i1]
            # A neighbour with zero weight does not invalidate the pixel
            ok = valid[i0] & (valid[i1] | (wk == 0.0))
            return pulled, ok

        v0, ok0 = ring_pull(r0)
        v1, ok1 = ring_pull(r1)
        data = (1 - wr) * v0 + wr * v1
        ok = inside & ok0 & (ok1 | (wr == 0.0))

        data = np.where(ok, np.clip(data, 0.0, 1.0), 0.0)
        self.logger.debug(f"Recomposed {width}x{height} from {stack.r_max} rings")
        return GrayImage(data=data, valid_mask=ok)

    # ===============================
    # DEBUG OUTPUT
    # ===============================

    def dump_csv(self, stack: RingStack, path: str | Path) -> Path:
        """One row per sample: radius, sample index, value, valid."""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="") as f:
                writer = csv.DictWriter(f, fieldnames=["radius", "sample", "value", "valid"])
                writer.writeheader()
                writer.writerow(
                    {"radius": 0, "sample": 0, "value": stack.center_value, "valid": stack.center_valid}
                )
                for ring in stack.rings:
                    for k, (value, ok) in enumerate(zip(ring.values, ring.valid)):
                        writer.writerow(
                            {"radius": ring.radius, "sample": k, "value": float(value), "valid": bool(ok)}
                        )
        except OSError as e:
            raise ImageIOError(f"Could not write ring dump {path}: {e}")

        self.logger.info(f"Dumped {stack.r_max} rings to {path}")
        return path
