import math
from typing import Optional

import numpy as np
from scipy.ndimage import map_coordinates

from libs.log.base_logger import ILogger
from libs.log.file_logger import FileLogger
from modules.exceptions.exceptions import ParameterError
from modules.imaging.models import GrayImage, SubpixelPoint

# Coordinates this close to the raster border count as inside
EDGE_EPS = 1e-6


class ImageShapeError(ParameterError):
    def __init__(self, message, message_markup=None, *args, **kwargs) -> None:
        super().__init__(message, message_markup=message_markup, *args, **kwargs)


class ImagingService:
    """Subpixel sampling, rigid warps and quality metrics shared by every module."""

    def __init__(self, logger: ILogger = FileLogger("ImagingService")):
        self.logger = logger

    # ===============================
    # SAMPLING
    # ===============================

    @staticmethod
    def pixel_grid(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
        """(xs, ys) coordinate arrays of shape (height, width)."""
        ys, xs = np.mgrid[0:height, 0:width]
        return xs.astype(np.float64), ys.astype(np.float64)

    @staticmethod
    def sample_bilinear_many(
        img: GrayImage, xs: np.ndarray, ys: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """
        Bilinear samples at (xs, ys) and their validity.

        A sample is invalid when its support leaves the raster or touches an
        invalid source pixel; invalid samples read 0.
        """
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        h, w = img.shape

        inside = (
            (xs >= -EDGE_EPS)
            & (xs <= w - 1 + EDGE_EPS)
            & (ys >= -EDGE_EPS)
            & (ys <= h - 1 + EDGE_EPS)
        )
        coords = np.vstack(
            [np.clip(ys, 0, h - 1).ravel(), np.clip(xs, 0, w - 1).ravel()]
        )
        coords = np.nan_to_num(coords)

        values = map_coordinates(img.data, coords, order=1, mode="nearest")
        values = values.reshape(xs.shape)
        valid = inside

        if img.valid_mask is not None:
            support = map_coordinates(
                img.valid_mask.astype(np.float64), coords, order=1, mode="nearest"
            ).reshape(xs.shape)
            valid = valid & (support >= 1.0 - 1e-9)

        values = np.where(valid, values, 0.0)
        return values, valid

    def sample_bilinear(self, img: GrayImage, p: SubpixelPoint) -> Optional[float]:
        """Bilinear value at p, or None when any neighbour lies outside the raster."""
        values, valid = self.sample_bilinear_many(
            img, np.array([p.x]), np.array([p.y])
        )
        if not valid[0]:
            return None
        return float(values[0])

    # ===============================
    # WARPS
    # ===============================

    @staticmethod
    def rotation_source(
        center: SubpixelPoint, angle: float, xs: np.ndarray, ys: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Source coordinates R(-angle)(q - center) + center of output pixels q."""
        c, s = math.cos(angle), math.sin(angle)
        dx = xs - center.x
        dy = ys - center.y
        return c * dx + s * dy + center.x, -s * dx + c * dy + center.y

    def rotate_about(
        self, img: GrayImage, center: SubpixelPoint, angle: float
    ) -> GrayImage:
        if not math.isfinite(angle):
            raise ParameterError(f"Rotation angle must be finite, got {angle}")

        xs, ys = self.pixel_grid(img.width, img.height)
        sx, sy = self.rotation_source(center, angle, xs, ys)
        values, valid = self.sample_bilinear_many(img, sx, sy)
        return GrayImage(data=values, valid_mask=valid)

    # ===============================
    # METRICS
    # ===============================

    @staticmethod
    def _region(
        a: GrayImage, b: GrayImage, mask: Optional[np.ndarray]
    ) -> np.ndarray:
        if a.shape != b.shape:
            raise ImageShapeError(f"Image shapes differ: {a.shape} vs {b.shape}")

        region = a.mask & b.mask
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != a.shape:
                raise ImageShapeError(
                    f"Mask shape {mask.shape} does not match images {a.shape}"
                )
            region = region & mask

        if not region.any():
            raise ParameterError("Metric region is empty")
        return region

    def mse(
        self, a: GrayImage, b: GrayImage, mask: Optional[np.ndarray] = None
    ) -> float:
        region = self._region(a, b, mask)
        diff = a.data[region] - b.data[region]
        return float(np.mean(diff * diff))

    def psnr(
        self, a: GrayImage, b: GrayImage, mask: Optional[np.ndarray] = None
    ) -> float:
        """10·log10(1/MSE) in dB over the masked, mutually valid pixels; inf when identical."""
        mse = self.mse(a, b, mask)
        if mse == 0.0:
            return math.inf
        return 10.0 * math.log10(1.0 / mse)

    def mean_abs_error(
        self, a: GrayImage, b: GrayImage, mask: Optional[np.ndarray] = None
    ) -> float:
        region = self._region(a, b, mask)
        return float(np.mean(np.abs(a.data[region] - b.data[region])))

    @staticmethod
    def disc_mask(
        width: int,
        height: int,
        center: SubpixelPoint,
        r_max: float,
        r_min: float = 0.0,
    ) -> np.ndarray:
        """Pixels whose distance to center lies in [r_min, r_max]."""
        xs, ys = ImagingService.pixel_grid(width, height)
        r = np.hypot(xs - center.x, ys - center.y)
        return (r >= r_min) & (r <= r_max)
