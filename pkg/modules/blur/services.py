import math

import numpy as np

from libs.log.base_logger import ILogger
from libs.log.file_logger import FileLogger
from modules.blur.models import BlurSpec
from modules.exceptions.exceptions import ParameterError
from modules.imaging.models import GrayImage, SubpixelPoint
from modules.imaging.services import ImagingService


class BlurService:
    """Forward model: rotary motion blur and measurement noise."""

    def __init__(
        self,
        imaging: ImagingService | None = None,
        logger: ILogger = FileLogger("BlurService"),
    ):
        self.imaging = imaging or ImagingService()
        self.logger = logger

    @staticmethod
    def max_corner_distance(center: SubpixelPoint, width: int, height: int) -> float:
        return max(
            math.hypot(x - center.x, y - center.y)
            for x in (0, width - 1)
            for y in (0, height - 1)
        )

    @staticmethod
    def default_angular_samples(blur_angle: float, r_max: float) -> int:
        """ceil(2·θ·R_max) + 1: arc step at R_max no larger than 0.5 px."""
        return max(2, math.ceil(2 * blur_angle * r_max) + 1)

    def synthesize_rmb(self, sharp: GrayImage, spec: BlurSpec) -> GrayImage:
        """Average of sharp rotated about spec.center at k·θ/(n−1), k = 0..n−1."""
        n = spec.angular_samples or self.default_angular_samples(
            spec.blur_angle,
            self.max_corner_distance(spec.center, sharp.width, sharp.height),
        )

        xs, ys = self.imaging.pixel_grid(sharp.width, sharp.height)
        total = np.zeros(sharp.shape)
        valid = np.ones(sharp.shape, dtype=bool)

        for angle in np.linspace(0.0, spec.blur_angle, n):
            sx, sy = self.imaging.rotation_source(spec.center, float(angle), xs, ys)
            values, ok = self.imaging.sample_bilinear_many(sharp, sx, sy)
            total += values
            valid &= ok

        blurred = np.where(valid, total / n, 0.0)
        self.logger.info(
            f"Synthesised RMB about {spec.center}: angle={spec.blur_angle:.4f} rad, "
            f"samples={n}, valid={valid.mean():.1%}"
        )
        return GrayImage(data=blurred, valid_mask=valid)

    def add_gaussian_noise(self, img: GrayImage, sigma: float, seed: int) -> GrayImage:
        """White Gaussian noise of std sigma (full scale 1.0), clamped; valid pixels only."""
        if sigma < 0 or not math.isfinite(sigma):
            raise ParameterError(f"Noise sigma must be a finite value >= 0, got {sigma}")
        if sigma == 0:
            return img

        rng = np.random.default_rng(seed)
        noisy = img.data + rng.normal(0.0, sigma, img.shape)
        noisy = np.where(img.mask, np.clip(noisy, 0.0, 1.0), img.data)

        self.logger.debug(f"Added noise sigma={sigma} seed={seed}")
        return GrayImage(data=noisy, valid_mask=img.valid_mask)

    def blur_and_noise(self, sharp: GrayImage, spec: BlurSpec, seed: int) -> GrayImage:
        return self.add_gaussian_noise(
            self.synthesize_rmb(sharp, spec), spec.noise_sigma, seed
        )
