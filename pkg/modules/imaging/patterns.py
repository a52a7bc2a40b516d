import math

import numpy as np

from modules.enums.enums import SceneKind
from modules.exceptions.exceptions import ParameterError
from modules.imaging.models import GrayImage, SubpixelPoint


def _grid(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[0:height, 0:width]
    return xs.astype(np.float64), ys.astype(np.float64)


class ScenePatterns:
    """Synthetic test scenes. All are generated in code and lie in [0, 1]."""

    @staticmethod
    def texture(width: int, height: int, seed: int = 0, waves: int = 6) -> GrayImage:
        """Band-limited texture: a sum of plane waves with 24 to 60 px wavelength."""
        rng = np.random.default_rng(seed)
        xs, ys = _grid(width, height)

        field = np.zeros((height, width))
        for _ in range(waves):
            wavelength = rng.uniform(24.0, 60.0)
            direction = rng.uniform(0.0, math.pi)
            phase = rng.uniform(0.0, 2 * math.pi)
            k = 2 * math.pi / wavelength
            field += np.cos(k * (xs * math.cos(direction) + ys * math.sin(direction)) + phase)

        field /= waves
        return GrayImage(data=0.5 + 0.4 * field)

    @staticmethod
    def radial(
        width: int, height: int, center: SubpixelPoint, period: float = 40.0
    ) -> GrayImage:
        """Function of the distance to center only."""
        xs, ys = _grid(width, height)
        r = np.hypot(xs - center.x, ys - center.y)
        return GrayImage(data=0.5 + 0.4 * np.cos(2 * math.pi * r / period))

    @staticmethod
    def blocks(width: int, height: int, seed: int = 0, cell: int = 16) -> GrayImage:
        """Piecewise constant cells; the flat interiors carry the ringing measurements."""
        rng = np.random.default_rng(seed)
        rows = math.ceil(height / cell)
        cols = math.ceil(width / cell)
        levels = rng.choice(np.linspace(0.15, 0.85, 8), size=(rows, cols))
        data = np.kron(levels, np.ones((cell, cell)))[:height, :width]
        return GrayImage(data=data)

    @staticmethod
    def speckle(
        width: int, height: int, seed: int = 0, density: float = 0.01, spot_sigma: float = 1.5
    ) -> GrayImage:
        """Light background scattered with small dark Gaussian spots."""
        rng = np.random.default_rng(seed)
        count = max(1, int(density * width * height))
        xs, ys = _grid(width, height)

        darkness = np.zeros((height, width))
        reach = int(math.ceil(4 * spot_sigma))
        for px, py, depth in zip(
            rng.uniform(0, width, count),
            rng.uniform(0, height, count),
            rng.uniform(0.4, 0.8, count),
        ):
            x0, x1 = max(0, int(px) - reach), min(width, int(px) + reach + 1)
            y0, y1 = max(0, int(py) - reach), min(height, int(py) + reach + 1)
            if x0 >= x1 or y0 >= y1:
                continue
            dx = xs[y0:y1, x0:x1] - px
            dy = ys[y0:y1, x0:x1] - py
            darkness[y0:y1, x0:x1] += depth * np.exp(-(dx * dx + dy * dy) / (2 * spot_sigma**2))

        return GrayImage(data=np.clip(0.9 - darkness, 0.0, 1.0))

    @staticmethod
    def tangency_object(
        width: int,
        height: int,
        center: SubpixelPoint,
        half_size: float = 8.0,
        ramp: float = 8.0,
    ) -> GrayImage:
        """
        Dark square on a white background with linear edge ramps.

        The 0.5 level sits exactly half_size from center along each axis, so
        bilinear resampling leaves the edge position unchanged.
        """
        xs, ys = _grid(width, height)
        excess = np.maximum(np.abs(xs - center.x), np.abs(ys - center.y)) - half_size
        return GrayImage(data=np.clip(0.5 + excess / ramp, 0.0, 1.0))

    @staticmethod
    def dot(
        width: int,
        height: int,
        center: SubpixelPoint,
        radius: float = 5.0,
        ramp: float = 3.0,
    ) -> GrayImage:
        xs, ys = _grid(width, height)
        r = np.hypot(xs - center.x, ys - center.y)
        return GrayImage(data=np.clip(0.5 + (r - radius) / ramp, 0.0, 1.0))

    @staticmethod
    def checkerboard(width: int, height: int, cell: int = 1) -> GrayImage:
        ys, xs = np.mgrid[0:height, 0:width]
        return GrayImage(data=((xs // cell + ys // cell) % 2).astype(np.float64))

    @staticmethod
    def impulse(width: int, height: int, x: int, y: int, background: float = 0.0) -> GrayImage:
        data = np.full((height, width), background)
        data[y, x] = 1.0
        return GrayImage(data=data)

    @classmethod
    def build(
        cls,
        kind: SceneKind,
        width: int,
        height: int,
        seed: int = 0,
        center: SubpixelPoint | None = None,
    ) -> GrayImage:
        if width <= 0 or height <= 0:
            raise ParameterError(f"Scene size must be positive, got {width}x{height}")

        center = center or SubpixelPoint(x=(width - 1) / 2, y=(height - 1) / 2)

        match kind:
            case SceneKind.TEXTURE:
                return cls.texture(width, height, seed)
            case SceneKind.BLOCKS:
                return cls.blocks(width, height, seed)
            case SceneKind.SPECKLE:
                return cls.speckle(width, height, seed)
            case SceneKind.RADIAL:
                return cls.radial(width, height, center)
            case SceneKind.TANGENCY:
                return cls.tangency_object(width, height, center)
            case SceneKind.DOT:
                return cls.dot(width, height, center)
