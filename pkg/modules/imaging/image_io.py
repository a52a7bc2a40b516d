from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from libs.log.base_logger import ILogger
from libs.log.file_logger import FileLogger
from modules.exceptions.exceptions import ImageIOError, ParameterError
from modules.imaging.models import GrayImage

SUPPORTED_SUFFIXES = {".png": "PNG", ".pgm": "PPM"}
SIXTEEN_BIT_MODES = ("I", "I;16", "I;16B", "I;16L")


class ImageFileService:
    """PNG and binary PGM ingest/egress. Luminance is normalised to [0, 1] on read."""

    def __init__(self, logger: ILogger = FileLogger("ImageFileService")):
        self.logger = logger

    @staticmethod
    def _format_for(path: Path) -> str:
        image_format = SUPPORTED_SUFFIXES.get(path.suffix.lower())
        if image_format is None:
            raise ImageIOError(
                f"Unsupported image format '{path.suffix}' for {path}",
                message_markup=f"[red]Unsupported image format[/] [bold]{path.suffix}[/]",
            )
        return image_format

    @staticmethod
    def _to_luminance(image: Image.Image) -> np.ndarray:
        if image.mode in SIXTEEN_BIT_MODES:
            return np.asarray(image, dtype=np.float64) / 65535.0
        if image.mode == "F":
            return np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
        if image.mode == "L":
            return np.asarray(image, dtype=np.float64) / 255.0

        # Colour inputs are reduced by averaging channels
        rgb = np.asarray(image.convert("RGB"), dtype=np.float64) / 255.0
        return rgb.mean(axis=2)

    def load_image(self, path: str | Path) -> GrayImage:
        path = Path(path)
        self._format_for(path)

        if not path.exists():
            raise ImageIOError(f"Image not found: {path}")

        try:
            with Image.open(path) as image:
                image.load()
                data = self._to_luminance(image)
        except (UnidentifiedImageError, OSError) as e:
            raise ImageIOError(f"Could not read image {path}: {e}")

        self.logger.info(f"Loaded {path} ({data.shape[1]}x{data.shape[0]})")
        return GrayImage(data=np.clip(data, 0.0, 1.0))

    def save_image(self, img: GrayImage, path: str | Path, bit_depth: int = 8) -> Path:
        """Write img rounded to nearest; invalid pixels are written as 0."""
        path = Path(path)
        image_format = self._format_for(path)

        match bit_depth:
            case 8:
                levels = np.rint(np.where(img.mask, img.data, 0.0) * 255.0)
                image = Image.fromarray(levels.astype(np.uint8))
            case 16:
                levels = np.rint(np.where(img.mask, img.data, 0.0) * 65535.0)
                image = Image.fromarray(levels.astype(np.uint16))
            case _:
                raise ParameterError(f"Bit depth must be 8 or 16, got {bit_depth}")

        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            image.save(path, format=image_format)
        except OSError as e:
            raise ImageIOError(f"Could not write image {path}: {e}")

        self.logger.info(f"Saved {path} ({img.width}x{img.height}, {bit_depth}-bit)")
        return path
