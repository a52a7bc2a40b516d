import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from scipy import ndimage
from skimage.filters import threshold_otsu

from libs.config.app_config import AppConfig
from libs.log.base_logger import ILogger
from libs.log.file_logger import FileLogger
from modules.center_estimation.models import CenterEstimate, EdgeVoters
from modules.enums.enums import EstimationMethod
from modules.exceptions.exceptions import EstimationError, ParameterError
from modules.imaging.models import GrayImage, PixelRect, SubpixelPoint
from modules.rings.services import RingTransformService


class DegenerateImageError(EstimationError):
    def __init__(self, message, message_markup=None, *args, **kwargs) -> None:
        super().__init__(message, message_markup=message_markup, *args, **kwargs)


class BaselineEstimationService:
    """
    Image-only center estimators used for comparison with the tangency protocol:
    blur-extent linearity (hong) and a circular Hough vote on Laplacian edges (hough).
    """

    def __init__(
        self,
        rings: RingTransformService | None = None,
        max_workers: int = AppConfig.MAX_WORKERS,
        logger: ILogger = FileLogger("BaselineEstimationService"),
    ):
        self.rings = rings or RingTransformService()
        self.max_workers = max_workers
        self.logger = logger

    def _scan(self, score_fn, candidates: PixelRect) -> list[Optional[float]]:
        points = candidates.candidates()
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(lambda p: score_fn(*p), points))

    @staticmethod
    def _check_candidates(img: GrayImage, candidates: PixelRect) -> None:
        if not candidates.inside(img.width, img.height):
            raise ParameterError(f"Candidate region {candidates} leaves the image")

    # ===============================
    # HONG: BLUR EXTENT VS RADIUS
    # ===============================

    @staticmethod
    def derivative_autocorrelation(values: np.ndarray) -> Optional[np.ndarray]:
        """Normalised cyclic autocorrelation of the first difference; None if it is constant."""
        g = np.roll(values, -1) - values
        g = g - g.mean()
        power = np.abs(np.fft.rfft(g)) ** 2
        ac = np.fft.irfft(power, values.size)
        if ac[0] <= 1e-15:
            return None
        return ac / ac[0]

    @staticmethod
    def blur_extent(rho: np.ndarray, expected: float) -> Optional[tuple[float, float]]:
        """
        Lag of the negative autocorrelation lobe near the expected extent,
        refined by a parabola through its neighbours. Returns (extent, lobe value),
        or None when the window minimum sits on the window edge or is not negative.
        """
        n = rho.size
        lo = max(1, math.floor(0.5 * expected))
        hi = min(n // 2, math.ceil(1.5 * expected) + 1)
        if hi - lo < 2:
            return None

        window = rho[lo : hi + 1]
        lag = lo + int(np.argmin(window))
        left, mid, right = rho[lag - 1], rho[lag], rho[(lag + 1) % n]
        if lag in (lo, hi) or mid >= 0:
            return None

        curvature = left - 2 * mid + right
        shift = 0.5 * (left - right) / curvature if curvature > 0 else 0.0
        return lag + float(np.clip(shift, -0.5, 0.5)), float(mid)

    def _hong_score(
        self, blurred: GrayImage, x: int, y: int, blur_angle: float
    ) -> tuple[Optional[float], float, int]:
        """
        (fit residual, mean lobe value, textured rings) for one candidate. The
        residual is None when fewer than three rings, or fewer than half of the
        textured ones, show a measurable lobe.
        """
        center = SubpixelPoint(x=x, y=y)
        r_max = self.rings.inscribed_radius(center, blurred.width, blurred.height)
        if r_max < 1:
            return None, 0.0, 0

        stack = self.rings.decompose_rings(blurred, center, r_max)
        radii, extents, depths = [], [], []
        textured = 0

        for ring in stack.rings:
            expected = self.rings.ring_kernel_length(ring.radius, blur_angle, ring.sample_count)
            if expected < AppConfig.HONG_MIN_EXTENT or not ring.fully_valid:
                continue

            rho = self.derivative_autocorrelation(ring.values)
            if rho is None:
                continue
            textured += 1

            lobe = self.blur_extent(rho, expected)
            if lobe is None:
                continue
            radii.append(ring.radius)
            extents.append(lobe[0])
            depths.append(lobe[1])

        if len(radii) < max(AppConfig.HONG_MIN_RINGS, math.ceil(textured / 2)):
            return None, 0.0, textured

        radii = np.asarray(radii, dtype=np.float64)
        extents = np.asarray(extents)
        slope, intercept = np.polyfit(radii, extents, 1)
        fit_rms = float(np.sqrt(np.mean((extents - (slope * radii + intercept)) ** 2)))
        return fit_rms, float(np.mean(depths)), textured

    def estimate_center_hong(
        self, blurred: GrayImage, candidates: PixelRect, blur_angle: float
    ) -> CenterEstimate:
        """
        Candidate whose ring blur extents grow most linearly with radius.

        Per ring the extent is the lag of the negative lobe in the derivative
        autocorrelation. The score is the RMS residual of the least-squares line
        through (radius, extent); lowest wins. Equal residuals go to the deeper
        mean lobe, then to the smallest (y, x).
        """
        self._check_candidates(blurred, candidates)
        if not (0 < blur_angle < AppConfig.FULL_TURN):
            raise ParameterError(f"Blur angle must be in (0, 2π), got {blur_angle}")

        results = self._scan(
            lambda x, y: self._hong_score(blurred, x, y, blur_angle), candidates
        )
        if sum(textured for _, _, textured in results) == 0:
            raise DegenerateImageError("Every ring is constant: no blur extent can be measured")

        best, best_key = None, (math.inf, math.inf)
        for (x, y), (score, depth, _) in zip(candidates.candidates(), results):
            if score is not None and (score, depth) < best_key:
                best, best_key = (x, y), (score, depth)

        if best is None:
            raise DegenerateImageError("Too few rings with a measurable blur extent")

        estimate = CenterEstimate(
            center=SubpixelPoint(x=best[0], y=best[1]),
            method=EstimationMethod.HONG,
            score=best_key[0],
        )
        self.logger.info(f"Hong estimate {estimate.center} (fit residual {best_key[0]:.4f})")
        return estimate

    # ===============================
    # HOUGH: LAPLACIAN EDGE VOTES
    # ===============================

    @staticmethod
    def edge_map(blurred: GrayImage) -> np.ndarray:
        """Otsu-binarised absolute Laplacian; the raster border and invalid pixels never vote."""
        usable = ndimage.binary_erosion(blurred.mask, iterations=1, border_value=0)
        response = np.abs(ndimage.laplace(blurred.data))
        values = response[usable]

        if values.size == 0 or np.ptp(values) <= 1e-12:
            raise EstimationError("Laplacian response is empty: nothing to vote with")

        edges = usable & (response > threshold_otsu(values))
        if not edges.any():
            raise EstimationError("Binary edge image is empty")
        return edges

    @staticmethod
    def _hough_score(edges: EdgeVoters, x: int, y: int, r_max: int) -> float:
        dx = edges.x - x
        dy = edges.y - y
        r = np.hypot(dx, dy)
        voting = (r >= AppConfig.HOUGH_MIN_RADIUS) & (r <= r_max)
        energy = edges.energy[voting].sum()
        if energy <= 0:
            return 0.0

        normal = (edges.gx[voting] * dx[voting] + edges.gy[voting] * dy[voting]) / r[voting]
        return float((normal**2).sum() / energy)

    def estimate_center_hough(self, blurred: GrayImage, candidates: PixelRect) -> CenterEstimate:
        """
        Concentric-circle vote. Each edge pixel votes for the circle about the
        candidate that passes through it, weighted by the squared component of
        its Sobel gradient along that circle's normal. Votes over radii
        HOUGH_MIN_RADIUS..R_max are summed and divided by the gradient energy of
        the voting pixels, so the score is the share of edge gradient that points
        radially. R_max is the inscribed radius of the candidate region's middle.
        Highest score wins, ties to the smallest (y, x).
        """
        self._check_candidates(blurred, candidates)
        edges = EdgeVoters.from_image(blurred, self.edge_map(blurred))

        middle = SubpixelPoint(x=candidates.x.middle, y=candidates.y.middle)
        r_max = self.rings.inscribed_radius(middle, blurred.width, blurred.height)
        if r_max < AppConfig.HOUGH_MIN_RADIUS:
            raise ParameterError(f"Candidate region {candidates} is too close to the border")

        scores = self._scan(lambda x, y: self._hough_score(edges, x, y, r_max), candidates)

        best, best_score = None, -math.inf
        for point, score in zip(candidates.candidates(), scores):
            if score > best_score:
                best, best_score = point, score

        estimate = CenterEstimate(
            center=SubpixelPoint(x=best[0], y=best[1]),
            method=EstimationMethod.HOUGH,
            score=best_score,
        )
        self.logger.info(
            f"Hough estimate {estimate.center} from {edges.x.size} edge pixels "
            f"(radial share {best_score:.3f})"
        )
        return estimate
