import math
from typing import Optional

import numpy as np

from libs.config.app_config import AppConfig
from libs.log.base_logger import ILogger
from libs.log.file_logger import FileLogger
from modules.deconvolution.models import CyclicKernel, DeblurConfig
from modules.enums.enums import DeblurMethod
from modules.exceptions.exceptions import ParameterError
from modules.imaging.models import GrayImage, SubpixelPoint
from modules.rings.models import RingSequence
from modules.rings.services import RingTransformService


class DeconvolutionService:
    """Cyclic 1D deconvolution of ring sequences and the ring-wise deblurring pipeline."""

    def __init__(
        self,
        rings: RingTransformService | None = None,
        logger: ILogger = FileLogger("DeconvolutionService"),
    ):
        self.rings = rings or RingTransformService()
        self.logger = logger

    # ===============================
    # KERNELS AND SPECTRA
    # ===============================

    @staticmethod
    def box_kernel(length: float, ring_size: int) -> CyclicKernel:
        """floor(length) taps of 1/length, then one tap of frac(length)/length."""
        if not (0 < length <= ring_size) or not math.isfinite(length):
            raise ParameterError(f"Box length must be in (0, {ring_size}], got {length}")

        whole = math.floor(length)
        frac = length - whole
        taps = [1.0 / length] * whole
        if frac > 1e-12:
            taps.append(frac / length)
        return CyclicKernel(length=length, ring_size=ring_size, taps=np.array(taps))

    @classmethod
    def sweep_kernel(cls, length: float, ring_size: int) -> CyclicKernel:
        """
        Box of the given length delayed so its centroid sits at length/2, the
        centroid of a continuous sweep over [0, length]. This is the kernel that
        rotary blur synthesis applies to each ring.
        """
        box = cls.box_kernel(length, ring_size)
        delay = length / 2 - box.centroid()
        return CyclicKernel(length=length, ring_size=ring_size, taps=box.taps, delay=delay)

    @staticmethod
    def kernel_spectrum(kernel: CyclicKernel) -> np.ndarray:
        n = kernel.ring_size
        spectrum = np.fft.rfft(kernel.padded())
        if kernel.delay:
            spectrum = spectrum * np.exp(-2j * np.pi * kernel.delay * np.arange(spectrum.size) / n)
        return spectrum

    @staticmethod
    def second_difference_spectrum(n: int) -> np.ndarray:
        """Spectrum of the cyclic second difference (1, -2, 1) centred on sample 0."""
        d = np.zeros(n)
        d[0] = -2.0
        d[1 % n] += 1.0
        d[-1] += 1.0
        return np.fft.rfft(d)

    @classmethod
    def convolve(cls, values: np.ndarray, kernel: CyclicKernel) -> np.ndarray:
        """Forward cyclic blur k ⊛ x."""
        n = kernel.ring_size
        return np.fft.irfft(np.fft.rfft(values, n) * cls.kernel_spectrum(kernel), n)

    def objective_value(
        self, x: np.ndarray, b: np.ndarray, kernel: CyclicKernel, lam: float
    ) -> float:
        """‖k⊛x − b‖² + λ‖d⊛x‖², evaluated in the sample domain."""
        residual = self.convolve(x, kernel) - b
        smoothness = np.roll(x, 1) - 2 * x + np.roll(x, -1)
        return float(residual @ residual + lam * smoothness @ smoothness)

    # ===============================
    # 1D SOLVERS
    # ===============================

    @staticmethod
    def _check_sizes(seq: RingSequence, kernel: CyclicKernel) -> None:
        if seq.sample_count != kernel.ring_size:
            raise ParameterError(
                f"Ring of {seq.sample_count} samples cannot use a kernel "
                f"for {kernel.ring_size} samples"
            )

    @staticmethod
    def _safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
        """numerator / denominator, 0 where the denominator vanishes."""
        out = np.zeros_like(numerator, dtype=np.complex128)
        nonzero = denominator != 0
        out[nonzero] = numerator[nonzero] / denominator[nonzero]
        return out

    def _filtered(self, seq: RingSequence, spectrum: np.ndarray) -> RingSequence:
        n = seq.sample_count
        restored = np.fft.irfft(spectrum, n)
        return seq.with_values(restored)

    def wiener_deconv(self, seq: RingSequence, kernel: CyclicKernel, nsr: float) -> RingSequence:
        """X = K*·B / (|K|² + nsr), nsr on every frequency."""
        self._check_sizes(seq, kernel)
        if nsr < 0:
            raise ParameterError(f"nsr must be >= 0, got {nsr}")

        k = self.kernel_spectrum(kernel)
        b = np.fft.rfft(seq.values)
        return self._filtered(seq, self._safe_divide(np.conj(k) * b, np.abs(k) ** 2 + nsr))

    def mwiener_deconv(
        self, seq: RingSequence, kernel: CyclicKernel, freq_threshold: float
    ) -> RingSequence:
        """Exact inversion where |K| >= freq_threshold; other frequencies pass through."""
        self._check_sizes(seq, kernel)
        if freq_threshold <= 0:
            raise ParameterError(f"freq_threshold must be > 0, got {freq_threshold}")

        k = self.kernel_spectrum(kernel)
        b = np.fft.rfft(seq.values)
        invertible = np.abs(k) >= freq_threshold
        x = b.astype(np.complex128)
        x[invertible] = b[invertible] / k[invertible]
        return self._filtered(seq, x)

    def sdp_deconv(self, seq: RingSequence, kernel: CyclicKernel, lam: float) -> RingSequence:
        """Minimiser of ‖k⊛x − b‖² + λ‖d⊛x‖² with d the cyclic second difference."""
        self._check_sizes(seq, kernel)
        if lam < 0:
            raise ParameterError(f"lambda must be >= 0, got {lam}")

        k = self.kernel_spectrum(kernel)
        d = self.second_difference_spectrum(seq.sample_count)
        b = np.fft.rfft(seq.values)
        return self._filtered(
            seq, self._safe_divide(np.conj(k) * b, np.abs(k) ** 2 + lam * np.abs(d) ** 2)
        )

    def deconvolve(
        self, seq: RingSequence, kernel: CyclicKernel, config: DeblurConfig
    ) -> RingSequence:
        match config.method:
            case DeblurMethod.WIENER:
                return self.wiener_deconv(seq, kernel, config.nsr)
            case DeblurMethod.MWIENER:
                return self.mwiener_deconv(seq, kernel, config.freq_threshold)
            case DeblurMethod.SDP:
                return self.sdp_deconv(seq, kernel, config.lam)

    # ===============================
    # PIPELINE
    # ===============================

    def deblur_rmd(
        self,
        blurred: GrayImage,
        center: SubpixelPoint,
        blur_angle: float,
        config: DeblurConfig,
        r_max: Optional[int] = None,
    ) -> GrayImage:
        """
        Non-blind rotary deblurring: rings about center, per-ring box
        deconvolution, recomposition. The center sample passes through.

        Rings with a kernel of at most one sample or with any invalid sample
        are kept as they are.
        """
        if not (0 < blur_angle < AppConfig.FULL_TURN):
            raise ParameterError(f"Blur angle must be in (0, 2π), got {blur_angle}")

        if r_max is None:
            r_max = self.rings.inscribed_radius(center, blurred.width, blurred.height)
        if r_max < 1:
            raise ParameterError(f"Center {center} leaves no ring inside the image")

        stack = self.rings.decompose_rings(blurred, center, r_max)

        restored = []
        skipped = 0
        for ring in stack.rings:
            length = self.rings.ring_kernel_length(ring.radius, blur_angle, ring.sample_count)
            if length <= 1.0 or not ring.fully_valid:
                restored.append(ring)
                skipped += 1
                continue

            kernel = self.sweep_kernel(length, ring.sample_count)
            restored.append(self.deconvolve(ring, kernel, config))

        result = self.rings.recompose(stack.with_rings(restored), blurred.width, blurred.height)
        self.logger.info(
            f"Deblurred about {center} with {config.describe()}: "
            f"{stack.r_max - skipped}/{stack.r_max} rings restored"
        )
        return result
