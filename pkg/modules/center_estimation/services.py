import math
from typing import Optional

import numpy as np
from scipy import ndimage

from libs.config.app_config import AppConfig
from libs.log.base_logger import ILogger
from libs.log.file_logger import FileLogger
from modules.center_estimation.models import (
    AxisScan,
    CandidateReading,
    CenterEstimate,
    ObjectEdges,
    TangencyReading,
)
from modules.enums.enums import Axis, EstimationMethod
from modules.exceptions.exceptions import ParameterError, ProtocolError
from modules.imaging.models import GrayImage, IntRange, PixelRect, ReferenceBox, SubpixelPoint
from modules.rig.services import RigSimulator


class ObjectNotFoundError(ProtocolError):
    def __init__(self, message, message_markup=None, *args, **kwargs) -> None:
        super().__init__(message, message_markup=message_markup, *args, **kwargs)


class NotTangentError(ProtocolError):
    def __init__(self, message, message_markup=None, *args, **kwargs) -> None:
        super().__init__(message, message_markup=message_markup, *args, **kwargs)


class NoCandidateAcceptedError(ProtocolError):
    def __init__(self, message, message_markup=None, *args, **kwargs) -> None:
        super().__init__(message, message_markup=message_markup, *args, **kwargs)


class GeometricIdentificationService:
    """
    Tangency protocol: draw a reference box on a candidate center, make the
    calibration object touch it, turn the platform half a revolution and check that
    the object touches the opposite edge.
    """

    def __init__(self, logger: ILogger = FileLogger("GeometricIdentificationService")):
        self.logger = logger

    # ===============================
    # EDGE LOCALISATION
    # ===============================

    @staticmethod
    def _crossing(frame: GrayImage, x: int, y: int, dx: int, dy: int) -> float:
        """Offset from (x, y) to the EDGE_LEVEL crossing when stepping by (dx, dy)."""
        nx, ny = x + dx, y + dy
        if not (0 <= nx < frame.width and 0 <= ny < frame.height) or not frame.mask[ny, nx]:
            raise ObjectNotFoundError(f"Object edge at ({x}, {y}) leaves the usable frame")

        inner = frame.data[y, x]
        outer = frame.data[ny, nx]
        return (AppConfig.EDGE_LEVEL - inner) / (outer - inner)

    def locate_edges(self, frame: GrayImage) -> ObjectEdges:
        """
        Edges of the largest dark object, each measured along the row or
        column through the extremal pixel closest to the object's centroid.
        """
        dark = frame.mask & (frame.data < AppConfig.EDGE_LEVEL)
        labels, count = ndimage.label(dark)
        if count == 0:
            raise ObjectNotFoundError("No dark object in frame")

        sizes = ndimage.sum_labels(dark, labels, index=np.arange(1, count + 1))
        ys, xs = np.nonzero(labels == int(np.argmax(sizes)) + 1)
        cx, cy = xs.mean(), ys.mean()

        def extremal(along_y: bool, take_max: bool) -> tuple[int, int]:
            primary, secondary, centre = (ys, xs, cx) if along_y else (xs, ys, cy)
            edge = primary.max() if take_max else primary.min()
            row = secondary[primary == edge]
            pick = int(row[np.argmin(np.abs(row - centre))])
            return (pick, int(edge)) if along_y else (int(edge), pick)

        x, y = extremal(along_y=True, take_max=False)
        top = y - self._crossing(frame, x, y, 0, -1)
        x, y = extremal(along_y=True, take_max=True)
        bottom = y + self._crossing(frame, x, y, 0, 1)
        x, y = extremal(along_y=False, take_max=False)
        left = x - self._crossing(frame, x, y, -1, 0)
        x, y = extremal(along_y=False, take_max=True)
        right = x + self._crossing(frame, x, y, 1, 0)

        return ObjectEdges(
            top=top,
            bottom=bottom,
            left=left,
            right=right,
            centroid=SubpixelPoint(x=float(cx), y=float(cy)),
        )

    # ===============================
    # TANGENCY
    # ===============================

    def tangency_residual(
        self,
        frame0: GrayImage,
        frame180: GrayImage,
        box: ReferenceBox,
        axis: Axis,
        strict: bool = True,
    ) -> TangencyReading:
        """
        Along y the object sits above the box touching its top edge; along x
        it sits left of the box touching its left edge.
        """
        if frame0.shape != frame180.shape:
            raise ParameterError(f"Frame shapes differ: {frame0.shape} vs {frame180.shape}")

        before = self.locate_edges(frame0)
        edge0 = before.bottom if axis is Axis.Y else before.right
        near = box.near_edge(axis)

        if abs(edge0 - near) >= AppConfig.TANGENT_AT_ZERO_TOLERANCE:
            if strict:
                raise NotTangentError(
                    f"Object edge {edge0:.3f} does not touch the box edge {near:.3f} ({axis.value})"
                )
            return TangencyReading(axis=axis, tangent_at_zero=False, edge_at_zero=edge0)

        after = self.locate_edges(frame180)
        edge180 = after.top if axis is Axis.Y else after.left

        return TangencyReading(
            axis=axis,
            tangent_at_zero=True,
            edge_at_zero=edge0,
            edge_at_half_turn=edge180,
            residual=edge180 - box.far_edge(axis),
        )

    @staticmethod
    def reference_box(axis: Axis, coordinate: float, cross_coordinate: float) -> ReferenceBox:
        center = (
            SubpixelPoint(x=cross_coordinate, y=coordinate)
            if axis is Axis.Y
            else SubpixelPoint(x=coordinate, y=cross_coordinate)
        )
        half = AppConfig.REFERENCE_BOX_HALF_SIZE
        return ReferenceBox(center=center, half_width=half, half_height=half)

    def _tangentize(self, rig: RigSimulator, box: ReferenceBox, axis: Axis) -> None:
        """Move the scene so the object touches the near box edge, centred on the box."""
        rig.set_angle(0.0)
        edges = self.locate_edges(rig.capture())

        if axis is Axis.Y:
            rig.translate(box.center.x - edges.centroid.x, box.top - edges.bottom)
        else:
            rig.translate(box.left - edges.right, box.center.y - edges.centroid.y)

    def read_candidate(
        self, rig: RigSimulator, axis: Axis, coordinate: int, cross_coordinate: float
    ) -> CandidateReading:
        box = self.reference_box(axis, coordinate, cross_coordinate)
        self._tangentize(rig, box, axis)

        rig.set_angle(0.0)
        frame0 = rig.capture()
        rig.set_angle(math.pi)
        frame180 = rig.capture()
        rig.set_angle(0.0)

        reading = self.tangency_residual(frame0, frame180, box, axis)
        residual = float(reading.residual)
        accepted = abs(residual) < AppConfig.TANGENCY_THRESHOLD + AppConfig.TANGENCY_TIE_TOLERANCE
        self.logger.debug(
            f"{axis.value}={coordinate}: residual {residual:+.3f} px "
            f"{'accepted' if accepted else 'rejected'}"
        )
        return CandidateReading(coordinate=coordinate, residual=residual, accepted=accepted)

    @staticmethod
    def select(readings: list[CandidateReading]) -> Optional[CandidateReading]:
        """Minimal |residual| among accepted readings; near-ties go to the lower coordinate."""
        best = None
        for reading in sorted(readings, key=lambda r: r.coordinate):
            if not reading.accepted:
                continue
            if best is None or abs(reading.residual) < abs(best.residual) - AppConfig.TANGENCY_TIE_TOLERANCE:
                best = reading
        return best

    # ===============================
    # IDENTIFICATION
    # ===============================

    def identify_axis(
        self,
        rig: RigSimulator,
        axis: Axis,
        search_range: IntRange,
        cross_coordinate: Optional[float] = None,
    ) -> AxisScan:
        """
        Scan every integer candidate of search_range. A rig without jitter is
        scanned once; a jittering rig is rescanned until a candidate is accepted.
        """
        if cross_coordinate is None:
            width, height = rig.frame_size
            cross_coordinate = (width - 1) / 2 if axis is Axis.Y else (height - 1) / 2

        max_rounds = AppConfig.IDENTIFY_MAX_ROUNDS if rig.jitter.enabled else 1

        for round_number in range(1, max_rounds + 1):
            readings = [
                self.read_candidate(rig, axis, coordinate, cross_coordinate)
                for coordinate in search_range.as_range()
            ]
            best = self.select(readings)

            if best is not None:
                self.logger.info(
                    f"Identified {axis.value}={best.coordinate} "
                    f"(residual {best.residual:+.3f} px, round {round_number})"
                )
                return AxisScan(
                    axis=axis,
                    readings=readings,
                    selected=best.coordinate,
                    rounds=round_number,
                )

            self.logger.warning(
                f"No {axis.value} candidate accepted in [{search_range.start}, "
                f"{search_range.stop}], round {round_number}/{max_rounds}"
            )

        raise NoCandidateAcceptedError(
            f"No {axis.value} candidate in [{search_range.start}, {search_range.stop}] "
            f"was tangent after a half turn",
            message_markup=f"[red]No candidate accepted[/] along [bold]{axis.value}[/]",
        )

    def identify_center(self, rig: RigSimulator, search_box: PixelRect) -> CenterEstimate:
        """Independent scans along y then x; the box middle fixes the cross coordinate."""
        scan_y = self.identify_axis(rig, Axis.Y, search_box.y, float(search_box.x.middle))
        scan_x = self.identify_axis(rig, Axis.X, search_box.x, float(search_box.y.middle))

        center = SubpixelPoint(x=scan_x.selected, y=scan_y.selected)
        self.logger.info(f"Identified rotation center {center}")
        return CenterEstimate(
            center=center, method=EstimationMethod.GEOMETRIC, scans=[scan_x, scan_y]
        )
