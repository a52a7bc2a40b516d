import functools
import math
import os
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.markup import escape

from app.service import (
    blur_service,
    deconvolution_service,
    experiment_service,
    file_service,
    imaging_service,
    rig_service,
    ring_service,
)
from libs.config.app_config import AppConfig
from libs.fmt.report_formatter import ReportFormatter
from libs.json.serializer_deserializer import DataclassSerializer
from modules.blur.models import BlurSpec
from modules.deconvolution.models import DeblurConfig
from modules.enums.enums import DeblurMethod, EstimationMethod, SceneKind
from modules.exceptions.exceptions import ParameterError, RotablurError
from modules.experiments.models import ExperimentReport
from modules.imaging.models import PixelRect, SubpixelPoint
from modules.imaging.patterns import ScenePatterns
from modules.rig.models import RigConfig

app = typer.Typer(
    name="rotablur",
    help="Rotary motion blur: synthesis, ring deblurring and rotation center identification.",
    no_args_is_help=True,
    add_completion=False,
)
console = Console()


def handled(command):
    """Map domain errors to exit codes: 1 parameters, 2 I/O, 3 protocol or estimation."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except RotablurError as e:
            console.print(f"❌ {e.message_markup or escape(e.message)}")
            raise typer.Exit(code=e.exit_code)
        except ValueError as e:
            # pydantic ValidationError and unknown enum names
            console.print(f"❌ Invalid parameters: {escape(str(e))}")
            raise typer.Exit(code=ParameterError.exit_code)
        except OSError as e:
            console.print(f"❌ I/O error: {escape(str(e))}")
            raise typer.Exit(code=2)

    return wrapper


def point(x: float, y: float) -> SubpixelPoint:
    return SubpixelPoint(x=x, y=y)


def radians(degrees: float) -> float:
    return math.radians(degrees)


def deblur_config(method: str, nsr: float, freq_threshold: float, lam: float) -> DeblurConfig:
    return DeblurConfig(
        method=DeblurMethod.from_string(method),
        nsr=nsr,
        freq_threshold=freq_threshold,
        lam=lam,
    )


def emit(report: ExperimentReport, path: Optional[Path], max_rows: Optional[int] = 20) -> None:
    console.print(ReportFormatter.rows_table(report, max_rows=max_rows))
    if report.summary:
        console.print(ReportFormatter.summary_table(report))
    if path is not None:
        experiment_service.write_report(report, path)
        console.print(f"✅ Report written to {path}")


# ===============================
# SHARED OPTIONS
# ===============================

CenterX = typer.Option(..., "--center-x", help="Rotation center x in pixels")
CenterY = typer.Option(..., "--center-y", help="Rotation center y in pixels")
BlurAngle = typer.Option(..., "--blur-angle-deg", help="Angle swept during exposure, degrees")
Method = typer.Option("sdp", "--method", help="wiener, mwiener or sdp")
Nsr = typer.Option(AppConfig.DEFAULT_NSR, "--nsr", help="Wiener noise-to-signal ratio")
FreqThreshold = typer.Option(
    AppConfig.DEFAULT_FREQ_THRESHOLD, "--freq-threshold", help="mwiener kernel magnitude threshold"
)
Lambda = typer.Option(AppConfig.DEFAULT_LAMBDA, "--lambda", help="sdp smoothness weight")
Report = typer.Option(None, "--report", help="CSV report path; a .json sidecar is written next to it")


# ===============================
# IMAGES
# ===============================


@app.command()
@handled
def blur(
    input: Path,
    output: Path,
    center_x: float = CenterX,
    center_y: float = CenterY,
    blur_angle_deg: float = BlurAngle,
    sigma: float = typer.Option(0.0, "--sigma", help="Gaussian noise std on the [0, 1] scale"),
    seed: int = typer.Option(0, "--seed"),
    samples: Optional[int] = typer.Option(None, "--samples", help="Angular samples per exposure"),
    bit_depth: int = typer.Option(8, "--bit-depth"),
):
    """Synthesize a rotary motion blurred image."""
    sharp = file_service.load_image(input)
    spec = BlurSpec(
        center=point(center_x, center_y),
        blur_angle=radians(blur_angle_deg),
        angular_samples=samples,
        noise_sigma=sigma,
    )
    blurred = blur_service.blur_and_noise(sharp, spec, seed)
    file_service.save_image(blurred, output, bit_depth=bit_depth)
    console.print(f"✅ Blurred {input} by {blur_angle_deg:g}° about {spec.center} → {output}")


@app.command()
@handled
def deblur(
    input: Path,
    output: Path,
    center_x: float = CenterX,
    center_y: float = CenterY,
    blur_angle_deg: float = BlurAngle,
    method: str = Method,
    nsr: float = Nsr,
    freq_threshold: float = FreqThreshold,
    lam: float = Lambda,
    reference: Optional[Path] = typer.Option(None, "--reference", help="Sharp image for PSNR"),
    bit_depth: int = typer.Option(8, "--bit-depth"),
    dump_rings: Optional[Path] = typer.Option(
        None, "--dump-rings", help="CSV of the input rings about the center"
    ),
):
    """Non-blind rotary deblurring about a known center."""
    blurred = file_service.load_image(input)
    config = deblur_config(method, nsr, freq_threshold, lam)
    center = point(center_x, center_y)

    if dump_rings is not None:
        r_max = ring_service.inscribed_radius(center, blurred.width, blurred.height)
        if r_max < 1:
            raise ParameterError(f"Center {center} leaves no ring inside the image")
        ring_service.dump_csv(ring_service.decompose_rings(blurred, center, r_max), dump_rings)
        console.print(f"✅ Rings about {center} → {dump_rings}")

    restored = deconvolution_service.deblur_rmd(blurred, center, radians(blur_angle_deg), config)
    file_service.save_image(restored, output, bit_depth=bit_depth)
    console.print(f"✅ Deblurred with {config.describe()} → {output}")

    if reference is not None:
        sharp = file_service.load_image(reference)
        before = imaging_service.psnr(blurred, sharp, restored.mask)
        after = imaging_service.psnr(restored, sharp)
        console.print(f"PSNR {ReportFormatter.fmt(before)} dB → [bold]{ReportFormatter.fmt(after)} dB[/]")


@app.command("make-scene")
@handled
def make_scene(
    kind: str,
    output: Path,
    width: Optional[int] = typer.Option(None, "--width", help="Scene width; defaults to fit the frame"),
    height: Optional[int] = typer.Option(None, "--height"),
    seed: int = typer.Option(0, "--seed"),
    frame_w: int = typer.Option(512, "--frame-w"),
    frame_h: int = typer.Option(512, "--frame-h"),
    center_x: Optional[float] = typer.Option(None, "--center-x", help="Rig rotation center x"),
    center_y: Optional[float] = typer.Option(None, "--center-y"),
    jitter_sigma: float = typer.Option(0.0, "--jitter-sigma"),
    rig_config: Optional[Path] = typer.Option(None, "--rig-config", help="Also write a rig JSON"),
):
    """Write a synthetic scene and, optionally, a rig scenario using it."""
    scene_kind = SceneKind.from_string(kind)
    side = math.ceil(math.hypot(frame_w, frame_h)) + 8
    width = width or side
    height = height or side

    # calibration objects rest near the frame middle, off the rotation center
    middle = point((width - 1) / 2, (height - 1) / 2)
    match scene_kind:
        case SceneKind.TANGENCY:
            anchor = middle.shifted(-8, -12)
        case SceneKind.DOT:
            anchor = middle.shifted(10, -6)
        case _:
            anchor = middle

    scene = ScenePatterns.build(scene_kind, width, height, seed=seed, center=anchor)
    file_service.save_image(scene, output, bit_depth=16)
    console.print(f"✅ {scene_kind.value} scene {width}x{height} → {output}")

    if rig_config is not None:
        config = RigConfig(
            scene=os.path.relpath(output.resolve(), rig_config.resolve().parent),
            true_center_x=center_x if center_x is not None else (frame_w - 1) / 2,
            true_center_y=center_y if center_y is not None else (frame_h - 1) / 2,
            frame_w=frame_w,
            frame_h=frame_h,
            jitter_sigma=jitter_sigma,
            seed=seed,
        )
        rig_config.write_text(DataclassSerializer.serialize(config, indent=2))
        console.print(f"✅ Rig scenario → {rig_config}")


# ===============================
# EXPERIMENTS
# ===============================


@app.command()
@handled
def sensitivity(
    input: Path,
    center_x: float = CenterX,
    center_y: float = CenterY,
    blur_angle_deg: float = BlurAngle,
    sigma: float = typer.Option(0.01, "--sigma"),
    seed: int = typer.Option(0, "--seed"),
    offsets: list[float] = typer.Option([0.0, 1.0, 10.0], "--offset", help="Center error along x, px"),
    method: str = Method,
    nsr: float = Nsr,
    freq_threshold: float = FreqThreshold,
    lam: float = Lambda,
    report: Optional[Path] = Report,
):
    """Deblur with the center shifted along x and compare PSNR and ringing."""
    sharp = file_service.load_image(input)
    result = experiment_service.sensitivity(
        sharp,
        point(center_x, center_y),
        radians(blur_angle_deg),
        offsets,
        sigma=sigma,
        seed=seed,
        config=deblur_config(method, nsr, freq_threshold, lam),
    )
    emit(result, report)


@app.command()
@handled
def identify(
    config: Path,
    x_min: int = typer.Option(..., "--x-min"),
    x_max: int = typer.Option(..., "--x-max"),
    y_min: int = typer.Option(..., "--y-min"),
    y_max: int = typer.Option(..., "--y-max"),
    report: Optional[Path] = Report,
):
    """Run the tangency protocol on a rig scenario."""
    rig = rig_service.load_rig(config)
    estimate, result = experiment_service.identify(
        rig, PixelRect.from_bounds(x_min, x_max, y_min, y_max)
    )
    emit(result, report, max_rows=None)
    console.print(f"✅ Rotation center [bold]({estimate.center.x:g}, {estimate.center.y:g})[/]")


@app.command()
@handled
def verify(
    config: Path,
    candidate_x: list[float] = typer.Option(..., "--candidate-x"),
    candidate_y: list[float] = typer.Option(..., "--candidate-y"),
    angles_deg: Optional[list[float]] = typer.Option(None, "--angle-deg"),
    dump_frames: Optional[Path] = typer.Option(
        None, "--dump-frames", help="Directory for one PNG per candidate and angle"
    ),
    report: Optional[Path] = Report,
):
    """Track a dot parked on each candidate center while the platform turns."""
    if len(candidate_x) != len(candidate_y):
        raise ParameterError("--candidate-x and --candidate-y must be given the same number of times")

    rig = rig_service.load_rig(config)
    result = experiment_service.verify(
        rig,
        [point(x, y) for x, y in zip(candidate_x, candidate_y)],
        angles_deg or AppConfig.VERIFY_ANGLES_DEG,
        frames_dir=dump_frames,
    )
    emit(result, report)
    if dump_frames is not None:
        console.print(f"✅ Frames written to {dump_frames}")


@app.command()
@handled
def estimate(
    input: Path,
    method: str = typer.Option("hough", "--method", help="hong or hough"),
    x_min: int = typer.Option(..., "--x-min"),
    x_max: int = typer.Option(..., "--x-max"),
    y_min: int = typer.Option(..., "--y-min"),
    y_max: int = typer.Option(..., "--y-max"),
    blur_angle_deg: Optional[float] = typer.Option(None, "--blur-angle-deg"),
    truth_x: Optional[float] = typer.Option(None, "--truth-x"),
    truth_y: Optional[float] = typer.Option(None, "--truth-y"),
    report: Optional[Path] = Report,
):
    """Estimate the rotation center from a blurred image alone."""
    if (truth_x is None) != (truth_y is None):
        raise ParameterError("--truth-x and --truth-y go together")

    blurred = file_service.load_image(input)
    _, result = experiment_service.estimate(
        blurred,
        EstimationMethod.from_string(method),
        PixelRect.from_bounds(x_min, x_max, y_min, y_max),
        blur_angle=radians(blur_angle_deg) if blur_angle_deg is not None else None,
        truth=point(truth_x, truth_y) if truth_x is not None else None,
    )
    emit(result, report)


@app.command()
@handled
def study(
    trials: int = typer.Option(500, "--trials"),
    sigma: float = typer.Option(AppConfig.DEFAULT_JITTER_SIGMA, "--sigma", help="Jitter per axis, px"),
    seed: int = typer.Option(0, "--seed"),
    frame: int = typer.Option(96, "--frame"),
    baselines: bool = typer.Option(False, "--baselines", help="Also run hong and hough per trial"),
    blur_angle_deg: float = typer.Option(34.0, "--blur-angle-deg"),
    method: str = Method,
    nsr: float = Nsr,
    freq_threshold: float = FreqThreshold,
    lam: float = Lambda,
    report: Optional[Path] = Report,
):
    """
    Monte-Carlo identification over random subpixel centers. With --baselines,
    each trial also deblurs a speckle scene about every estimated center.
    """
    result = experiment_service.study(
        trials,
        sigma=sigma,
        seed=seed,
        frame=frame,
        with_baselines=baselines,
        blur_angle=radians(blur_angle_deg),
        config=deblur_config(method, nsr, freq_threshold, lam),
    )
    emit(result, report, max_rows=10)


if __name__ == "__main__":
    app()
