import csv

import pytest
from typer.testing import CliRunner

from app.cli import app as cli

runner = CliRunner()


@pytest.fixture
def scene(tmp_path):
    path = tmp_path / "blocks.png"
    result = runner.invoke(
        cli, ["make-scene", "blocks", str(path), "--width", "128", "--height", "128", "--seed", "2"]
    )
    assert result.exit_code == 0, result.output
    return path


@pytest.fixture
def rig_config(tmp_path):
    path = tmp_path / "rig.json"
    result = runner.invoke(
        cli,
        [
            "make-scene", "tangency", str(tmp_path / "tangency.png"),
            "--frame-w", "96", "--frame-h", "96",
            "--center-x", "46.6", "--center-y", "45.3",
            "--rig-config", str(path),
        ],
    )
    assert result.exit_code == 0, result.output
    return path


def blur_args(scene, output, *extra):
    return [
        "blur", str(scene), str(output),
        "--center-x", "63", "--center-y", "64",
        "--blur-angle-deg", "20", "--sigma", "0.01", "--seed", "5",
        *extra,
    ]


def test_blur_is_reproducible(scene, tmp_path):
    first, second = tmp_path / "a.png", tmp_path / "b.png"

    assert runner.invoke(cli, blur_args(scene, first)).exit_code == 0
    assert runner.invoke(cli, blur_args(scene, second)).exit_code == 0

    assert first.read_bytes() == second.read_bytes()


def test_zero_blur_angle_is_a_parameter_error(scene, tmp_path):
    args = blur_args(scene, tmp_path / "a.png")
    args[args.index("20")] = "0"

    assert runner.invoke(cli, args).exit_code == 1


def test_missing_input_is_an_io_error(tmp_path):
    result = runner.invoke(cli, blur_args(tmp_path / "missing.png", tmp_path / "a.png"))

    assert result.exit_code == 2


def test_unknown_method_is_a_parameter_error(scene, tmp_path):
    result = runner.invoke(
        cli,
        [
            "deblur", str(scene), str(tmp_path / "d.png"),
            "--center-x", "63", "--center-y", "64", "--blur-angle-deg", "20",
            "--method", "lucy",
        ],
    )

    assert result.exit_code == 1


def test_deblur_reports_psnr(scene, tmp_path):
    blurred = tmp_path / "blurred.png"
    runner.invoke(cli, blur_args(scene, blurred))

    result = runner.invoke(
        cli,
        [
            "deblur", str(blurred), str(tmp_path / "restored.png"),
            "--center-x", "63", "--center-y", "64", "--blur-angle-deg", "20",
            "--method", "sdp", "--lambda", "0.01", "--reference", str(scene),
        ],
    )

    assert result.exit_code == 0, result.output
    assert "PSNR" in result.output
    assert (tmp_path / "restored.png").exists()


def test_sensitivity_writes_report(scene, tmp_path):
    report = tmp_path / "sensitivity.csv"

    result = runner.invoke(
        cli,
        [
            "sensitivity", str(scene),
            "--center-x", "63", "--center-y", "64", "--blur-angle-deg", "28",
            "--offset", "0", "--offset", "1", "--lambda", "0.01",
            "--report", str(report),
        ],
    )

    assert result.exit_code == 0, result.output
    with open(report, newline="") as f:
        rows = list(csv.DictReader(f))
    assert [row["offset"] for row in rows] == ["0.0", "1.0"]
    assert {"psnr_db", "ringing", "runtime_ms"} <= set(rows[0])
    assert (tmp_path / "sensitivity.csv.json").exists()


def test_identify_reports_center(rig_config):
    result = runner.invoke(
        cli,
        [
            "identify", str(rig_config),
            "--x-min", "45", "--x-max", "48", "--y-min", "44", "--y-max", "46",
        ],
    )

    assert result.exit_code == 0, result.output
    assert "(47, 45)" in result.output


def test_identify_outside_range_is_a_protocol_error(rig_config):
    result = runner.invoke(
        cli,
        [
            "identify", str(rig_config),
            "--x-min", "45", "--x-max", "48", "--y-min", "38", "--y-max", "40",
        ],
    )

    assert result.exit_code == 3


def test_unknown_config_key_is_a_parameter_error(tmp_path):
    config = tmp_path / "rig.json"
    config.write_text('{"scene": "x.png", "motor": 1}')

    result = runner.invoke(
        cli,
        ["identify", str(config), "--x-min", "0", "--x-max", "1", "--y-min", "0", "--y-max", "1"],
    )

    assert result.exit_code == 1


def test_deblur_dumps_the_input_rings(scene, tmp_path):
    rings = tmp_path / "rings.csv"

    result = runner.invoke(
        cli,
        [
            "deblur", str(scene), str(tmp_path / "restored.png"),
            "--center-x", "63", "--center-y", "64", "--blur-angle-deg", "20",
            "--dump-rings", str(rings),
        ],
    )

    assert result.exit_code == 0, result.output
    with open(rings, newline="") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == ["radius", "sample", "value", "valid"]
    assert rows[0]["radius"] == "0"
    assert max(int(row["radius"]) for row in rows) == 63


def test_ring_dump_needs_a_ring_inside_the_image(scene, tmp_path):
    result = runner.invoke(
        cli,
        [
            "deblur", str(scene), str(tmp_path / "restored.png"),
            "--center-x", "0", "--center-y", "64", "--blur-angle-deg", "20",
            "--dump-rings", str(tmp_path / "rings.csv"),
        ],
    )

    assert result.exit_code == 1


def test_verify_dumps_frames(tmp_path):
    config = tmp_path / "dot.json"
    made = runner.invoke(
        cli,
        [
            "make-scene", "dot", str(tmp_path / "dot.png"),
            "--frame-w", "96", "--frame-h", "96",
            "--center-x", "47.3", "--center-y", "48.6",
            "--rig-config", str(config),
        ],
    )
    assert made.exit_code == 0, made.output

    result = runner.invoke(
        cli,
        [
            "verify", str(config),
            "--candidate-x", "47.3", "--candidate-y", "48.6",
            "--angle-deg", "0", "--angle-deg", "180",
            "--dump-frames", str(tmp_path / "frames"),
        ],
    )

    assert result.exit_code == 0, result.output
    assert len(list((tmp_path / "frames").glob("*.png"))) == 2
