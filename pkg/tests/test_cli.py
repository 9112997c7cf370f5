"""End-to-end runs of the command-line interface."""

from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from geopyramid import flower_curve
from geopyramid import io as gio
from geopyramid.cli import run


def read_manifest(directory):
    return json.loads((directory / "manifest.json").read_text())


def csv_rows(path):
    with open(path, newline="") as handle:
        return [r for r in csv.reader(handle) if r and not r[0].startswith("#")]


def test_solve_decimation_outputs(tmp_path, capsys):
    assert run(["solve-decimation", "--output-dir", str(tmp_path), "--no-plot"]) == 0
    printed = json.loads(capsys.readouterr().out)
    document = gio.read_json(tmp_path / "decimation.json")
    assert printed == document
    assert document["support"] == 13
    assert document["residual"] <= 1e-10
    assert document["zeta"]["first_index"] == -6
    assert abs(sum(document["zeta"]["coeffs"]) - 1.0) < 1e-12
    assert document["gamma"]["coeffs"][0] != 0.0
    assert {"truncated", "normalized"} == set(document["bound_constants"])
    manifest = read_manifest(tmp_path)
    assert manifest["command"] == "solve-decimation"
    assert manifest["outputs"] == ["decimation.json"]
    assert manifest["config"]["order"] == 3


def test_solve_decimation_quadratic_support(tmp_path):
    out = tmp_path / "q"
    assert run([
        "solve-decimation", "--order", "2", "--epsilon", "1e-4",
        "--output-dir", str(out), "--no-plot",
    ]) == 0
    document = gio.read_json(out / "decimation.json")
    assert document["support"] == 9
    assert document["zeta"]["first_index"] == 0


def test_analyze_and_synthesize_round_trip(tmp_path):
    analysis = tmp_path / "analysis"
    assert run([
        "analyze", "--levels", "3", "--samples", "80",
        "--output-dir", str(analysis), "--no-plot",
    ]) == 0
    pyramid = gio.read_json(analysis / "pyramid.json")
    assert pyramid["manifold"] == "s2"
    assert len(pyramid["coarse"]) == 10
    assert len(pyramid["details"]) == 3
    rows = csv_rows(analysis / "norms.csv")
    assert rows[0] == ["level", "index", "norm"]
    assert len(rows) - 1 == 20 + 40 + 80

    synthesis = tmp_path / "synthesis"
    assert run([
        "synthesize", "--input", str(analysis / "pyramid.json"),
        "--output-dir", str(synthesis),
    ]) == 0
    rebuilt = gio.sequence_from_dict(gio.read_json(synthesis / "sequence.json"))
    truth = flower_curve(5, 80)
    assert float(np.max(truth.manifold.distance(truth.points, rebuilt.points))) < 1e-8


def test_denoise_metrics_and_determinism(tmp_path):
    args = ["denoise", "--levels", "3", "--samples", "80", "--no-plot"]
    first, second = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--output-dir", str(first)]) == 0
    assert run(args + ["--output-dir", str(second)]) == 0
    for name in (
        "denoised.json", "norms_noisy.csv", "norms_denoised.csv", "manifest.json",
    ):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    manifest = read_manifest(first)
    metrics = manifest["metrics"]
    assert set(metrics) >= {"noisy_error", "denoised_error", "rescaled_draws"}
    assert metrics["noisy_error"] > 0.0


def test_denoise_seed_changes_output(tmp_path):
    base = ["denoise", "--levels", "3", "--samples", "80", "--no-plot"]
    first, second = tmp_path / "a", tmp_path / "b"
    assert run(base + ["--output-dir", str(first)]) == 0
    assert run(base + ["--seed", "1", "--output-dir", str(second)]) == 0
    assert (first / "denoised.json").read_bytes() != (second / "denoised.json").read_bytes()


def test_manifest_reproduces_run(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert run([
        "denoise", "--levels", "3", "--samples", "80", "--sigma", "0.02",
        "--no-plot", "--output-dir", str(first),
    ]) == 0
    assert run([
        "denoise", "--config", str(first / "manifest.json"),
        "--output-dir", str(second),
    ]) == 0
    for name in ("denoised.json", "norms_noisy.csv", "manifest.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_manifest_for_other_command_is_rejected(tmp_path):
    first = tmp_path / "a"
    assert run(["analyze", "--levels", "2", "--samples", "40",
                "--no-plot", "--output-dir", str(first)]) == 0
    assert run(["denoise", "--config", str(first / "manifest.json"),
                "--output-dir", str(tmp_path / "b")]) == 1


def test_config_file_merging(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"levels": 2, "samples": 40, "no_plot": True}))
    out = tmp_path / "out"
    assert run([
        "analyze", "--config", str(config), "--levels", "3", "--samples", "80",
        "--output-dir", str(out),
    ]) == 0
    manifest = read_manifest(out)
    assert manifest["config"]["levels"] == 3  # flag wins over file
    assert manifest["config"]["samples"] == 80
    assert manifest["config"]["no_plot"] is True


def test_unknown_config_key_is_rejected(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"levles": 2}))
    assert run(["analyze", "--config", str(config)]) == 1


def test_detect_anomalies_flags_jumps(tmp_path):
    out = tmp_path / "anomalous"
    assert run([
        "detect-anomalies", "--samples", "96", "--levels", "3",
        "--output-dir", str(out), "--no-plot",
    ]) == 0
    manifest = read_manifest(out)
    assert manifest["metrics"]["flag_count"] > 0
    rows = csv_rows(out / "flags.csv")
    assert rows[0] == ["level", "index", "norm", "grid_position"]
    finest = [int(r[1]) for r in rows[1:] if r[0] == "3"]
    assert any(abs(i - 32) <= 2 for i in finest)
    assert any(abs(i - 64) <= 2 for i in finest)

    smooth = tmp_path / "smooth"
    assert run([
        "detect-anomalies", "--samples", "96", "--levels", "3",
        "--anomaly-scale", "1.0", "--output-dir", str(smooth), "--no-plot",
    ]) == 0
    assert read_manifest(smooth)["metrics"]["flag_count"] == 0
    assert len(csv_rows(smooth / "flags.csv")) == 1  # header only


def test_decay_report_outputs(tmp_path):
    assert run([
        "decay-report", "--levels", "3", "--samples", "80",
        "--output-dir", str(tmp_path), "--no-plot",
    ]) == 0
    document = gio.read_json(tmp_path / "decay_report.json")
    assert len(document["p_min_series"]) == 3
    rows = csv_rows(tmp_path / "pmin.csv")
    assert rows[0] == ["row", "delta", "p_min"]
    assert len(rows) == 4
    assert float(rows[1][2]) == document["p_min_series"][0]


def test_plots_are_rendered(tmp_path):
    assert run([
        "analyze", "--levels", "2", "--samples", "40", "--output-dir", str(tmp_path),
    ]) == 0
    png = tmp_path / "details.png"
    assert png.exists()
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert "details.png" in read_manifest(tmp_path)["outputs"]


def test_exit_codes():
    assert run(["synthesize"]) == 1  # missing required input
    assert run(["analyze", "--levels", "0"]) == 1
    assert run(["analyze", "--manifold", "euclidean"]) == 1  # needs --input
    assert run([]) == 1  # no subcommand prints help


def test_bad_flag_exits_with_validation_code():
    with pytest.raises(SystemExit) as excinfo:
        run(["analyze", "--bogus"])
    assert excinfo.value.code == 1
    with pytest.raises(SystemExit) as excinfo:
        run(["analyze", "--levels", "x"])
    assert excinfo.value.code == 1


def test_numerical_failure_exit_code(tmp_path):
    points = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]] * 8)
    gio.write_json(
        tmp_path / "antipodal.json",
        {
            "format_version": 1,
            "manifold": "s2",
            "level": 0,
            "points": points.tolist(),
        },
    )
    code = run([
        "analyze", "--input", str(tmp_path / "antipodal.json"),
        "--levels", "2", "--output-dir", str(tmp_path), "--no-plot",
    ])
    assert code == 2


def test_bad_input_file_exit_code(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert run([
        "analyze", "--input", str(broken), "--output-dir", str(tmp_path),
    ]) == 1


def test_version_flag():
    with pytest.raises(SystemExit) as excinfo:
        run(["--version"])
    assert excinfo.value.code == 0
