import json

import pytest

from emla_vdc.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main


def test_check_gains_prints_margins_per_actuator(capsys):
    assert main(["check-gains", "--config", "default"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in out[1:]] == ["base", "lift", "tilt"]
    assert all(line.split()[-1] == "pass" and len(line.split()) == 5 for line in out[1:])


@pytest.mark.parametrize(
    "argv",
    [["run", "--bogus"], [], ["frobnicate"], ["run", "--seed", "x"], ["run", "--variant", "nope"]],
)
def test_usage_errors_exit_with_usage(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "usage:" in capsys.readouterr().err


def test_unknown_config_exits_one(capsys):
    assert main(["run", "--config", "no-such-preset"]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_invalid_alpha_exits_one():
    assert main(["run", "--config", "hold", "--alpha", "1.5"]) == EXIT_CONFIG


def test_run_writes_outputs(tmp_path):
    assert main(["run", "--config", "hold", "--duration", "0.02", "--out", str(tmp_path)]) == EXIT_OK
    assert {p.name for p in tmp_path.iterdir()} >= {"trace.csv", "metrics.json", "timing.json"}
    assert json.loads((tmp_path / "metrics.json").read_text())["status"] == "ok"


def test_sweep_writes_subdirectories_and_summary(tmp_path):
    argv = ["sweep", "--config", "hold", "--duration", "0.02", "--scales", "0", "0.2", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    summary = json.loads((tmp_path / "sweep.json").read_text())
    assert [row["scale"] for row in summary] == [0.0, 0.2]
    assert (tmp_path / "scale+0.20" / "metrics.json").exists()


def test_aborted_run_exits_two(tmp_path):
    cfg = tmp_path / "far.yaml"
    cfg.write_text(
        "base: hold.yaml\n"
        "scenario:\n"
        "  trajectory: {kind: waypoints, waypoints: [[0, 0, 0], [-2.5, 0, 0]], segment_duration: 0.5, blend_time: 0.2}\n"
    )
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_RUNTIME
    assert (tmp_path / "o" / "trace.csv").exists()


def test_dataset_then_training_roundtrip(tmp_path):
    assert main(["gen-dataset", "--points", "5", "--out", str(tmp_path / "d")]) == EXIT_OK
    csv = tmp_path / "d" / "dataset.csv"
    assert len(csv.read_text().splitlines()) == 26
    argv = ["train-surrogate", "--dataset", str(csv), "--epochs", "3", "--hidden", "4", "--out", str(tmp_path / "m")]
    assert main(argv) == EXIT_OK
    assert (tmp_path / "m" / "surrogate.json").exists()


def test_missing_dataset_exits_one(tmp_path):
    assert main(["train-surrogate", "--dataset", str(tmp_path / "none.csv")]) == EXIT_CONFIG


def test_efficiency_map_with_bad_model_exits_one(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["efficiency-map", "--model", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
