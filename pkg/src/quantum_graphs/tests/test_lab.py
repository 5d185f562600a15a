"""
End-to-end tests for the quantum-graphs command line.
"""

import json
from pathlib import Path

import pandas as pd
import pytest

from ..experiment import ExperimentConfig
from ..lab import EXIT_OK, EXIT_USAGE, QuantumGraphLab, main
from ..tools.csv_save import read_metadata
from ..tools.run_organizer import load_manifest
from ..tools.validate import MC_OBSERVABLES, check_monte_carlo


def _config(tmp_path, text):
    path = tmp_path / "experiment.yaml"
    path.write_text(text, encoding="utf-8")
    return str(path)


SMALL_RUN = "model: free\nn: [4]\nbeta: [0.5, 0.75, 1.0]\nmeasurements: 200\nseed: 17\n"


def test_polya_command(tmp_path):
    out = tmp_path / "out"
    code = main(["polya", "--config", _config(tmp_path, "model: free\nn: [4, 6]\nbeta: [1.0]\n"), "--out", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out / "polya_n4.csv", comment="#")
    assert frame["D"].tolist() == [1, 1, 2, 3, 2, 1, 1]
    assert pd.read_csv(out / "polya_n6.csv", comment="#")["D"].sum() == 156
    meta = read_metadata(out / "polya_n4.csv")
    assert meta["command"] == "polya"
    assert meta["n"] == 4
    assert meta["config"]["n"] == [4, 6]


def test_exact_output_is_reproducible(tmp_path):
    config = _config(tmp_path, "model: ising\nE0: -0.5\nn: [4, 5]\nbeta_start: 0\nbeta_stop: 2\nbeta_count: 5\n")
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["exact", "--config", config, "--out", str(first)]) == EXIT_OK
    assert main(["exact", "--config", config, "--out", str(second)]) == EXIT_OK
    frame = pd.read_csv(first / "exact.csv", comment="#")
    assert len(frame) == 2 * 5 * 2
    assert (first / "exact.csv").read_bytes() == (second / "exact.csv").read_bytes()


def test_exact_skips_ising_beyond_the_exhaustive_cap(tmp_path):
    out = tmp_path / "out"
    config = _config(tmp_path, "model: ising\nn: [12]\nbeta: [1.0]\nensemble: labeled\n")
    assert main(["exact", "--config", config, "--out", str(out)]) == EXIT_OK
    assert pd.read_csv(out / "exact.csv", comment="#").empty


def test_simulate_then_analyze(tmp_path):
    out = tmp_path / "out"
    config = _config(tmp_path, SMALL_RUN)
    assert main(["simulate", "--config", config, "--out", str(out)]) == EXIT_OK
    manifest = load_manifest(out)
    assert len(manifest["runs"]) == 6
    assert {run["ensemble"] for run in manifest["runs"]} == {"labeled", "unlabeled"}
    assert len({run["stream"] for run in manifest["runs"]}) == 6

    assert main(["analyze", "--config", config, "--out", str(out)]) == EXIT_OK
    estimates = pd.read_csv(out / "estimates.csv", comment="#")
    assert len(estimates) == 6 * 6
    assert (estimates["stderr"] >= 0).all()

    assert main(["reweight", "--config", config, "--out", str(out)]) == EXIT_OK
    curves = pd.read_csv(out / "reweighted.csv", comment="#")
    assert len(curves) == 2 * 50
    assert (curves[["c", "chi_m", "chi_s1"]] >= 0).all().all()

    assert main(["plot", "--config", config, "--out", str(out)]) == EXIT_OK
    assert any(Path(out).glob("*.svg"))


def test_simulation_is_byte_identical_across_runs(tmp_path):
    config = _config(tmp_path, "model: ising\nE0: -0.5\nn: [5]\nbeta: [0.5]\nmeasurements: 50\nseed: 3\n")
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", config, "--out", str(first)]) == EXIT_OK
    assert main(["simulate", "--config", config, "--out", str(second)]) == EXIT_OK
    assert (first / "manifest.json").read_bytes() == (second / "manifest.json").read_bytes()
    for run in json.loads((first / "manifest.json").read_text())["runs"]:
        assert (first / run["file"]).read_bytes() == (second / run["file"]).read_bytes()


def test_thread_count_does_not_change_the_output_bytes(tmp_path):
    config = _config(tmp_path, "model: free\nn: [4]\nbeta: [0.5, 1.0]\nmeasurements: 50\nseed: 9\n")
    first, second = tmp_path / "serial", tmp_path / "nested" / "pooled"
    assert main(["simulate", "--config", config, "--out", str(first), "--threads", "1"]) == EXIT_OK
    assert main(["simulate", "--config", config, "--out", str(second), "--threads", "2"]) == EXIT_OK
    assert (first / "manifest.json").read_bytes() == (second / "manifest.json").read_bytes()
    for run in load_manifest(first)["runs"]:
        assert (first / run["file"]).read_bytes() == (second / run["file"]).read_bytes()
    assert "output_dir" not in read_metadata(first / load_manifest(first)["runs"][0]["file"])["config"]


def test_seed_override_changes_the_trajectory(tmp_path):
    config = _config(tmp_path, "model: free\nn: [5]\nbeta: [1.0]\nmeasurements: 50\nensemble: labeled\n")
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", config, "--out", str(first), "--seed", "1"]) == EXIT_OK
    assert main(["simulate", "--config", config, "--out", str(second), "--seed", "2"]) == EXIT_OK
    a, b = load_manifest(first), load_manifest(second)
    assert a["seed"] == 1 and b["seed"] == 2
    assert a["runs"][0]["sha256"] != b["runs"][0]["sha256"]


def test_usage_errors_exit_with_two(tmp_path, capsys):
    out = str(tmp_path / "out")
    assert main(["exact", "--config", str(tmp_path / "missing.yaml"), "--out", out]) == EXIT_USAGE
    assert main(["exact", "--config", _config(tmp_path, "model: potts\n"), "--out", out]) == EXIT_USAGE
    assert "model" in capsys.readouterr().err
    assert main(["analyze", "--out", str(tmp_path / "empty")]) == EXIT_USAGE
    assert "simulate" in capsys.readouterr().err
    assert main(["plot", "--out", str(tmp_path / "nothing")]) == EXIT_USAGE


def test_unknown_command_is_rejected():
    with pytest.raises(SystemExit) as excinfo:
        main(["bogus"])
    assert excinfo.value.code == 2


def test_metadata_header(tmp_path):
    lab = QuantumGraphLab(_config(tmp_path, SMALL_RUN), {"output_dir": str(tmp_path)})
    meta = lab.metadata("exact")
    assert meta["command"] == "exact"
    assert meta["seed"] == 17
    assert meta["config_sha256"] == lab.config.sha256()
    assert meta["long"] is False
    assert set(lab.commands) == {"exact", "polya", "simulate", "analyze", "reweight", "validate", "plot"}


def test_validate_with_monte_carlo_runs_quickly(tmp_path):
    out = tmp_path / "out"
    config = _config(
        tmp_path,
        "model: free\nn: [4]\nbeta: [1.0]\nmeasurements: 200\nseed: 11\nvalidate_mc: true\n",
    )
    assert main(["validate", "--config", config, "--out", str(out)]) == EXIT_OK
    results = pd.read_csv(out / "validation.csv", comment="#")
    mc_rows = results[results["check"].str.startswith("mc ")]
    assert len(mc_rows) == 2 * 4
    assert mc_rows["check"].str.endswith(" chi_s1").sum() == 2
    assert results["passed"].all()


def test_check_monte_carlo_reports_named_observables():
    config = ExperimentConfig(
        model="free", n=[4], beta=[0.5], ensemble="labeled", measurements=200, seed=2,
    )
    results = check_monte_carlo(config, sigma=5.0)
    assert [r.check.rsplit(" ", 1)[1] for r in results] == list(MC_OBSERVABLES)
    assert all("exact" in r.detail and "±" in r.detail for r in results)


def test_check_monte_carlo_skips_sizes_beyond_the_exhaustive_cap():
    config = ExperimentConfig(model="free", n=[9], beta=[1.0], ensemble="labeled")
    (result,) = check_monte_carlo(config, sigma=4.0)
    assert result.passed
    assert result.check == "monte_carlo"


@pytest.mark.slow
def test_validate_passes_on_a_small_experiment(tmp_path):
    out = tmp_path / "out"
    config = _config(tmp_path, "model: free\nn: [5]\nbeta: [0.0, 1.0]\nmeasurements: 1000\nseed: 5\n")
    assert main(["validate", "--config", config, "--out", str(out)]) == EXIT_OK
    results = pd.read_csv(out / "validation.csv", comment="#")
    assert results["passed"].all()


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        test_polya_command(Path(tmp))
    print("All tests passed!")
