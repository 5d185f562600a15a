"""
Tests for layered experiment configuration.
"""

import pytest

from ..experiment import ConfigError, ExperimentConfig, load_config
from ..hamiltonian import Ensemble, ModelKind


def _write(tmp_path, text, name="experiment.yaml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture(autouse=True)
def _clean_environment(monkeypatch):
    monkeypatch.delenv("QUANTUM_GRAPHS_THREADS", raising=False)
    monkeypatch.delenv("QUANTUM_GRAPHS_OUTPUT_DIR", raising=False)


def test_defaults_alone_are_runnable():
    config = load_config()
    assert config.model is ModelKind.FREE
    assert config.betas() == [0.0, 0.5, 1.0, 2.0]
    assert config.ensembles() == [Ensemble.UNLABELED, Ensemble.LABELED]
    assert config.validate_sigma == 4.0


def test_user_file_overrides_defaults(tmp_path):
    path = _write(tmp_path, "model: ising\nE0: -0.5\nn: [6, 8]\nensemble: unlabeled\nseed: 9\n")
    config = load_config(path)
    assert config.model is ModelKind.ISING
    assert config.n == [6, 8]
    assert config.E0 == -0.5
    assert config.seed == 9
    assert config.grid()[:2] == [(6, 0.0), (6, 0.5)]
    assert config.model_params(8).J == pytest.approx(1 / 21)


def test_beta_range_replaces_default_list(tmp_path):
    path = _write(tmp_path, "beta_start: 0\nbeta_stop: 5\nbeta_count: 11\n")
    config = load_config(path)
    assert config.beta is None
    assert config.betas()[:3] == [0.0, 0.5, 1.0]
    assert len(config.betas()) == 11


def test_scalar_values_become_lists(tmp_path):
    config = load_config(_write(tmp_path, "n: 7\nbeta: 1.5\n"))
    assert config.n == [7]
    assert config.betas() == [1.5]


def test_command_line_overrides_win(tmp_path):
    path = _write(tmp_path, "seed: 3\nthreads: 2\n")
    config = load_config(path, overrides={"seed": 11, "threads": None, "output_dir": str(tmp_path)})
    assert config.seed == 11
    assert config.threads == 2
    assert config.output_dir == str(tmp_path)


def test_environment_defaults_sit_below_the_user_file(tmp_path, monkeypatch):
    monkeypatch.setenv("QUANTUM_GRAPHS_THREADS", "4")
    monkeypatch.setenv("QUANTUM_GRAPHS_OUTPUT_DIR", "from-env")
    assert load_config().threads == 4
    config = load_config(_write(tmp_path, "output_dir: from-file\n"))
    assert config.output_dir == "from-file"
    assert config.threads == 4


@pytest.mark.parametrize(
    "text, field",
    [
        ("model: potts\n", "model"),
        ("n: [1]\n", "n"),
        ("model: ising\nn: [2]\n", "n"),
        ("beta: [-1.0]\n", "beta"),
        ("beta: [.inf]\n", "beta"),
        ("measurements: 0\n", "measurements"),
        ("colour: red\n", "colour"),
        ("couplings: {J: 1}\n", "couplings"),
        ("n: [[3, 4]]\n", "n"),
    ],
)
def test_config_errors_name_the_field(tmp_path, text, field):
    with pytest.raises(ConfigError) as excinfo:
        load_config(_write(tmp_path, text))
    assert excinfo.value.field == field, str(excinfo.value)


def test_beta_list_and_range_in_one_file_conflict(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        load_config(_write(tmp_path, "beta: [1.0]\nbeta_start: 0\nbeta_stop: 1\nbeta_count: 3\n"))
    assert excinfo.value.field == "beta"


def test_unreadable_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "- just\n- a list\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "model: [free\n"))


def test_canonical_json_is_stable():
    a = ExperimentConfig(model="free", n=[5], beta=[1.0, 2.0])
    b = ExperimentConfig(n=[5], beta=[1.0, 2.0], model="free")
    assert a.canonical_json() == b.canonical_json()
    assert a.sha256() == b.sha256()
    assert a.sha256() != ExperimentConfig(model="free", n=[5], beta=[1.0]).sha256()


def test_output_location_and_threads_do_not_change_the_hash():
    a = ExperimentConfig(model="free", n=[5], beta=[1.0], output_dir="runs/a", threads=1)
    b = ExperimentConfig(model="free", n=[5], beta=[1.0], output_dir="/tmp/elsewhere/b", threads=8)
    assert a.canonical_json() == b.canonical_json()
    assert a.sha256() == b.sha256()
    assert "output_dir" not in a.canonical_json()
    assert "threads" not in a.canonical_json()


def test_chain_template_carries_run_settings():
    config = ExperimentConfig(model="free", n=[6], beta=[0.5], seed=5, measurements=77, start="cold")
    template = config.chain_template(Ensemble.LABELED)
    assert template.seed == 5
    assert template.target_measurements == 77
    assert template.start == "cold"
    assert template.params.n == 6


if __name__ == "__main__":
    test_defaults_alone_are_runnable()
    test_canonical_json_is_stable()
    print("All tests passed!")
