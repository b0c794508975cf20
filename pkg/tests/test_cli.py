import json

import pytest

from mfris_ee import cli
from mfris_ee.application.use_cases import experiment_use_cases as uc
from tests.test_use_cases import _StubSolver


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch):
    for name in ("MFRIS_HARNESS__OUTPUT_DIR", "MFRIS_HARNESS__WORKERS", "MFRIS_HARNESS__SEEDS"):
        monkeypatch.delenv(name, raising=False)


def test_complexity_prints_json(capsys):
    code = cli.main(["complexity", "--N", "6", "--M", "32", "--K", "6"])
    assert code == cli.EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["block_sizes"]["a2"] == 385


def test_missing_config_file_is_a_usage_error(tmp_path, capsys):
    code = cli.main(["complexity", "--N", "2", "--M", "2", "--K", "1", "--config", str(tmp_path / "none.toml")])
    assert code == cli.EXIT_USAGE
    assert "not found" in capsys.readouterr().err


def test_unknown_scheme_is_a_usage_error(tmp_path):
    code = cli.main([
        "sweep", "--axis", "M", "--values", "4", "--schemes", "HOLO-RIS", "--output-dir", str(tmp_path),
    ])
    assert code == cli.EXIT_USAGE


def test_sweep_writes_csv_and_exits_cleanly(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(uc, "build_solver", lambda settings, error_model: _StubSolver())
    code = cli.main([
        "sweep", "--axis", "M", "--values", "4", "6", "--error-models", "perfect",
        "--seeds", "2", "--output-dir", str(tmp_path), "--name", "desk_m",
    ])
    assert code == cli.EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["rows"] == 4
    assert (tmp_path / "desk_m.csv").is_file()
    assert (tmp_path / "desk_m_summary.csv").is_file()


def test_sweep_with_failed_points_exits_nonzero(tmp_path, monkeypatch):
    monkeypatch.setattr(uc, "build_solver", lambda settings, error_model: _StubSolver())
    code = cli.main([
        "sweep", "--axis", "M", "--values", "4", "--schemes", "NO-RIS", "--error-models", "perfect",
        "--seeds", "2", "--output-dir", str(tmp_path),
    ])
    assert code == cli.EXIT_POINT_FAILED


def test_plot_from_sweep_summary(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(uc, "build_solver", lambda settings, error_model: _StubSolver())
    cli.main(["sweep", "--axis", "N", "--values", "2", "--error-models", "perfect", "--seeds", "1",
              "--output-dir", str(tmp_path)])
    capsys.readouterr()
    code = cli.main(["plot", "--csv", str(tmp_path / "sweep_N_summary.csv"), "--output-dir", str(tmp_path)])
    assert code == cli.EXIT_OK
    assert (tmp_path / "ee_vs_N.png").is_file()
    assert (tmp_path / "ee_vs_N_series.csv").is_file()


def test_subcommand_is_required():
    with pytest.raises(SystemExit):
        cli.main([])


def test_feasibility_with_failed_checks_exits_nonzero(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(uc, "_feasibility_point", lambda job: None if job.seed == 1 else True)
    code = cli.main([
        "feasibility", "--M", "2", "--N", "2", "--delta", "0", "--drops", "3", "--output-dir", str(tmp_path),
    ])
    assert code == cli.EXIT_POINT_FAILED
    payload = json.loads(capsys.readouterr().out)
    assert payload["failed_points"] == 1
    assert payload["table"][0]["rate"] == 1.0


def test_convergence_with_a_failed_run_exits_nonzero(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(uc, "build_solver", lambda settings, error_model: _StubSolver())

    def build(settings, scheme, error_model, seed):
        raise RuntimeError("solver bug")

    monkeypatch.setattr(uc, "build_scenario", build)
    code = cli.main(["convergence", "--K", "1", "--error-models", "bounded", "--output-dir", str(tmp_path)])
    assert code == cli.EXIT_POINT_FAILED
    assert json.loads(capsys.readouterr().out)["failed_points"] == 1


def test_convergence_exits_cleanly_when_every_run_finishes(tmp_path, monkeypatch):
    monkeypatch.setattr(uc, "build_solver", lambda settings, error_model: _StubSolver())
    code = cli.main(["convergence", "--K", "1", "--error-models", "bounded", "--output-dir", str(tmp_path)])
    assert code == cli.EXIT_OK
