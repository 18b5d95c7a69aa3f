"""
Tests for the command-line interface.

Every command runs through ``main(argv)`` against temporary files.
"""

import json

import numpy as np
import pandas as pd
import pytest

from shape_control import __version__
from shape_control.experiments.cli import create_parser, main
from tests.fixtures.sample_configs import get_heat_config, get_heat_path


def write_config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def error_record(capsys):
    """The JSON error line written last on stderr."""
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


@pytest.fixture
def heat_config(tmp_path):
    return write_config(tmp_path, get_heat_config())


class TestParser:
    """Test suite for create_parser."""

    def test_commands(self):
        parser = create_parser()
        for command in ("simulate", "sensitivity", "adjoint", "uc-check", "control", "bmatrix", "report"):
            args = parser.parse_args([command] if command == "bmatrix" else [command, "--config", "c.json"])
            assert args.command == command
            assert callable(args.func)

    def test_no_command(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().err


class TestSimulateCommand:
    """Test suite for simulate."""

    def test_writes_trajectory_and_summary(self, tmp_path, heat_config):
        out = tmp_path / "traj.csv"
        assert main(["simulate", "--config", heat_config, "--out", str(out), "--quiet"]) == 0
        header = out.read_text().splitlines()[0]
        expected = ["t"] + [f"u_{i}_{j}" for i in range(1, 4) for j in range(1, 4)]
        assert header == ",".join(expected)
        df = pd.read_csv(out)
        assert len(df) == 301
        assert df["t"].iloc[-1] == pytest.approx(0.1)

        summary = json.loads(out.with_suffix(".json").read_text())
        assert summary["command"] == "simulate"
        assert summary["version"] == __version__
        assert summary["config"]["seed"] == 7
        assert summary["path"] is None

    def test_needs_out(self, heat_config, capsys):
        assert main(["simulate", "--config", heat_config, "--quiet"]) == 2
        record = error_record(capsys)
        assert record["category"] == "configuration"
        assert record["exit_code"] == 2
        assert record["type"] == "ConfigurationError"

    def test_missing_config(self, tmp_path, capsys):
        assert main(["simulate", "--config", str(tmp_path / "absent.json"), "--out", "x.csv"]) == 2
        assert "not found" in error_record(capsys)["error"]

    def test_inadmissible_path(self, tmp_path, capsys):
        data = get_heat_config()
        data["path"] = get_heat_path(0.6)
        config = write_config(tmp_path, data)
        assert main(["simulate", "--config", config, "--out", str(tmp_path / "t.csv"), "--quiet"]) == 4
        assert error_record(capsys)["category"] == "admissibility"

    def test_cfl_violation(self, tmp_path, capsys):
        data = {"grid": {"a": 1.0, "b": 1.0, "M": 4, "N": 4}, "kind": "wave", "steps": 10, "K": 2}
        config = write_config(tmp_path, data)
        assert main(["simulate", "--config", config, "--out", str(tmp_path / "w.csv"), "--quiet"]) == 2
        record = error_record(capsys)
        assert record["type"] == "CFLViolationError"
        assert "dt <=" in record["suggestion"]


class TestDiagnosticCommands:
    """Test suite for sensitivity, adjoint and uc-check."""

    def test_uc_check_to_stdout(self, heat_config, capsys):
        assert main(["uc-check", "--config", heat_config, "--quiet"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) == {"command", "version", "config", "ndd", "unique_continuation", "verdict"}
        assert payload["command"] == "uc-check"
        assert payload["verdict"] == "unique"

    def test_adjoint_reruns_identical(self, tmp_path, heat_config):
        first, second = tmp_path / "a1.json", tmp_path / "a2.json"
        assert main(["adjoint", "--config", heat_config, "--out", str(first), "--quiet"]) == 0
        assert main(["adjoint", "--config", heat_config, "--out", str(second), "--quiet"]) == 0
        assert first.read_bytes() == second.read_bytes()
        assert json.loads(first.read_text())["duality"]["passed"] is True

    def test_seed_flag_overrides_config(self, tmp_path, heat_config):
        out = tmp_path / "adjoint.json"
        assert main(["adjoint", "--config", heat_config, "--seed", "99", "--out", str(out), "--quiet"]) == 0
        assert json.loads(out.read_text())["config"]["seed"] == 99

    def test_sensitivity(self, tmp_path, heat_config):
        out = tmp_path / "sensitivity.json"
        assert main(["sensitivity", "--config", heat_config, "--out", str(out), "--quiet"]) == 0
        payload = json.loads(out.read_text())
        assert payload["frechet"]["min_slope"] >= 1.9
        assert len(payload["frechet"]["directions"]) == 3
        assert payload["continuity"]["kind"] == "heat"


class TestControlCommand:
    """Test suite for control."""

    def test_rank_deficiency_exit_code(self, tmp_path, capsys):
        data = get_heat_config()
        data["source"] = {"type": "constant", "value": 0.0}
        config = write_config(tmp_path, data)
        target = tmp_path / "target.csv"
        pd.DataFrame({"value": np.ones(9)}).to_csv(target, index=False)
        assert main(["control", "--config", config, "--target", str(target), "--quiet"]) == 3
        assert error_record(capsys)["category"] == "non_convergence"

    def test_bad_target(self, tmp_path, heat_config, capsys):
        target = tmp_path / "target.csv"
        pd.DataFrame({"value": np.ones(4)}).to_csv(target, index=False)
        assert main(["control", "--config", heat_config, "--target", str(target), "--quiet"]) == 2
        assert "expected 9" in error_record(capsys)["error"]

    @pytest.mark.slow
    def test_manufactured_target_files(self, tmp_path, heat_config):
        out = tmp_path / "solution.json"
        assert main(["control", "--config", heat_config, "--out", str(out), "--quiet"]) == 0
        solution = json.loads(out.read_text())
        assert solution["target_source"] == "manufactured"
        assert solution["admissible"] is True
        assert solution["relative_residual"] <= 1e-6
        assert "manufactured_path" in solution

        residuals = pd.read_csv(tmp_path / "solution_residuals.csv")
        assert list(residuals.columns) == ["iteration", "residual", "relative_residual"]
        assert len(residuals) == solution["iterations"] + 1

        surjectivity = json.loads((tmp_path / "solution_surjectivity.json").read_text())
        assert surjectivity["surjectivity"]["verdict"] == "surjective"


class TestBmatrixCommand:
    """Test suite for bmatrix."""

    def test_stretch(self, capsys):
        assert main(["bmatrix", "--j11", "1.1", "--quiet"]) == 0
        payload = json.loads(capsys.readouterr().out)
        np.testing.assert_allclose(payload["B"], [[1 / 1.1, 0.0], [0.0, 1.1]], atol=1e-12)
        assert payload["det_B"] == pytest.approx(1.0)
        assert payload["abs_det_J"] == pytest.approx(1.1)
        assert payload["config"] == {"jacobian": [[1.1, 0.0], [0.0, 1.0]]}

    def test_singular(self, capsys):
        argv = ["bmatrix", "--j11", "1", "--j12", "2", "--j21", "2", "--j22", "4", "--quiet"]
        assert main(argv) == 1
        record = error_record(capsys)
        assert record["type"] == "SingularityError"
        assert record["category"] == "numerical"


class TestReportCommand:
    """Test suite for report."""

    @pytest.mark.slow
    def test_report_sections(self, tmp_path, heat_config):
        out = tmp_path / "report.json"
        assert main(["report", "--config", heat_config, "--out", str(out), "--quiet"]) == 0
        payload = json.loads(out.read_text())
        for key in ("simulation", "norm_bound", "sensitivity", "duality", "ndd", "surjectivity"):
            assert key in payload
        assert payload["norm_bound"]["satisfied"] is True
        assert payload["surjectivity"]["certificates_agree"] is True
        assert "basin" not in payload
