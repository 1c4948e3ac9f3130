"""End-to-end tests for the CLI and the run orchestrator."""

import math
from pathlib import Path

import pytest

from vortexpatch.artifacts import read_stages
from vortexpatch.cli import main
from vortexpatch.report import parse_report, verdict_names
from vortexpatch.runner import EXIT_BELOW_THRESHOLD, EXIT_FAILURE, EXIT_OK, RunOrchestrator

BELOW_THRESHOLD = """
mesh.kind = square
mesh.n = 8
solve.lambda = 0.1
solve.restarts = 1
"""

INTERVAL = """
mesh.kind = interval
mesh.n = 64
solve.lambda = 60
solve.eps_start = 0.05
solve.eps_min = 0.005
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestOracleCommands:
    def test_oracle1d_writes_table(self, tmp_path):
        assert main(["oracle1d", "--lambda", "60", "--out", str(tmp_path)]) == EXIT_OK
        entries = parse_report((tmp_path / "oracle1d.txt").read_text())
        assert 0.035 < float(entries["oracle.a_stable"]) < 0.037

    def test_oracle1d_below_threshold_fails(self):
        assert main(["oracle1d", "--lambda", "5"]) == EXIT_FAILURE

    def test_oracleradial(self, tmp_path):
        assert main(["oracleradial", "--lambda", "100", "-o", str(tmp_path)]) == EXIT_OK
        entries = parse_report((tmp_path / "oracleradial.txt").read_text())
        assert float(entries["oracle.radius"]) == 1.0


class TestEntryPoint:
    def test_no_command(self):
        assert main([]) == EXIT_FAILURE

    def test_show_config(self):
        assert main(["--show-config"]) == EXIT_OK

    def test_threads_must_be_positive(self, tmp_path):
        config = _write(tmp_path, "run.conf", BELOW_THRESHOLD)
        assert main(["run", config, "--threads", "0", "--out", str(tmp_path / "out")]) == EXIT_FAILURE

    def test_missing_config_file(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.conf"), "--out", str(tmp_path / "out")]) == EXIT_FAILURE


class TestRun:
    def test_invalid_config_writes_error(self, tmp_path):
        config = _write(tmp_path, "bad.conf", "solve.lambda = 1\nmesh.colour = red\n")
        out = tmp_path / "out"
        assert main(["run", config, "--out", str(out)]) == EXIT_FAILURE
        error = (out / "error.txt").read_text()
        assert error.startswith("error = invalid configuration")
        assert "mesh.colour" in error
        assert not (out / "u0.csv").exists()

    def test_below_threshold_exit_and_verify(self, tmp_path):
        config = _write(tmp_path, "low.conf", BELOW_THRESHOLD)
        out = tmp_path / "out"
        assert main(["run", config, "--out", str(out)]) == EXIT_BELOW_THRESHOLD

        entries = parse_report((out / "report.txt").read_text())
        assert entries["run.status"] == "below_threshold"
        assert (out / "u0.csv").exists()
        assert (out / "cells.csv").exists()
        assert not (out / "u1.csv").exists()
        assert main(["verify", str(out)]) == EXIT_OK

        lines = (out / "u0.csv").read_text().splitlines()
        lines[1] = "0,0.001"
        (out / "u0.csv").write_text("\n".join(lines) + "\n")
        outcome = RunOrchestrator().verify(out)
        assert outcome.exit_code == EXIT_FAILURE
        assert "Dirichlet" in outcome.error

    def test_verify_missing_directory(self, tmp_path):
        assert main(["verify", str(tmp_path / "empty")]) == EXIT_FAILURE

    def test_orchestrator_reports_error(self, tmp_path):
        outcome = RunOrchestrator().run("mesh.n = 4\n", tmp_path)
        assert outcome.exit_code == EXIT_FAILURE
        assert outcome.report is None
        assert "solve.lambda" in outcome.error


@pytest.mark.slow
class TestTwoBranchRun:
    @pytest.fixture(scope="class")
    def run_dir(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("interval")
        config = out / "interval.conf"
        config.write_text(INTERVAL)
        assert main(["run", str(config), "--out", str(out)]) == EXIT_OK
        return out

    def test_artifacts_present(self, run_dir):
        for name in ("u0.csv", "u1.csv", "mesh.csv", "cells.csv", "stages.csv", "fb_u0.csv", "fb_u1.csv", "report.txt"):
            assert (run_dir / name).is_file()
        assert not (run_dir / "error.txt").exists()

    def test_report_verdicts(self, run_dir):
        entries = parse_report((run_dir / "report.txt").read_text())
        assert entries["run.status"] == "ok"
        for name in verdict_names():
            assert entries[f"verdict.{name}"] == "true", name
        for branch in ("u0", "u1"):
            assert math.isfinite(float(entries[f"diagnostic.lipschitz_ratio_{branch}"]))

    def test_verify_reproduces(self, run_dir):
        outcome = RunOrchestrator().verify(run_dir)
        assert outcome.exit_code == EXIT_OK
        assert outcome.mismatches == []
        assert any(check.name == "energy.j_u0" for check in outcome.checks)

    def test_verify_detects_edited_field(self, run_dir, tmp_path):
        edited = tmp_path / "edited"
        edited.mkdir()
        for path in run_dir.iterdir():
            (edited / path.name).write_bytes(path.read_bytes())

        lines = (edited / "u0.csv").read_text().splitlines()
        vertex, value = lines[33].split(",")
        lines[33] = f"{vertex},{float(value) * 1.001!r}"
        (edited / "u0.csv").write_text("\n".join(lines) + "\n")

        assert main(["verify", str(edited)]) == EXIT_FAILURE


@pytest.mark.slow
class TestSquareRun:
    """λ = 50 on the 32x32 unit square, ε halved from 0.1 to 1e-3."""

    @pytest.fixture(scope="class")
    def square_run(self, tmp_path_factory):
        config = Path(__file__).resolve().parents[1] / "vortexpatch" / "data" / "square.conf"
        out = tmp_path_factory.mktemp("square")
        outcome = RunOrchestrator(threads=1).run(config.read_text(), out)
        assert outcome.exit_code == EXIT_OK, outcome.error
        return outcome, out

    def test_every_verdict_holds(self, square_run):
        outcome, _ = square_run
        failed = [name for name, value in outcome.report.verdicts.items() if not value]
        assert failed == []
        assert outcome.report.numbers.j_u0 < -1.0 < outcome.report.numbers.j_u1

    def test_stage_bounds_from_stages_csv(self, square_run):
        _, out = square_run
        stages = read_stages(out / "stages.csv")
        assert stages
        for stage in stages:
            assert 0.0 < stage.j_eps_u1 <= stage.mp_upper
            assert stage.j_eps_u0 <= stage.minimizer_bound

    def test_gradient_stays_bounded_across_stages(self, square_run):
        _, out = square_run
        stages = read_stages(out / "stages.csv")
        assert stages[-1].max_grad_u0 <= 2.0 * stages[0].max_grad_u0
