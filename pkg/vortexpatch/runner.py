"""
Run Orchestration
=================

Batch pipeline behind the CLI.

run:
1. Parses the run configuration (nothing is solved if it is invalid)
2. Builds and assembles the mesh
3. Runs the ε-continuation for both branches
4. Evaluates verdicts, free-boundary reports and diagnostics
5. Writes u0.csv, u1.csv, mesh.csv, cells.csv, stages.csv, fb_u0.csv,
   fb_u1.csv and report.txt under the output directory

verify:
Rebuilds the mesh from the configuration echoed in report.txt, reads the
fields back and recomputes every verdict. Nothing outside the report
directory is consulted.

Exit codes: 0 success, 1 failure (error.txt is written next to whatever
artifacts exist), 2 λ not above the two-solution threshold.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from vortexpatch import artifacts
from vortexpatch.config import Config
from vortexpatch.core.continuation import continuation, estimate_lambda_star
from vortexpatch.core.energy import EnergyFunctional, Field
from vortexpatch.core.freeboundary import fb_report
from vortexpatch.core.mesh import AssembledForms, assemble
from vortexpatch.core.model import NonlinearityModel
from vortexpatch.core.solve import BranchResult
from vortexpatch.errors import ArtifactError, VortexPatchError
from vortexpatch.report import (
    RunReport,
    compute_verdicts,
    energy_identity_residual,
    fb_summary,
    node_components,
    parse_report,
    report_config_text,
)
from vortexpatch.run_config import parse_config, render_config, with_threads
from vortexpatch.telemetry import get_tracer

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BELOW_THRESHOLD = 2


@dataclass
class RunOutcome:
    exit_code: int
    out_dir: Path
    report: RunReport | None = None
    error: str | None = None


@dataclass
class VerifyCheck:
    name: str
    stored: str
    recomputed: str

    @property
    def ok(self) -> bool:
        return self.stored == self.recomputed


@dataclass
class VerifyOutcome:
    exit_code: int
    checks: list[VerifyCheck] = field(default_factory=list)
    error: str | None = None

    @property
    def mismatches(self) -> list[VerifyCheck]:
        return [c for c in self.checks if not c.ok]


def _flag(value: bool) -> str:
    return str(bool(value)).lower()


class RunOrchestrator:
    """
    Runs and verifies vortexpatch jobs.

    One orchestration thread; `threads` is handed to the solver, which may
    evaluate independent starts and path images in parallel.
    """

    def __init__(self, threads: int | None = None):
        """
        Args:
            threads: Solver worker count (Config.THREADS if not given)
        """
        self.threads = threads if threads is not None else Config.THREADS
        self.tracer = get_tracer()

    # =========================================================================
    # RUN
    # =========================================================================

    def run(self, config_text: str, out_dir: Path) -> RunOutcome:
        """
        Execute one configuration end to end.

        Args:
            config_text: Run configuration document
            out_dir: Artifact directory (created if missing)

        Returns:
            RunOutcome with the exit code and the report (None if the run
            failed before the continuation finished its pilot)
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        with self.tracer.start_as_current_span("runner.run") as span:
            # Step 1: Configuration
            try:
                mesh_spec, model, solve_config = parse_config(config_text)
            except VortexPatchError as e:
                return self._fail(out_dir, f"invalid configuration: {e}")
            solve_config = with_threads(solve_config, self.threads)
            config_lines = render_config(mesh_spec, model, solve_config)
            span.set_attribute("lambda", solve_config.lam)
            span.set_attribute("mesh.kind", mesh_spec.kind)

            # Step 2: Mesh
            try:
                mesh = mesh_spec.build()
                forms = assemble(mesh)
            except VortexPatchError as e:
                return self._fail(out_dir, f"mesh: {e}")
            artifacts.write_mesh(out_dir / "mesh.csv", mesh)
            artifacts.write_cells(out_dir / "cells.csv", mesh)
            logger.info("mesh %s: %d vertices, %d cells", mesh_spec.kind, mesh.n_vertices, mesh.n_cells)

            # Step 3: Continuation
            try:
                u0, u1, summary = continuation(solve_config, forms, model)
            except VortexPatchError as e:
                return self._fail(out_dir, f"solver: {e}")

            report = RunReport.from_summary(config_lines, summary)
            artifacts.write_field(out_dir / "u0.csv", u0.field)
            artifacts.write_stages(out_dir / "stages.csv", summary.stages)

            if summary.below_threshold:
                artifacts.write_text(out_dir / "report.txt", report.to_text())
                span.set_attribute("exit_code", EXIT_BELOW_THRESHOLD)
                logger.warning("lambda=%g is below the two-solution threshold", solve_config.lam)
                return RunOutcome(EXIT_BELOW_THRESHOLD, out_dir, report)

            # Step 4: Verdicts and diagnostics
            functional = EnergyFunctional(forms, model, solve_config.lam)
            if u1 is not None and summary.stages:
                artifacts.write_field(out_dir / "u1.csv", u1.field)
                self._evaluate(report, functional, model, u0, u1, out_dir)

            # Step 5: Report
            artifacts.write_text(out_dir / "report.txt", report.to_text())
            if report.error:
                span.set_attribute("exit_code", EXIT_FAILURE)
                artifacts.write_error(out_dir, report.error)
                return RunOutcome(EXIT_FAILURE, out_dir, report, report.error)

            span.set_attribute("exit_code", EXIT_OK)
            span.set_attribute("verdicts.all", report.verdicts.all)
            return RunOutcome(EXIT_OK, out_dir, report)

    def _evaluate(
        self,
        report: RunReport,
        functional: EnergyFunctional,
        model: NonlinearityModel,
        u0: BranchResult,
        u1: BranchResult,
        out_dir: Path,
    ):
        forms = functional.forms
        v0, v1 = u0.values, u1.values

        report.verdicts, report.numbers = compute_verdicts(functional, v0, v1, report.eps_final)

        delta = Config.FB_DELTA_FACTOR * report.eps_final
        for name, branch in (("u0", u0), ("u1", u1)):
            fb = fb_report(forms, branch.field, functional.lam, model, delta)
            artifacts.write_fb(out_dir / f"fb_{name}.csv", fb)
            report.fb[name] = fb_summary(fb)

        report.diagnostics.update(self._diagnostics(functional, v0, v1, report))

    @staticmethod
    def _diagnostics(functional: EnergyFunctional, v0: np.ndarray, v1: np.ndarray, report: RunReport) -> dict:
        forms = functional.forms
        first, last = report.stages[0], report.stages[-1]
        above0, above1 = v0 > 1.0, v1 > 1.0
        return {
            "components_below_u0": node_components(forms, v0 < 1.0),
            "components_below_u1": node_components(forms, v1 < 1.0),
            "nested": bool(np.all(above0[above1]) and np.all((v1 < 1.0)[v0 < 1.0])),
            "energy_identity_u0": energy_identity_residual(functional, v0),
            "energy_identity_u1": energy_identity_residual(functional, v1),
            "lipschitz_ratio_u0": (
                last.max_grad_u0 / first.max_grad_u0 if first.max_grad_u0 > 0.0 else math.nan
            ),
            "lipschitz_ratio_u1": (
                last.max_grad_u1 / first.max_grad_u1 if first.max_grad_u1 > 0.0 else math.nan
            ),
            "stages_converged": all(s.converged_u0 and s.converged_u1 for s in report.stages),
            "stage_bounds_ok": all(s.minimizer_bound_ok and s.mp_bounds_ok for s in report.stages),
        }

    @staticmethod
    def _fail(out_dir: Path, message: str) -> RunOutcome:
        artifacts.write_error(out_dir, message)
        return RunOutcome(EXIT_FAILURE, out_dir, None, message)

    # =========================================================================
    # VERIFY
    # =========================================================================

    def verify(self, report_dir: Path) -> VerifyOutcome:
        """
        Recompute verdicts from the artifacts of a run.

        Args:
            report_dir: Directory written by run()

        Returns:
            VerifyOutcome; exit code 1 on any discrepancy or unreadable file
        """
        report_dir = Path(report_dir)
        with self.tracer.start_as_current_span("runner.verify") as span:
            try:
                checks = self._verify_checks(report_dir)
            except VortexPatchError as e:
                logger.error("verify failed: %s", e)
                span.set_attribute("error", str(e))
                return VerifyOutcome(EXIT_FAILURE, error=str(e))

            outcome = VerifyOutcome(EXIT_OK if all(c.ok for c in checks) else EXIT_FAILURE, checks)
            span.set_attribute("checks", len(checks))
            span.set_attribute("mismatches", len(outcome.mismatches))
            return outcome

    def _verify_checks(self, report_dir: Path) -> list[VerifyCheck]:
        entries = parse_report(artifacts.read_text(report_dir / "report.txt"))

        # Step 1: Rebuild the mesh from the echoed configuration
        mesh_spec, model, solve_config = parse_config(report_config_text(entries))
        mesh = mesh_spec.build()
        artifacts.check_mesh(report_dir / "mesh.csv", mesh)
        artifacts.check_cells(report_dir / "cells.csv", mesh)
        forms = assemble(mesh)
        functional = EnergyFunctional(forms, model, solve_config.lam)

        status = self._entry(entries, "run.status")
        u0 = artifacts.read_field(report_dir / "u0.csv", forms)

        if status == "below_threshold":
            return self._verify_below_threshold(entries, functional, u0, report_dir)
        if status != "ok":
            raise ArtifactError(f"run did not complete (status {status!r}): nothing to verify")

        # Step 2: Verdicts from the fields
        u1 = artifacts.read_field(report_dir / "u1.csv", forms)
        eps_final = float(self._entry(entries, "run.eps_final"))
        verdicts, numbers = compute_verdicts(functional, u0.values, u1.values, eps_final)

        checks = [
            VerifyCheck(f"verdict.{name}", self._entry(entries, f"verdict.{name}"), _flag(value))
            for name, value in verdicts.items()
        ]
        checks += [
            VerifyCheck(f"energy.{name}", self._entry(entries, f"energy.{name}"), repr(getattr(numbers, name)))
            for name in ("j_u0", "j_u1")
        ]

        # Step 3: Stage bounds from stages.csv
        for k, stage in enumerate(artifacts.read_stages(report_dir / "stages.csv")):
            checks.append(VerifyCheck(
                f"stage.{k}.minimizer_bound_ok",
                _flag(stage.minimizer_bound_ok),
                _flag(stage.j_eps_u0 <= stage.minimizer_bound),
            ))
            checks.append(VerifyCheck(
                f"stage.{k}.mp_bounds_ok",
                _flag(stage.mp_bounds_ok),
                _flag(0.0 < stage.j_eps_u1 <= stage.mp_upper),
            ))
        return checks

    def _verify_below_threshold(
        self, entries: dict[str, str], functional: EnergyFunctional, u0: Field, report_dir: Path
    ) -> list[VerifyCheck]:
        if (report_dir / "u1.csv").exists():
            raise ArtifactError("below-threshold run must not carry u1.csv")
        energy = functional.eval_j(u0).total
        omega = functional.forms.measure
        return [
            VerifyCheck("run.c1_estimate", self._entry(entries, "run.c1_estimate"), repr(energy)),
            VerifyCheck("below_threshold", "true", _flag(not energy < -omega)),
        ]

    @staticmethod
    def _entry(entries: dict[str, str], key: str) -> str:
        try:
            return entries[key]
        except KeyError:
            raise ArtifactError(f"report.txt has no {key!r}") from None

    # =========================================================================
    # THRESHOLD
    # =========================================================================

    def threshold(self, config_text: str, lo: float, hi: float, tol: float = 1e-2) -> float:
        """
        Estimate λ* for the configured mesh and nonlinearity.

        Raises:
            ConfigError: invalid configuration
            InvalidArgumentError: [lo, hi] does not bracket the threshold
        """
        mesh_spec, model, solve_config = parse_config(config_text)
        forms: AssembledForms = assemble(mesh_spec.build())
        return estimate_lambda_star(with_threads(solve_config, self.threads), forms, model, lo, hi, tol)
