"""Tests for verdicts, diagnostics and the report text format."""

import math

import numpy as np
import pytest

from vortexpatch.core.continuation import ContinuationSummary
from vortexpatch.core.energy import EnergyFunctional, Field
from vortexpatch.core.mesh import assemble, build_interval_mesh
from vortexpatch.core.oracles import oracle_1d
from vortexpatch.core.solve import seed_bump
from vortexpatch.errors import ArtifactError
from vortexpatch.report import (
    RunReport,
    Verdicts,
    compute_verdicts,
    energy_identity_residual,
    node_components,
    parse_report,
    report_config_text,
    verdict_names,
)
from vortexpatch.run_config import parse_config

LAM = 100.0


@pytest.fixture
def functional(small_square_forms, pb_model):
    return EnergyFunctional(small_square_forms, pb_model, LAM)


@pytest.fixture
def nested_pair(small_square_forms):
    mesh = small_square_forms.mesh
    return seed_bump(mesh, 3.0).values, seed_bump(mesh, 1.5).values


class TestVerdicts:
    def test_nested_bumps(self, functional, nested_pair, small_square_forms):
        big, small = nested_pair
        verdicts, numbers = compute_verdicts(functional, big, small, 0.01)
        interior = ~small_square_forms.mesh.boundary_mask

        assert numbers.j_u0 == functional.eval_j(Field.on(small_square_forms, big)).total
        assert numbers.min_interior_u1 == small[interior].min()
        assert numbers.max_order_violation <= 0.0
        assert verdicts.ordered
        assert verdicts.positive
        assert verdicts.phase_nonempty
        assert verdicts.minimizer_below_omega == (numbers.j_u0 < -small_square_forms.measure)
        assert verdicts.u1_not_minimizer == (numbers.j_u0 < numbers.j_u1)
        assert verdicts.all == all(value for _, value in verdicts.items())

    def test_swapped_branches_break_ordering(self, functional, nested_pair):
        big, small = nested_pair
        verdicts, numbers = compute_verdicts(functional, small, big, 0.01)
        assert not verdicts.ordered
        assert numbers.max_order_violation == pytest.approx(1.5)

    def test_zero_branch_fails_nodal_checks(self, functional, nested_pair, small_square_forms):
        big, _ = nested_pair
        zero = np.zeros(small_square_forms.n)
        verdicts, numbers = compute_verdicts(functional, big, zero, 0.01)
        assert numbers.level_measure_u1 == 0.0
        assert not verdicts.positive
        assert not verdicts.phase_nonempty
        assert not verdicts.mountain_pass_above_level_set
        assert verdicts.mountain_pass_above_omega

    def test_level_band_counts_only_the_upper_side(self, functional, nested_pair, small_square_forms):
        big, _ = nested_pair
        interior = ~small_square_forms.mesh.boundary_mask
        interior_mass = float(small_square_forms.lumped_mass[interior].sum())

        below = np.where(interior, 0.995, 0.0)
        _, numbers = compute_verdicts(functional, big, below, 0.01)
        assert numbers.level_measure_u1 == 0.0

        above = np.where(interior, 1.005, 0.0)
        _, numbers = compute_verdicts(functional, big, above, 0.01)
        assert numbers.level_measure_u1 == pytest.approx(interior_mass)

    def test_mountain_pass_below_omega_is_flagged(self, functional, nested_pair):
        big, _ = nested_pair
        verdicts, numbers = compute_verdicts(functional, big, big, 0.01)
        assert numbers.j_u1 == numbers.j_u0
        assert verdicts.mountain_pass_above_omega == (numbers.j_u1 > -functional.forms.measure)
        assert not verdicts.u1_not_minimizer

    def test_verdict_names_follow_fields(self):
        assert verdict_names()[0] == "minimizer_below_omega"
        assert len(verdict_names()) == 7
        assert "mountain_pass_above_omega" in verdict_names()


class TestDiagnostics:
    def test_node_components(self, interval_forms):
        mask = np.zeros(interval_forms.n, dtype=bool)
        assert node_components(interval_forms, mask) == 0
        mask[5:11] = True
        mask[20:26] = True
        assert node_components(interval_forms, mask) == 2
        assert node_components(interval_forms, np.ones(interval_forms.n, dtype=bool)) == 1

    def test_energy_identity_on_oracle(self, pb_model):
        forms = assemble(build_interval_mesh(1024))
        oracle = oracle_1d(60.0)
        u = oracle.profile(oracle.a_stable, forms.mesh.vertices[:, 0])
        functional = EnergyFunctional(forms, pb_model, 60.0)
        assert energy_identity_residual(functional, u) < 0.05
        assert energy_identity_residual(functional, np.zeros(forms.n)) == 0.0


def _summary(**overrides):
    values = dict(omega_measure=1.0, c1_estimate=-3.5, pilot=None, eps_zero=0.2)
    values.update(overrides)
    return ContinuationSummary(**values)


class TestRunReport:
    def test_status_from_summary(self):
        assert RunReport.from_summary([], _summary()).status == "ok"
        assert RunReport.from_summary([], _summary(error="stage failed")).status == "failed"
        assert RunReport.from_summary([], _summary(below_threshold=True)).status == "below_threshold"

    def test_text_round_trip(self, functional, nested_pair):
        config_lines = ["mesh.kind = square", "mesh.n = 8", "solve.lambda = 100.0"]
        report = RunReport.from_summary(config_lines, _summary())
        report.verdicts, report.numbers = compute_verdicts(functional, *nested_pair, 0.01)
        report.diagnostics = {"nested": True, "lipschitz_ratio_u0": 0.1 + 0.2}

        entries = parse_report(report.to_text())
        assert entries["run.status"] == "ok"
        assert math.isnan(float(entries["run.eps_final"]))
        assert float(entries["energy.j_u0"]) == report.numbers.j_u0
        assert entries["verdict.ordered"] == "true"
        assert entries["diagnostic.nested"] == "true"
        assert float(entries["diagnostic.lipschitz_ratio_u0"]) == 0.1 + 0.2
        assert parse_config(report_config_text(entries))[2].lam == 100.0

    def test_error_line(self):
        report = RunReport.from_summary([], _summary(error="stage eps=0.1: collapsed"))
        assert "run.error = stage eps=0.1: collapsed" in report.to_lines()


class TestParseReport:
    def test_rejects_malformed_line(self):
        with pytest.raises(ArtifactError, match="line 2"):
            parse_report("run.status = ok\nnot a pair\n")

    def test_rejects_duplicate(self):
        with pytest.raises(ArtifactError, match="repeats"):
            parse_report("run.status = ok\nrun.status = failed\n")

    def test_needs_config_echo(self):
        with pytest.raises(ArtifactError):
            report_config_text(parse_report("run.status = ok\n"))


def test_verdicts_all_false_when_any_false():
    verdicts = Verdicts(True, True, True, True, True, True, False)
    assert not verdicts.all
