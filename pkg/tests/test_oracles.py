"""Tests for the closed-form 1D and radial solutions."""

import math

import numpy as np
import pytest

from vortexpatch.core.continuation import continuation
from vortexpatch.core.freeboundary import extract_level_set, fb_report
from vortexpatch.core.mesh import assemble, build_disk_mesh, build_interval_mesh
from vortexpatch.core.oracles import matching_1d, matching_radial, oracle_1d, oracle_radial, threshold_1d
from vortexpatch.core.solve import SolveConfig
from vortexpatch.errors import InvalidArgumentError, NoSolutionError


class TestOracle1D:
    def test_both_roots_at_sixty(self):
        oracle = oracle_1d(60.0)
        assert 0.035 < oracle.a_stable < 0.037
        assert 0.455 < oracle.a_unstable < 0.458
        for a in (oracle.a_stable, oracle.a_unstable):
            assert matching_1d(60.0, a) == pytest.approx(0.0, abs=1e-8)
        assert oracle.energy_stable < -1.0 < oracle.energy_unstable

    def test_slopes_satisfy_jump(self):
        oracle = oracle_1d(60.0)
        inside, outside = oracle.slopes(oracle.a_stable)
        assert inside**2 - outside**2 == pytest.approx(2.0, abs=1e-6)

    def test_profile_is_continuous_at_free_boundary(self):
        oracle = oracle_1d(60.0)
        a = oracle.a_stable
        values = oracle.profile(a, [0.0, a, 0.5, 1.0 - a, 1.0])
        assert values[[0, 4]].tolist() == [0.0, 0.0]
        assert values[[1, 3]] == pytest.approx([1.0, 1.0])
        assert values[2] == pytest.approx(1.0 + 30.0 * (0.5 - a) ** 2)

    def test_threshold_brackets_existence(self):
        t = threshold_1d()
        oracle_1d(1.05 * t)
        with pytest.raises(NoSolutionError):
            oracle_1d(0.95 * t)

    def test_below_threshold(self):
        with pytest.raises(NoSolutionError):
            oracle_1d(5.0)

    def test_invalid_lambda(self):
        with pytest.raises(InvalidArgumentError):
            oracle_1d(0.0)


class TestOracleRadial:
    def test_both_roots_at_hundred(self):
        oracle = oracle_radial(100.0)
        assert 0.97 < oracle.rho_stable < 0.99
        assert 0.09 < oracle.rho_unstable < 0.1
        for rho in (oracle.rho_stable, oracle.rho_unstable):
            assert matching_radial(100.0, 1.0, rho) == pytest.approx(0.0, abs=1e-6)
        assert oracle.energy_stable < -math.pi < oracle.energy_unstable

    def test_profile_matches_at_free_boundary(self):
        oracle = oracle_radial(100.0)
        rho = oracle.rho_unstable
        points = np.array([[0.0, 0.0], [rho, 0.0], [0.0, 1.0]])
        values = oracle.profile(rho, points)
        assert values[0] == pytest.approx(1.0 + 25.0 * rho**2)
        assert values[1] == pytest.approx(1.0)
        assert values[2] == pytest.approx(0.0, abs=1e-14)

    def test_radius_scales_roots(self):
        assert oracle_radial(100.0, 2.0).radius == 2.0
        with pytest.raises(InvalidArgumentError):
            oracle_radial(100.0, -1.0)

    def test_small_lambda_has_no_radial_pair(self):
        with pytest.raises(NoSolutionError):
            oracle_radial(1.0)


@pytest.mark.slow
class TestDiscreteBranches:
    def test_interval_crossings_match_roots(self, pb_model):
        forms = assemble(build_interval_mesh(256))
        oracle = oracle_1d(60.0)
        config = SolveConfig(lam=60.0, eps_start=0.05, eps_min=1e-3)
        u0, u1, summary = continuation(config, forms, pb_model)
        assert summary.error is None
        assert u1 is not None

        h = 1.0 / 256
        for branch, root in ((u0, oracle.a_stable), (u1, oracle.a_unstable)):
            crossings = extract_level_set(forms, branch.field, 1.0).midpoints[:, 0]
            assert abs(crossings.min() - root) <= 2.0 * h
        assert u0.energy_true < -1.0 < u1.energy_true

    def test_disk_minimizer_radius(self, pb_model):
        forms = assemble(build_disk_mesh(32, 1.0))
        oracle = oracle_radial(100.0, 1.0)
        config = SolveConfig(lam=100.0, eps_start=0.05, eps_min=2e-3)
        u0, _, summary = continuation(config, forms, pb_model)

        levelset = extract_level_set(forms, u0.field, 1.0)
        radius = np.average(np.linalg.norm(levelset.midpoints, axis=1), weights=levelset.weights)
        assert radius == pytest.approx(oracle.rho_stable, rel=0.05)

        fb = fb_report(forms, u0.field, 100.0, pb_model, delta=3.0 * summary.final_eps)
        assert fb.reliable_count > 0
        assert math.isfinite(fb.median_jump_residual)
