"""Tests for J, J_ε, J̃_ε and their gradients."""

import numpy as np
import pytest

from tests.conftest import random_interior_field
from vortexpatch.core.energy import (
    EnergyFunctional,
    Field,
    eval_j,
    eval_j_eps,
    eval_j_tilde,
    grad_j_eps,
    grad_j_tilde,
    nodal_measure,
)
from vortexpatch.core.mesh import assemble, build_rect_mesh
from vortexpatch.errors import InvalidArgumentError

LAM = 50.0
H = 1e-6


def _central_difference(energy, u, d):
    return (energy(u + H * d) - energy(u - H * d)) / (2.0 * H)


class TestField:
    def test_on_zeroes_boundary_and_freezes(self, small_square_forms):
        field = Field.on(small_square_forms, np.ones(small_square_forms.n))
        assert np.all(field.values[small_square_forms.mesh.boundary_mask] == 0.0)
        with pytest.raises(ValueError):
            field.values[0] = 1.0

    def test_on_rejects_wrong_length_and_nan(self, small_square_forms):
        with pytest.raises(InvalidArgumentError):
            Field.on(small_square_forms, np.zeros(3))
        values = np.zeros(small_square_forms.n)
        values[10] = np.nan
        with pytest.raises(InvalidArgumentError):
            Field.on(small_square_forms, values)

    def test_mesh_mismatch_rejected(self, small_square_forms, pb_model):
        other = assemble(build_rect_mesh(8, 9))
        functional = EnergyFunctional(small_square_forms, pb_model, LAM)
        with pytest.raises(InvalidArgumentError):
            functional.eval_j(Field.zeros(other))


class TestEnergies:
    def test_zero_field_has_zero_energy(self, small_square_forms, pb_model):
        zero = Field.zeros(small_square_forms)
        assert eval_j(small_square_forms, zero, LAM, pb_model).total == 0.0
        assert eval_j_eps(small_square_forms, zero, LAM, pb_model, 0.1).total == 0.0

    def test_phase_term_counts_nodes_above_one(self, small_square_forms, pb_model):
        forms = small_square_forms
        interior = ~forms.mesh.boundary_mask
        u = np.where(interior, 2.0, 0.0)
        breakdown = eval_j(forms, Field.on(forms, u), LAM, pb_model)
        assert breakdown.phase == pytest.approx(forms.lumped_mass[interior].sum())
        assert breakdown.potential == pytest.approx(LAM * forms.lumped_mass[interior].sum())
        assert nodal_measure(forms, u > 1.0) == pytest.approx(breakdown.phase)

    def test_nodes_exactly_at_one_are_not_phase(self, small_square_forms, pb_model):
        u = np.where(small_square_forms.mesh.boundary_mask, 0.0, 1.0)
        assert eval_j(small_square_forms, Field.on(small_square_forms, u), LAM, pb_model).phase == 0.0

    @pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
    def test_energy_sandwich(self, square_forms, power_model, rng, eps):
        functional = EnergyFunctional(square_forms, power_model, LAM)
        mass = square_forms.lumped_mass
        bound = LAM * power_model.smoothing_gap(eps) * square_forms.measure
        for _ in range(30):
            u = random_interior_field(square_forms, rng, high=3.0)
            j = functional.true_energy_values(u)
            j_eps = functional.energy_values(u, eps)
            band = float(mass @ ((u >= 1.0) & (u <= 1.0 + eps)))
            slack = 1e-12 * max(1.0, abs(j))
            assert j - band <= j_eps + slack
            assert j_eps <= j + bound + slack

    def test_tilde_equals_smoothed_below_cap(self, small_square_forms, pb_model, rng):
        u = random_interior_field(small_square_forms, rng)
        field = Field.on(small_square_forms, u)
        cap = Field.on(small_square_forms, u + 5.0)
        smoothed = eval_j_eps(small_square_forms, field, LAM, pb_model, 0.1).total
        tilde = eval_j_tilde(small_square_forms, field, LAM, pb_model, 0.1, cap).total
        assert tilde == pytest.approx(smoothed, rel=1e-14)

    def test_tilde_is_linear_above_cap(self, small_square_forms, pb_model, rng):
        forms = small_square_forms
        functional = EnergyFunctional(forms, pb_model, LAM)
        cap = random_interior_field(forms, rng)
        bump = random_interior_field(forms, rng, high=0.5)
        e = [functional.energy_values(cap + t * bump, 0.1, cap) - forms.dirichlet(cap + t * bump) for t in (1, 2, 3)]
        assert e[2] - e[1] == pytest.approx(e[1] - e[0], rel=1e-9)


class TestGradients:
    @pytest.mark.parametrize("model_name", ["pb_model", "power_model"])
    def test_grad_j_eps_matches_central_difference(self, square_forms, rng, request, model_name):
        model = request.getfixturevalue(model_name)
        functional = EnergyFunctional(square_forms, model, LAM)
        for _ in range(20):
            u = random_interior_field(square_forms, rng)
            d = random_interior_field(square_forms, rng, high=1.0) - 0.5
            d[square_forms.mesh.boundary_mask] = 0.0
            exact = float(functional.grad_values(u, 0.1) @ d)
            fd = _central_difference(lambda v: functional.energy_values(v, 0.1), u, d)
            assert fd == pytest.approx(exact, rel=1e-5)

    def test_grad_j_tilde_matches_central_difference(self, square_forms, power_model, rng):
        functional = EnergyFunctional(square_forms, power_model, LAM)
        for _ in range(20):
            u = random_interior_field(square_forms, rng)
            cap = random_interior_field(square_forms, rng, high=2.5)
            d = random_interior_field(square_forms, rng, high=1.0) - 0.5
            d[square_forms.mesh.boundary_mask] = 0.0
            exact = float(functional.grad_values(u, 0.1, cap) @ d)
            fd = _central_difference(lambda v: functional.energy_values(v, 0.1, cap), u, d)
            assert fd == pytest.approx(exact, rel=1e-5)

    def test_field_gradients_vanish_on_boundary(self, small_square_forms, pb_model, rng):
        forms = small_square_forms
        field = Field.on(forms, random_interior_field(forms, rng))
        cap = Field.on(forms, random_interior_field(forms, rng))
        for grad in (
            grad_j_eps(forms, field, LAM, pb_model, 0.1),
            grad_j_tilde(forms, field, LAM, pb_model, 0.1, cap),
        ):
            assert np.all(grad.values[forms.mesh.boundary_mask] == 0.0)
            assert grad.mesh_id == forms.mesh_id

    def test_dual_and_k_norms(self, small_square_forms, pb_model, rng):
        functional = EnergyFunctional(small_square_forms, pb_model, LAM)
        u = random_interior_field(small_square_forms, rng)
        assert functional.k_norm(u) ** 2 == pytest.approx(2.0 * small_square_forms.dirichlet(u))
        assert functional.dual_norm(np.zeros(small_square_forms.n)) == 0.0
