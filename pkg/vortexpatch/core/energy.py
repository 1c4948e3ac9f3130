"""
Energy Functionals
==================

Discrete energies on P1 fields with lumped (nodal) quadrature:

    J(u)   = ½uᵀKu + Σ mᵢ[uᵢ > 1]          − λ Σ mᵢ G((uᵢ−1)₊)
    J_ε(u) = ½uᵀKu + Σ mᵢ B((uᵢ−1)/ε)      − λ Σ mᵢ G_ε((uᵢ−1)₊)
    J̃_ε(u) = J_ε with both nonlinear integrands frozen above a cap field

Every eval/grad pair is exactly consistent under the nodal quadrature, so
the descent and mountain-pass loops can rely on directional derivatives.
"""

import logging
from dataclasses import dataclass

import numpy as np

from vortexpatch.core.mesh import AssembledForms
from vortexpatch.core.model import NonlinearityModel, beta, big_b, big_g_eps_nodal, g_eps
from vortexpatch.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values of a discrete H¹₀ function on the mesh `mesh_id`."""

    values: np.ndarray
    mesh_id: str

    @classmethod
    def on(cls, forms: AssembledForms, values) -> "Field":
        """
        Wrap nodal values, zeroing Dirichlet nodes.

        Raises:
            InvalidArgumentError: wrong length or non-finite entries
        """
        values = np.array(values, dtype=float)
        if values.shape != (forms.n,):
            raise InvalidArgumentError(f"field needs {forms.n} nodal values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("field has non-finite entries")
        values[forms.mesh.boundary_mask] = 0.0
        values.setflags(write=False)
        return cls(values=values, mesh_id=forms.mesh_id)

    @classmethod
    def zeros(cls, forms: AssembledForms) -> "Field":
        return cls.on(forms, np.zeros(forms.n))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float
    phase: float
    potential: float

    @property
    def total(self) -> float:
        return self.dirichlet + self.phase - self.potential


class EnergyFunctional:
    """
    J, J_ε and J̃_ε bound to one mesh, nonlinearity and λ.

    The *_values methods take raw nodal arrays and skip the Field checks;
    the solver loops use them directly.
    """

    def __init__(self, forms: AssembledForms, model: NonlinearityModel, lam: float):
        if not lam >= 0.0:
            raise InvalidArgumentError(f"lambda must be nonnegative, got {lam!r}")
        self.forms = forms
        self.model = model
        self.lam = float(lam)
        self.mass = forms.lumped_mass
        self.stiffness = forms.stiffness
        self.boundary = forms.mesh.boundary_mask
        self.interior = forms.interior_index

    # =========================================================================
    # FIELD API
    # =========================================================================

    def values_of(self, field: Field) -> np.ndarray:
        """Nodal values of `field` after checking it lives on this mesh."""
        if field.mesh_id != self.forms.mesh_id:
            raise InvalidArgumentError(
                f"field belongs to mesh {field.mesh_id}, functional to {self.forms.mesh_id}"
            )
        return field.values

    def field(self, values) -> Field:
        return Field.on(self.forms, values)

    def eval_j(self, field: Field) -> EnergyBreakdown:
        """The nonsmooth energy J. Nodes with uᵢ = 1 do not count as phase."""
        u = self.values_of(field)
        excess = np.maximum(u - 1.0, 0.0)
        return EnergyBreakdown(
            dirichlet=self.forms.dirichlet(u),
            phase=float(self.mass @ (u > 1.0)),
            potential=self.lam * float(self.mass @ self.model.big_g(excess)),
        )

    def eval_j_eps(self, field: Field, eps: float) -> EnergyBreakdown:
        return self._breakdown(self.values_of(field), eps, None)

    def grad_j_eps(self, field: Field, eps: float) -> Field:
        return Field(self.grad_values(self.values_of(field), eps), field.mesh_id)

    def eval_j_tilde(self, field: Field, eps: float, cap: Field) -> EnergyBreakdown:
        return self._breakdown(self.values_of(field), eps, self.values_of(cap))

    def grad_j_tilde(self, field: Field, eps: float, cap: Field) -> Field:
        return Field(self.grad_values(self.values_of(field), eps, self.values_of(cap)), field.mesh_id)

    # =========================================================================
    # RAW ARRAYS
    # =========================================================================

    def _densities(self, u: np.ndarray, eps: float, cap: np.ndarray | None):
        """Nodal phase and potential densities of J_ε, or of J̃_ε when cap is set."""
        if cap is None:
            frozen = u
            above = np.zeros_like(u)
        else:
            frozen = np.minimum(u, cap)
            above = u - frozen
        t = (frozen - 1.0) / eps
        excess = np.maximum(frozen - 1.0, 0.0)

        phase = big_b(t) + above * (beta(t) / eps)
        potential = big_g_eps_nodal(self.model, excess, eps) + above * g_eps(self.model, excess, eps)
        return phase, potential

    def _breakdown(self, u: np.ndarray, eps: float, cap: np.ndarray | None) -> EnergyBreakdown:
        phase, potential = self._densities(u, eps, cap)
        return EnergyBreakdown(
            dirichlet=self.forms.dirichlet(u),
            phase=float(self.mass @ phase),
            potential=self.lam * float(self.mass @ potential),
        )

    def energy_values(self, u: np.ndarray, eps: float, cap: np.ndarray | None = None) -> float:
        """J_ε(u), or J̃_ε(u) with the given cap."""
        return self._breakdown(u, eps, cap).total

    def grad_values(self, u: np.ndarray, eps: float, cap: np.ndarray | None = None) -> np.ndarray:
        """
        Ku + M⊙[β((ū−1)/ε)/ε − λ g_ε((ū−1)₊)] with ū = min(u, cap); Dirichlet rows zeroed.
        """
        frozen = u if cap is None else np.minimum(u, cap)
        excess = np.maximum(frozen - 1.0, 0.0)
        grad = self.stiffness @ u + self.mass * (
            beta((frozen - 1.0) / eps) / eps - self.lam * g_eps(self.model, excess, eps)
        )
        grad[self.boundary] = 0.0
        return grad

    def true_energy_values(self, u: np.ndarray) -> float:
        return self.eval_j(Field(u, self.forms.mesh_id)).total

    def dual_norm(self, grad: np.ndarray) -> float:
        """Lumped-mass dual norm sqrt(Σ_interior gᵢ²/mᵢ)."""
        g = grad[self.interior]
        return float(np.sqrt(np.sum(g * g / self.mass[self.interior])))

    def k_norm(self, u: np.ndarray) -> float:
        """‖u‖_K = sqrt(uᵀKu)."""
        return float(np.sqrt(max(2.0 * self.forms.dirichlet(u), 0.0)))


def eval_j(forms: AssembledForms, field: Field, lam: float, model: NonlinearityModel) -> EnergyBreakdown:
    return EnergyFunctional(forms, model, lam).eval_j(field)


def eval_j_eps(
    forms: AssembledForms, field: Field, lam: float, model: NonlinearityModel, eps: float
) -> EnergyBreakdown:
    return EnergyFunctional(forms, model, lam).eval_j_eps(field, eps)


def grad_j_eps(forms: AssembledForms, field: Field, lam: float, model: NonlinearityModel, eps: float) -> Field:
    return EnergyFunctional(forms, model, lam).grad_j_eps(field, eps)


def eval_j_tilde(
    forms: AssembledForms, field: Field, lam: float, model: NonlinearityModel, eps: float, cap: Field
) -> EnergyBreakdown:
    return EnergyFunctional(forms, model, lam).eval_j_tilde(field, eps, cap)


def grad_j_tilde(
    forms: AssembledForms, field: Field, lam: float, model: NonlinearityModel, eps: float, cap: Field
) -> Field:
    return EnergyFunctional(forms, model, lam).grad_j_tilde(field, eps, cap)


def nodal_measure(forms: AssembledForms, mask: np.ndarray) -> float:
    """Lumped-mass measure of a node set."""
    return float(forms.lumped_mass @ mask)
