#!/usr/bin/env python3
"""
Verification: Energies and Gradients
====================================

Verifies:
- grad_j_eps and grad_j_tilde agree with central differences (h = 1e-6)
  to relative error < 1e-5 on 20 random fields, 16x16 square
- J(u) − m({1 ≤ u ≤ 1+ε}) ≤ J_ε(u) ≤ J(u) + λ(a1ε + (a2/p)ε^p)|Ω| on 100
  random fields for ε in {0.2, 0.1, 0.05}
- big_g_eps_nodal agrees with big_g_eps to 1e-10 relative
"""

import sys
import time
from pathlib import Path

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

import numpy as np  # noqa: E402

from vortexpatch.core.energy import EnergyFunctional  # noqa: E402
from vortexpatch.core.mesh import assemble, build_rect_mesh  # noqa: E402
from vortexpatch.core.model import NonlinearityModel, big_g_eps, big_g_eps_nodal  # noqa: E402

LAM = 50.0
FD_STEP = 1e-6
MODELS = [
    NonlinearityModel.prandtl_batchelor(),
    NonlinearityModel.create("power", a1=1.0, a2=0.5, p=1.5),
]


def _random_field(forms, rng, high=2.0):
    u = rng.uniform(0.0, high, forms.n)
    u[forms.mesh.boundary_mask] = 0.0
    return u


def _fd_error(energy, grad, u, direction):
    exact = float(grad @ direction)
    fd = (energy(u + FD_STEP * direction) - energy(u - FD_STEP * direction)) / (2.0 * FD_STEP)
    return abs(fd - exact) / max(abs(exact), 1e-12)


def verify_gradients():
    """Verify both gradients against central differences."""
    try:
        start = time.perf_counter()
        forms = assemble(build_rect_mesh(16, 16))
        rng = np.random.default_rng(7)
        worst = 0.0
        for model in MODELS:
            functional = EnergyFunctional(forms, model, LAM)
            for _ in range(10):
                u = _random_field(forms, rng)
                cap = _random_field(forms, rng, high=2.5)
                d = _random_field(forms, rng, high=1.0) - 0.5
                d[forms.mesh.boundary_mask] = 0.0
                eps = 0.1
                worst = max(worst, _fd_error(
                    lambda v: functional.energy_values(v, eps), functional.grad_values(u, eps), u, d
                ))
                worst = max(worst, _fd_error(
                    lambda v: functional.energy_values(v, eps, cap), functional.grad_values(u, eps, cap), u, d
                ))
        elapsed = time.perf_counter() - start
        assert worst < 1e-5, f"max relative error {worst:.2e}"
        print(f"✓ Gradients match central differences (max rel. error {worst:.2e}, {elapsed:.1f}s)")
        return True
    except Exception as e:
        print(f"❌ Gradient check error: {e}")
        return False


def verify_energy_sandwich():
    """Verify the ε-energy bracket on random fields."""
    try:
        forms = assemble(build_rect_mesh(16, 16))
        rng = np.random.default_rng(11)
        omega = forms.measure
        checked = 0
        for model in MODELS:
            functional = EnergyFunctional(forms, model, LAM)
            for _ in range(50):
                u = _random_field(forms, rng, high=3.0)
                true_j = functional.true_energy_values(u)
                for eps in (0.2, 0.1, 0.05):
                    j_eps = functional.energy_values(u, eps)
                    band = float(forms.lumped_mass @ ((u >= 1.0) & (u <= 1.0 + eps)))
                    slack = 1e-12 * max(1.0, abs(true_j))
                    assert true_j - band <= j_eps + slack, f"lower bound fails at eps={eps}"
                    assert j_eps <= true_j + LAM * model.smoothing_gap(eps) * omega + slack, (
                        f"upper bound fails at eps={eps}"
                    )
                    checked += 1
        print(f"✓ Energy sandwich holds on {checked} (field, ε) pairs")
        return True
    except Exception as e:
        print(f"❌ Energy sandwich error: {e}")
        return False


def verify_nodal_primitive():
    """Verify the vectorized G_ε against adaptive quadrature."""
    try:
        s = np.linspace(0.0, 2.0, 41)
        for model in MODELS:
            for eps in (0.2, 0.05, 1e-3):
                fast = big_g_eps_nodal(model, s, eps)
                slow = np.array([big_g_eps(model, float(x), eps) for x in s])
                err = np.max(np.abs(fast - slow) / np.maximum(np.abs(slow), 1e-300))
                assert err < 1e-10, f"{model.kind} eps={eps}: relative error {err:.2e}"
        print("✓ Nodal G_ε matches adaptive quadrature")
        return True
    except Exception as e:
        print(f"❌ Nodal G_ε error: {e}")
        return False


def main():
    print("=" * 50)
    print("Verification: Energies and Gradients")
    print("=" * 50)

    results = [
        verify_gradients(),
        verify_energy_sandwich(),
        verify_nodal_primitive(),
    ]

    print("=" * 50)
    if all(results):
        print("✓ Energies PASSED")
        return 0
    else:
        print("❌ Energies FAILED")
        return 1


if __name__ == "__main__":
    sys.exit(main())
