"""
Solve
=====

Minimization of the regularized energy J_ε and the pieces the continuation
builds on: solver settings, branch results, initial fields and the
threshold ε₀(λ).

Descent is Polak-Ribière (PR+) nonlinear conjugate gradients in the H¹₀
metric: every gradient is preconditioned by the factorized interior
stiffness K_II, and steps are chosen by Armijo backtracking.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from vortexpatch.config import Config
from vortexpatch.core.energy import EnergyFunctional, Field
from vortexpatch.core.mesh import AssembledForms, Mesh
from vortexpatch.core.model import NonlinearityModel
from vortexpatch.errors import InvalidArgumentError
from vortexpatch.telemetry import get_tracer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    """
    λ and the ε-continuation settings.

    eps_start = None means "auto" (Config.SOLVE_EPS_START).
    """

    lam: float
    eps_start: float | None = None
    eps_factor: float = Config.SOLVE_EPS_FACTOR
    eps_min: float = Config.SOLVE_EPS_MIN
    grad_tol: float = Config.SOLVE_GRAD_TOL
    max_iters: int = Config.SOLVE_MAX_ITERS
    path_points: int = Config.SOLVE_PATH_POINTS
    restarts: int = Config.SOLVE_RESTARTS
    seed: int = Config.SOLVE_SEED
    threads: int = 1

    def __post_init__(self):
        if not self.lam >= 0.0 or not math.isfinite(self.lam):
            raise InvalidArgumentError(f"lambda must be a nonnegative number, got {self.lam!r}")
        if self.eps_start is not None and not self.eps_start > 0.0:
            raise InvalidArgumentError(f"eps_start must be positive or auto, got {self.eps_start!r}")
        if not 0.0 < self.eps_factor < 1.0:
            raise InvalidArgumentError(f"eps_factor must lie in (0, 1), got {self.eps_factor!r}")
        if not 0.0 < self.eps_min < self.start_eps:
            raise InvalidArgumentError(
                f"eps_min must satisfy 0 < eps_min < eps_start, got {self.eps_min!r} and {self.start_eps!r}"
            )
        if not self.grad_tol > 0.0:
            raise InvalidArgumentError(f"grad_tol must be positive, got {self.grad_tol!r}")
        if self.max_iters < 1:
            raise InvalidArgumentError(f"max_iters must be positive, got {self.max_iters!r}")
        if self.path_points < 3:
            raise InvalidArgumentError(f"path_points must be at least 3, got {self.path_points!r}")
        if self.restarts < 0:
            raise InvalidArgumentError(f"restarts must be nonnegative, got {self.restarts!r}")
        if self.threads < 1:
            raise InvalidArgumentError(f"threads must be at least 1, got {self.threads!r}")

    @property
    def start_eps(self) -> float:
        return Config.SOLVE_EPS_START if self.eps_start is None else self.eps_start


class EpsRecord(NamedTuple):
    eps: float
    energy_eps: float
    grad_norm: float
    max_gradient: float


@dataclass
class BranchResult:
    """One of the two solution branches at the current ε."""

    field: Field
    energy_eps: float
    energy_true: float
    kind: str
    grad_norm: float
    converged: bool
    iterations: int
    message: str = ""
    eps_history: list[EpsRecord] = field(default_factory=list)
    energy_trace: list[float] = field(default_factory=list)
    start: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.field.values


# =============================================================================
# DESCENT PRIMITIVES
# =============================================================================


def armijo_search(energy, u, e0, direction, slope, alpha, c=Config.ARMIJO_C, min_step=Config.ARMIJO_MIN_STEP):
    """
    Backtracking line search with the Armijo sufficient-decrease rule.

    Non-finite trial energies count as rejections.

    Returns:
        (alpha, trial, trial_energy), or None when no step ≥ min_step is accepted
    """
    while alpha >= min_step:
        trial = u + alpha * direction
        e_trial = energy(trial)
        if math.isfinite(e_trial) and e_trial <= e0 + c * alpha * slope:
            return alpha, trial, e_trial
        alpha *= 0.5
    return None


class DescentRun(NamedTuple):
    values: np.ndarray
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str
    energies: list[float]


def descend(
    functional: EnergyFunctional,
    start: np.ndarray,
    eps: float,
    config: SolveConfig,
    cap: np.ndarray | None = None,
    max_iters: int | None = None,
    grad_tol: float | None = None,
) -> DescentRun:
    """
    Preconditioned PR+ nonlinear CG on J_ε (or J̃_ε when cap is set).

    Args:
        functional: Energy bound to mesh, model and λ
        start: Initial nodal values (boundary entries are zeroed)
        eps: Smoothing width
        config: Tolerances
        cap: Optional truncation field for J̃_ε
        max_iters: Override config.max_iters
        grad_tol: Override config.grad_tol

    Returns:
        DescentRun; `energies` is nonincreasing
    """
    forms = functional.forms
    max_iters = config.max_iters if max_iters is None else max_iters
    grad_tol = config.grad_tol if grad_tol is None else grad_tol

    def energy(v):
        return functional.energy_values(v, eps, cap)

    u = np.array(start, dtype=float)
    u[functional.boundary] = 0.0
    e = energy(u)
    g = functional.grad_values(u, eps, cap)
    z = forms.solve_interior(g)
    d = -z
    alpha = 1.0
    energies = [e]

    for it in range(max_iters):
        gnorm = functional.dual_norm(g)
        if gnorm <= grad_tol:
            return DescentRun(u, e, gnorm, it, True, "converged", energies)

        slope = float(g @ d)
        if slope >= 0.0:
            d = -z
            slope = float(g @ d)

        step = armijo_search(energy, u, e, d, slope, min(2.0 * alpha, 4.0))
        if step is None:
            return DescentRun(u, e, gnorm, it, False, "line search stalled", energies)
        alpha, u_new, e_new = step

        g_new = functional.grad_values(u_new, eps, cap)
        z_new = forms.solve_interior(g_new)
        denom = float(g @ z)
        beta_pr = max(0.0, float(z_new @ (g_new - g)) / denom) if denom > 0.0 else 0.0
        if beta_pr == 0.0 or (it + 1) % Config.CG_RESTART_EVERY == 0:
            d = -z_new
        else:
            d = -z_new + beta_pr * d

        u, e, g, z = u_new, e_new, g_new, z_new
        energies.append(e)

    gnorm = functional.dual_norm(g)
    return DescentRun(u, e, gnorm, max_iters, gnorm <= grad_tol, "max_iters exhausted", energies)


# =============================================================================
# INITIAL FIELDS
# =============================================================================


def boundary_distance(mesh: Mesh) -> np.ndarray:
    """Distance from every vertex to the nearest Dirichlet vertex."""
    tree = cKDTree(mesh.vertices[mesh.boundary_mask])
    distance, _ = tree.query(mesh.vertices)
    distance[mesh.boundary_mask] = 0.0
    return distance


def seed_bump(mesh: Mesh, height: float = 2.0) -> Field:
    """
    Plateau field: `height` on the inner half of the domain, ramping
    linearly to 0 at the boundary.

    Args:
        mesh: Mesh to seed on
        height: Plateau value, > 1 so the phase {u > 1} is open

    Returns:
        Field with exact boundary zeros
    """
    if not height > 1.0:
        raise InvalidArgumentError(f"seed height must exceed 1, got {height!r}")
    distance = boundary_distance(mesh)
    r_in = float(distance.max())
    values = height * np.minimum(1.0, 2.0 * distance / r_in)
    values[mesh.boundary_mask] = 0.0
    values.setflags(write=False)
    return Field(values=values, mesh_id=mesh.mesh_id)


def seed_torsion(forms: AssembledForms, model: NonlinearityModel, lam: float) -> Field:
    """
    Torsion function w (K w = M·1) scaled by the best factor along t·w for J.

    Returns the zero field when no positive multiple of w lowers J below 0.
    """
    functional = EnergyFunctional(forms, model, lam)
    w = forms.solve_interior(forms.lumped_mass)
    w_max = float(w.max())
    if w_max <= 0.0:
        return Field.zeros(forms)

    def ray(t):
        return functional.true_energy_values(t * w)

    t_hi = 4.0 * max(2.0 / w_max, lam * (model.a1 + model.a2) + 1.0 / w_max)
    grid = np.linspace(0.0, t_hi, 129)
    energies = np.array([ray(t) for t in grid])
    k = int(np.argmin(energies))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    best = optimize.minimize_scalar(ray, bounds=(lo, hi), method="bounded", options={"xatol": 1e-8})
    t = float(best.x) if best.fun <= energies[k] else float(grid[k])
    if ray(t) >= 0.0:
        t = 0.0
    logger.debug("torsion seed scale t=%.6g, J=%.6g", t, ray(t))
    return Field.on(forms, t * w)


def random_starts(forms: AssembledForms, count: int, seed: int) -> list[np.ndarray]:
    """Uniform [0, 2] nodal values smoothed by one Jacobi sweep."""
    rng = np.random.default_rng(seed)
    K = forms.stiffness
    diag = K.diagonal()
    starts = []
    for _ in range(count):
        u = rng.uniform(0.0, 2.0, forms.n)
        u[forms.mesh.boundary_mask] = 0.0
        u = u - (K @ u) / diag
        u[forms.mesh.boundary_mask] = 0.0
        starts.append(u)
    return starts


# =============================================================================
# THRESHOLD AND MINIMIZATION
# =============================================================================


def eps_zero(lam: float, model: NonlinearityModel, c1_estimate: float, omega_measure: float) -> float:
    """
    ε₀(λ) = min{|c1|/(2λ·a1·|Ω|), (p·a1/a2)^(1/(p−1))}; the second term is
    dropped when a2 = 0.

    Raises:
        InvalidArgumentError: c1_estimate ≥ 0 (λ not above threshold), or
            a nonpositive λ, a1 or |Ω|
    """
    if not c1_estimate < 0.0:
        raise InvalidArgumentError(f"c1 estimate must be negative (lambda above threshold), got {c1_estimate!r}")
    if not (lam > 0.0 and model.a1 > 0.0 and omega_measure > 0.0):
        raise InvalidArgumentError("eps_zero needs lambda > 0, a1 > 0 and |Ω| > 0")
    value = abs(c1_estimate) / (2.0 * lam * model.a1 * omega_measure)
    if model.a2 > 0.0:
        value = min(value, (model.p * model.a1 / model.a2) ** (1.0 / (model.p - 1.0)))
    return value


def _branch(functional: EnergyFunctional, run: DescentRun, kind: str, start: str) -> BranchResult:
    field_ = functional.field(run.values)
    return BranchResult(
        field=field_,
        energy_eps=run.energy,
        energy_true=functional.eval_j(field_).total,
        kind=kind,
        grad_norm=run.grad_norm,
        converged=run.converged,
        iterations=run.iterations,
        message=run.message,
        energy_trace=run.energies,
        start=start,
    )


def minimize(
    config: SolveConfig,
    forms: AssembledForms,
    model: NonlinearityModel,
    eps: float,
    init: Field,
    extra_starts: list[Field] | tuple = (),
    explore: bool = True,
) -> BranchResult:
    """
    Minimize J_ε from several starts and keep the lowest-energy basin.

    Args:
        config: λ, tolerances, restart count, seed and worker count
        forms: Assembled mesh
        model: Nonlinearity
        eps: Smoothing width
        init: Primary start
        extra_starts: Further candidate starts (e.g. the previous stage)
        explore: Also start from seed_bump and `config.restarts` random fields

    Returns:
        BranchResult of kind "minimizer"; not-converged results are flagged,
        never raised
    """
    functional = EnergyFunctional(forms, model, config.lam)
    candidates = [("init", functional.values_of(init))]
    candidates += [(f"extra{i}", functional.values_of(f)) for i, f in enumerate(extra_starts)]
    if explore:
        candidates.append(("seed_bump", seed_bump(forms.mesh).values))
        candidates += [(f"random{i}", u) for i, u in enumerate(random_starts(forms, config.restarts, config.seed))]

    tracer = get_tracer()
    with tracer.start_as_current_span("solve.minimize") as span:
        span.set_attribute("eps", eps)
        span.set_attribute("lambda", config.lam)
        span.set_attribute("candidates", len(candidates))

        def run(candidate):
            return descend(functional, candidate[1], eps, config)

        if config.threads > 1 and len(candidates) > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                runs = list(pool.map(run, candidates))
        else:
            runs = [run(c) for c in candidates]

        best = min(range(len(runs)), key=lambda i: runs[i].energy)
        result = _branch(functional, runs[best], "minimizer", candidates[best][0])

        span.set_attribute("start", result.start)
        span.set_attribute("iterations", result.iterations)
        span.set_attribute("energy_eps", result.energy_eps)
        span.set_attribute("converged", result.converged)

    logger.info(
        "minimize eps=%.4g: J_eps=%.6g from %s (%d iters, |g|=%.2e%s)",
        eps, result.energy_eps, result.start, result.iterations, result.grad_norm,
        "" if result.converged else ", not converged",
    )
    return result
