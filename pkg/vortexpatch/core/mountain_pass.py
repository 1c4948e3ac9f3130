"""
Mountain Pass
=============

Second critical point of the truncated energy J̃_ε between 0 and the
minimizer u₀^ε.

The search runs in two phases:
1. Path deformation: a discrete path of images joins 0 to the cap. The
   highest point of its polyline takes one Armijo-damped Sobolev
   steepest-descent step and is spliced in as an image, then both sides
   are re-spaced evenly in the H¹₀ (K) metric. Inside the K-ball of
   radius sqrt(2·floor) no node reaches 1, so every path leaves that ball
   at energy at least the floor; steps that would drop the path maximum
   below it are halved.
2. Polish: once the peak gradient is small, the peak is refined by
   minimum-mode following. The lowest mode comes from LOBPCG applied to
   finite differences of the gradient, measured against K; steps ascend
   along that mode and descend in every other direction.

The result is clamped nodally to the cap, so u₁ ≤ u₀ holds exactly.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import LinearOperator, lobpcg

from vortexpatch.config import Config
from vortexpatch.core.energy import EnergyFunctional, Field
from vortexpatch.core.mesh import FACTOR_LOCK, AssembledForms
from vortexpatch.core.model import NonlinearityModel
from vortexpatch.core.solve import BranchResult, SolveConfig, armijo_search
from vortexpatch.errors import InvalidArgumentError, PathCollapseError
from vortexpatch.telemetry import get_tracer

logger = logging.getLogger(__name__)


class _PathCollapse(Exception):
    pass


def c2_floor(forms: AssembledForms, chunk: int = 64) -> float:
    """
    Positive lower bound for the mountain-pass level.

    With C∞ = sqrt(max diag K_II⁻¹), any field with ‖u‖_K < 1/C∞ stays
    below 1 at every node, where J̃_ε reduces to ½‖u‖²_K. Every path from 0
    to the cap crosses the sphere of radius ρ = 0.999/C∞, so its maximum is
    at least ½ρ².
    """
    factor = forms.interior_factor
    n_i = len(forms.interior_index)
    largest = 0.0
    for start in range(0, n_i, chunk):
        cols = np.arange(start, min(start + chunk, n_i))
        unit = np.zeros((n_i, len(cols)))
        unit[cols, np.arange(len(cols))] = 1.0
        with FACTOR_LOCK:
            solved = factor.solve(unit)
        largest = max(largest, float(solved[cols, np.arange(len(cols))].max()))
    rho = 0.999 / np.sqrt(largest)
    return 0.5 * rho * rho


def _segment_lengths(anchors: np.ndarray, stiffness) -> np.ndarray:
    steps = np.diff(anchors, axis=0)
    return np.sqrt(np.maximum(np.einsum("kn,nk->k", steps, stiffness @ steps.T), 0.0))


def _resample(anchors: np.ndarray, points: int, stiffness) -> np.ndarray:
    """Polyline through `anchors` resampled at `points` images evenly spaced in the K metric."""
    steps = np.diff(anchors, axis=0)
    lengths = _segment_lengths(anchors, stiffness)
    arc = np.concatenate([[0.0], np.cumsum(lengths)])
    if arc[-1] <= 0.0:
        return np.repeat(anchors[:1], points, axis=0)

    targets = np.linspace(0.0, arc[-1], points)
    seg = np.clip(np.searchsorted(arc, targets, side="right") - 1, 0, len(lengths) - 1)
    safe = np.where(lengths > 0.0, lengths, 1.0)
    frac = np.clip((targets - arc[seg]) / safe[seg], 0.0, 1.0)
    path = anchors[seg] + frac[:, None] * steps[seg]
    path[0] = anchors[0]
    path[-1] = anchors[-1]
    return path


def _reroute(path: np.ndarray, segment: int, moved: np.ndarray, stiffness) -> np.ndarray:
    """
    Path through path[:segment+1], moved, path[segment+1:] with the same
    image count. `moved` stays an image; each side is re-spaced evenly in
    the K metric with images shared in proportion to its length.
    """
    points = len(path)
    left = np.concatenate([path[: segment + 1], moved[None, :]])
    right = np.concatenate([moved[None, :], path[segment + 1 :]])
    len_left = float(_segment_lengths(left, stiffness).sum())
    len_right = float(_segment_lengths(right, stiffness).sum())
    total = len_left + len_right
    share = len_left / total if total > 0.0 else 0.5
    n_left = int(np.clip(round((points - 1) * share), 1, points - 2))
    return np.concatenate([_resample(left, n_left + 1, stiffness), _resample(right, points - n_left, stiffness)[1:]])


class _Peak(NamedTuple):
    """Highest point found on a path polyline."""

    energy: float
    point: np.ndarray
    segment: int
    direction: np.ndarray


class _PathSearch:
    def __init__(self, functional: EnergyFunctional, cap: np.ndarray, eps: float, config: SolveConfig, floor: float):
        self.functional = functional
        self.forms = functional.forms
        self.cap = cap
        self.eps = eps
        self.config = config
        self.floor = floor
        # J̃_ε = ½‖u‖²_K inside this K-ball and equals the floor on its sphere
        self.radius = float(np.sqrt(2.0 * floor))
        self.barrier = floor - 1e-12 * max(1.0, abs(floor))
        self.pool = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()

    def energy(self, v: np.ndarray) -> float:
        return self.functional.energy_values(v, self.eps, self.cap)

    def grad(self, v: np.ndarray) -> np.ndarray:
        return self.functional.grad_values(v, self.eps, self.cap)

    def path_energies(self, path: np.ndarray) -> np.ndarray:
        if self.pool is not None:
            return np.array(list(self.pool.map(self.energy, path)))
        return np.array([self.energy(v) for v in path])

    # =========================================================================
    # PHASE 1: PATH DEFORMATION
    # =========================================================================

    def _crossing(self, a: np.ndarray, b: np.ndarray) -> float:
        """Parameter t ∈ [0, 1] where a + t(b − a) meets the floor sphere, with ‖a‖_K < radius ≤ ‖b‖_K."""
        K = self.forms.stiffness
        d = b - a
        dd = float(d @ (K @ d))
        ad = float(a @ (K @ d))
        aa = float(a @ (K @ a))
        if dd <= 0.0:
            return 0.0
        disc = max(ad * ad - dd * (aa - self.radius**2), 0.0)
        return float(np.clip((-ad + np.sqrt(disc)) / dd, 0.0, 1.0))

    def _segment_peak(self, a: np.ndarray, b: np.ndarray, extra: float | None = None) -> tuple[float, float]:
        """Highest (t, J̃_ε) on a → b from a coarse scan refined by a bounded scalar search."""
        d = b - a
        ts = np.linspace(0.0, 1.0, Config.MP_SEGMENT_SAMPLES + 1)
        values = self.path_energies(a[None, :] + ts[:, None] * d[None, :])
        j = int(np.argmax(values))
        best_t, best = float(ts[j]), float(values[j])

        lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, len(ts) - 1)]
        res = minimize_scalar(
            lambda t: -self.energy(a + t * d), bounds=(lo, hi), method="bounded", options={"xatol": 1e-3}
        )
        if np.isfinite(res.fun) and -res.fun > best:
            best_t, best = float(res.x), float(-res.fun)

        if extra is not None:
            value = self.energy(a + extra * d)
            if value > best:
                best_t, best = extra, value
        return best_t, best

    def peak(self, path: np.ndarray) -> _Peak:
        """
        Maximum of J̃_ε along the polyline through `path`.

        Searched on the segments next to the highest image and on every
        segment that leaves the floor sphere. The exit point of such a
        segment has energy at least the floor, so a path from 0 to the cap
        never reports a peak below it.
        """
        energies = self.path_energies(path)
        norms = np.array([self.functional.k_norm(v) for v in path])
        top = int(np.argmax(energies))

        segments = {j: None for j in (top - 1, top) if 0 <= j < len(path) - 1}
        for j in np.flatnonzero((norms[:-1] < self.radius) & (norms[1:] >= self.radius)):
            segments[int(j)] = self._crossing(path[j], path[j + 1])

        best: _Peak | None = None
        for j, crossing in sorted(segments.items()):
            t, value = self._segment_peak(path[j], path[j + 1], crossing)
            if best is None or value > best.energy:
                direction = path[j + 1] - path[j]
                best = _Peak(value, path[j] + t * direction, j, direction)
        return best

    def deform(self, path: np.ndarray) -> tuple[np.ndarray, _Peak, int, float]:
        """
        Lower the path maximum by steepest-descent steps on its peak.

        The moved peak is spliced into the path as an image. A step whose
        new path maximum falls below the floor has crossed the barrier and
        is halved until it does not.

        Returns:
            (path, peak, iterations, peak grad norm)

        Raises:
            _PathCollapse: the path maximum is below the floor
        """
        K = self.forms.stiffness
        handoff = max(self.config.grad_tol, Config.MP_HANDOFF_TOL)
        current = self.peak(path)
        if current.energy < self.barrier:
            raise _PathCollapse(current.energy)

        alpha = 1.0
        gnorm = np.inf
        lowest, stalled = current.energy, 0
        it = 0
        for it in range(self.config.max_iters):
            if stalled >= Config.MP_STALL_ITERS:
                logger.debug("path maximum stalled at %.6e after it=%d; handing over", lowest, it)
                return path, current, it, gnorm
            g = self.grad(current.point)
            gnorm = self.functional.dual_norm(g)
            if gnorm <= handoff:
                return path, current, it, gnorm

            z = self.forms.solve_interior(g)
            slope = -float(g @ z)
            step = armijo_search(self.energy, current.point, current.energy, -z, slope, min(2.0 * alpha, 4.0))
            if step is None:
                return path, current, it, gnorm
            alpha, moved, _ = step

            for _ in range(Config.MP_STEP_HALVINGS):
                candidate = _reroute(path, current.segment, moved, K)
                candidate_peak = self.peak(candidate)
                if candidate_peak.energy >= self.barrier:
                    break
                moved = 0.5 * (current.point + moved)
                alpha *= 0.5
            else:
                logger.debug("peak step kept crossing the floor at it=%d; handing over", it)
                return path, current, it, gnorm

            path, current = candidate, candidate_peak
            if current.energy < lowest - 1e-12 * max(1.0, abs(lowest)):
                lowest, stalled = current.energy, 0
            else:
                stalled += 1

        return path, current, it + 1, gnorm

    # =========================================================================
    # PHASE 2: MIN-MODE POLISH
    # =========================================================================

    def lowest_mode(self, x: np.ndarray, guess: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, float]:
        """
        Lowest generalized eigenpair of the gradient-difference operator
        against K on the interior nodes. The mode is K-normalized.
        """
        interior = self.forms.interior_index
        n_i = len(interior)
        g0 = self.grad(x)

        def hess_vec(v_i):
            v_i = np.asarray(v_i, dtype=float).ravel()
            scale = float(np.max(np.abs(v_i)))
            if scale == 0.0:
                return np.zeros(n_i)
            h = Config.FD_STEP / scale
            v = np.zeros(self.forms.n)
            v[interior] = v_i
            return ((self.grad(x + h * v) - g0) / h)[interior]

        operator = LinearOperator((n_i, n_i), matvec=hess_vec, dtype=float)
        factor = self.forms.interior_factor

        def precondition(r):
            with FACTOR_LOCK:
                return factor.solve(np.asarray(r, dtype=float).ravel())

        precond = LinearOperator((n_i, n_i), matvec=precondition, dtype=float)
        start = guess[interior] + 1e-3 * float(np.max(np.abs(guess))) * rng.standard_normal(n_i)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            values, vectors = lobpcg(
                operator, start[:, None], B=self.forms.interior_stiffness, M=precond,
                largest=False, maxiter=40, tol=1e-4,
            )

        tau = np.zeros(self.forms.n)
        tau[interior] = vectors[:, 0]
        return tau / self.functional.k_norm(tau), float(values[0])

    def polish(self, x: np.ndarray, tangent: np.ndarray) -> tuple[np.ndarray, float, int]:
        """Min-mode following from x. Returns (best iterate, its grad norm, iterations)."""
        functional = self.functional
        rng = np.random.default_rng(self.config.seed)
        g = self.grad(x)
        gnorm = functional.dual_norm(g)
        best, best_norm = x.copy(), gnorm
        tau = tangent
        radius = 0.1 * max(functional.k_norm(x), 1e-8)

        it = 0
        for it in range(Config.MP_POLISH_ITERS):
            if gnorm <= self.config.grad_tol or radius < 1e-12:
                break
            try:
                tau, curvature = self.lowest_mode(x, tau, rng)
            except (np.linalg.LinAlgError, ValueError) as exc:
                logger.debug("lowest mode failed (%s); keeping previous direction", exc)
                curvature = np.nan

            s = self.forms.solve_interior(g)
            v = -s + 2.0 * float(g @ tau) * tau
            v_norm = functional.k_norm(v)
            if v_norm == 0.0:
                break

            accepted = False
            step = min(1.0, radius / v_norm)
            for _ in range(8):
                trial = x + step * v
                e_trial = self.energy(trial)
                g_trial = self.grad(trial)
                n_trial = functional.dual_norm(g_trial)
                if np.isfinite(e_trial) and e_trial >= self.barrier and n_trial < gnorm:
                    x, g, gnorm = trial, g_trial, n_trial
                    accepted = True
                    break
                step *= 0.5

            radius = min(2.0 * radius, 10.0 * v_norm) if accepted else 0.25 * radius
            if gnorm < best_norm:
                best, best_norm = x.copy(), gnorm
            logger.debug("polish it=%d |g|=%.3e curvature=%.3e accepted=%s", it, gnorm, curvature, accepted)

        return best, best_norm, it


def _initial_path(cap: np.ndarray, warm: np.ndarray | None, points: int, stiffness) -> np.ndarray:
    if warm is None:
        return np.linspace(0.0, 1.0, points)[:, None] * cap[None, :]
    anchors = np.stack([np.zeros_like(cap), np.minimum(warm, cap), cap])
    return _resample(anchors, points, stiffness)


def mountain_pass(
    config: SolveConfig,
    forms: AssembledForms,
    model: NonlinearityModel,
    eps: float,
    cap: Field,
    warm: Field | None = None,
    floor: float | None = None,
) -> BranchResult:
    """
    Mountain-pass critical point of J̃_ε between 0 and `cap`.

    Args:
        config: λ, tolerances, path_points, seed and worker count
        forms: Assembled mesh
        model: Nonlinearity
        eps: Smoothing width
        cap: Converged minimizer u₀^ε with J̃_ε(cap) < 0
        warm: Previous-stage mountain-pass field; the initial path then
            runs 0 → warm → cap instead of the straight segment
        floor: Precomputed c2_floor(forms)

    Returns:
        BranchResult of kind "mountain_pass" with field ≤ cap nodally.
        diagnostics holds the floor, the upper bound
        ½capᵀKcap + |Ω| and the maximum of J̃_ε along the segment t·cap.

    Raises:
        InvalidArgumentError: J̃_ε(cap) is not negative
        PathCollapseError: the path maximum sits at an endpoint even after
            retrying with more images
    """
    functional = EnergyFunctional(forms, model, config.lam)
    cap_values = functional.values_of(cap)
    warm_values = functional.values_of(warm) if warm is not None else None
    floor = c2_floor(forms) if floor is None else floor

    cap_energy = functional.energy_values(cap_values, eps, cap_values)
    if not cap_energy < 0.0:
        raise InvalidArgumentError(f"mountain pass needs J_eps(cap) < 0, got {cap_energy!r}")

    upper = 0.5 * float(cap_values @ (forms.stiffness @ cap_values)) + forms.measure
    tracer = get_tracer()
    with tracer.start_as_current_span("solve.mountain_pass") as span:
        span.set_attribute("eps", eps)
        span.set_attribute("lambda", config.lam)

        search = _PathSearch(functional, cap_values, eps, config, floor)
        try:
            segment = np.linspace(0.0, 1.0, config.path_points)[:, None] * cap_values[None, :]
            segment_max = search.peak(segment).energy

            points = config.path_points
            for attempt in range(2):
                try:
                    path = _initial_path(cap_values, warm_values, points, forms.stiffness)
                    path, top, deform_iters, _ = search.deform(path)
                    break
                except _PathCollapse:
                    if attempt == 1:
                        raise PathCollapseError(
                            f"path maximum fell below the floor {floor:.6g} with {points} images (eps={eps})"
                        ) from None
                    points = 2 * points - 1
                    logger.warning("mountain-pass path collapsed at eps=%.4g; retrying with %d images", eps, points)

            tangent = top.direction / max(functional.k_norm(top.direction), 1e-300)
            peak, _, polish_iters = search.polish(top.point.copy(), tangent)
        finally:
            search.close()

        values = np.minimum(peak, cap_values)
        field = functional.field(values)
        grad = functional.grad_values(field.values, eps, cap_values)
        gnorm = functional.dual_norm(grad)
        energy_eps = functional.energy_values(field.values, eps, cap_values)
        converged = gnorm <= config.grad_tol

        result = BranchResult(
            field=field,
            energy_eps=energy_eps,
            energy_true=functional.eval_j(field).total,
            kind="mountain_pass",
            grad_norm=gnorm,
            converged=converged,
            iterations=deform_iters + polish_iters,
            message="converged" if converged else "gradient tolerance not reached",
            start="warm" if warm is not None else "segment",
            diagnostics={
                "floor": floor,
                "upper_bound": upper,
                "segment_max": segment_max,
                "path_points": points,
                "deform_iters": deform_iters,
                "polish_iters": polish_iters,
            },
        )

        span.set_attribute("energy_eps", energy_eps)
        span.set_attribute("iterations", result.iterations)
        span.set_attribute("converged", converged)

    logger.info(
        "mountain pass eps=%.4g: J_eps=%.6g (floor %.3g, bound %.4g, %d+%d iters, |g|=%.2e)",
        eps, energy_eps, floor, upper, deform_iters, polish_iters, gnorm,
    )
    return result
