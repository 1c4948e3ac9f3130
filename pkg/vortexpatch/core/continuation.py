"""
ε-Continuation
==============

Drives both branches down a decreasing schedule of smoothing widths.

1. Pilot: minimize J_ε at eps_start from the torsion seed, the plateau
   seed and random restarts. J(pilot) is the estimate of c1 = inf J.
2. If c1 ≥ −|Ω| the run stops: λ is not above the two-solution threshold.
3. Otherwise ε₀(λ) is computed and the schedule is clamped below it.
4. Each stage minimizes warm from the previous minimizer (the pilot is
   always a candidate too) and runs the mountain pass capped by the new
   minimizer, warm from the previous mountain-pass field.
"""

import logging
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy import optimize

from vortexpatch.config import Config
from vortexpatch.core.energy import EnergyFunctional
from vortexpatch.core.mesh import AssembledForms
from vortexpatch.core.model import NonlinearityModel
from vortexpatch.core.mountain_pass import c2_floor, mountain_pass
from vortexpatch.core.solve import BranchResult, EpsRecord, SolveConfig, eps_zero, minimize, seed_torsion
from vortexpatch.errors import InvalidArgumentError, VortexPatchError
from vortexpatch.telemetry import get_tracer

logger = logging.getLogger(__name__)


@dataclass
class StageRecord:
    """Energies and bound checks of one ε stage."""

    eps: float
    j_eps_u0: float
    j_u0: float
    j_eps_u1: float
    j_u1: float
    grad_u0: float
    grad_u1: float
    max_grad_u0: float
    max_grad_u1: float
    converged_u0: bool
    converged_u1: bool
    minimizer_bound: float
    mp_upper: float
    mp_floor: float
    minimizer_bound_ok: bool
    mp_bounds_ok: bool
    ordered: bool
    nested: bool

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class ContinuationSummary:
    omega_measure: float
    c1_estimate: float
    pilot: BranchResult
    below_threshold: bool = False
    eps_zero: float = math.nan
    schedule: list[float] = field(default_factory=list)
    stages: list[StageRecord] = field(default_factory=list)
    c2_floor: float = math.nan
    error: str | None = None

    @property
    def final_eps(self) -> float:
        return self.stages[-1].eps if self.stages else math.nan


def eps_schedule(config: SolveConfig, eps0: float) -> list[float]:
    """
    eps_start·eps_factor^j for j = 0, 1, ... while ≥ eps_min, keeping values
    below eps0; falls back to [min(eps0/2, eps_min)] when none remain.
    """
    schedule = []
    eps = config.start_eps
    while eps >= config.eps_min * (1.0 - 1e-12):
        if eps < eps0:
            schedule.append(eps)
        eps *= config.eps_factor
    return schedule or [min(eps0 / 2.0, config.eps_min)]


def pilot_minimizer(config: SolveConfig, forms: AssembledForms, model: NonlinearityModel) -> BranchResult:
    """Exploratory minimization at eps_start; J of the result estimates c1."""
    init = seed_torsion(forms, model, config.lam)
    return minimize(config, forms, model, config.start_eps, init, explore=True)


def continuation(
    config: SolveConfig,
    forms: AssembledForms,
    model: NonlinearityModel,
) -> tuple[BranchResult, BranchResult | None, ContinuationSummary]:
    """
    Run the ε-continuation for both branches.

    Args:
        config: λ and schedule settings
        forms: Assembled mesh
        model: Nonlinearity

    Returns:
        (u0, u1, summary). u1 is None when λ is below threshold. A solver
        failure inside the stage loop is recorded in summary.error and the
        last completed stage's branches are returned.
    """
    tracer = get_tracer()
    omega = forms.measure
    with tracer.start_as_current_span("solve.continuation") as span:
        span.set_attribute("lambda", config.lam)

        pilot = pilot_minimizer(config, forms, model)
        c1 = pilot.energy_true
        summary = ContinuationSummary(omega_measure=omega, c1_estimate=c1, pilot=pilot)
        span.set_attribute("c1_estimate", c1)
        logger.info("pilot at eps=%.4g: J=%.6g (|Ω| = %.6g)", config.start_eps, c1, omega)

        if not c1 < -omega:
            summary.below_threshold = True
            span.set_attribute("below_threshold", True)
            logger.warning("c1 estimate %.6g >= -|Ω|: lambda=%g is not above the threshold", c1, config.lam)
            return pilot, None, summary

        summary.eps_zero = eps_zero(config.lam, model, c1, omega)
        summary.schedule = eps_schedule(config, summary.eps_zero)
        summary.c2_floor = c2_floor(forms)
        logger.info("eps_zero=%.4g, schedule=%s", summary.eps_zero, ", ".join(f"{e:.4g}" for e in summary.schedule))

        functional = EnergyFunctional(forms, model, config.lam)
        u0, u1 = pilot, None
        for j, eps in enumerate(summary.schedule):
            with tracer.start_as_current_span("solve.stage") as stage_span:
                stage_span.set_attribute("eps", eps)
                stage_span.set_attribute("stage", j)
                try:
                    r0 = minimize(
                        config, forms, model, eps, u0.field,
                        extra_starts=[pilot.field] if j > 0 else (), explore=False,
                    )
                    r1 = mountain_pass(
                        config, forms, model, eps, r0.field,
                        warm=u1.field if u1 is not None else None, floor=summary.c2_floor,
                    )
                except VortexPatchError as exc:
                    summary.error = f"stage eps={eps!r}: {exc}"
                    stage_span.set_attribute("error", str(exc))
                    logger.error("continuation stopped at eps=%.4g: %s", eps, exc)
                    break

                record = _stage_record(functional, config, model, eps, r0, r1, summary)
                summary.stages.append(record)
                stage_span.set_attribute("j_eps_u0", record.j_eps_u0)
                stage_span.set_attribute("j_eps_u1", record.j_eps_u1)

                r0.eps_history = u0.eps_history + [
                    EpsRecord(eps, r0.energy_eps, r0.grad_norm, record.max_grad_u0)
                ]
                r1.eps_history = (u1.eps_history if u1 is not None else []) + [
                    EpsRecord(eps, r1.energy_eps, r1.grad_norm, record.max_grad_u1)
                ]
                u0, u1 = r0, r1

        span.set_attribute("stages", len(summary.stages))

    return u0, u1, summary


def _stage_record(
    functional: EnergyFunctional,
    config: SolveConfig,
    model: NonlinearityModel,
    eps: float,
    r0: BranchResult,
    r1: BranchResult,
    summary: ContinuationSummary,
) -> StageRecord:
    forms = functional.forms
    omega = summary.omega_measure
    u0, u1 = r0.values, r1.values

    minimizer_bound = summary.c1_estimate + 2.0 * config.lam * eps * model.a1 * omega
    mp_upper = 0.5 * float(u0 @ (forms.stiffness @ u0)) + omega
    above1 = u1 > 1.0

    return StageRecord(
        eps=eps,
        j_eps_u0=r0.energy_eps,
        j_u0=r0.energy_true,
        j_eps_u1=r1.energy_eps,
        j_u1=r1.energy_true,
        grad_u0=r0.grad_norm,
        grad_u1=r1.grad_norm,
        max_grad_u0=forms.max_gradient(u0),
        max_grad_u1=forms.max_gradient(u1),
        converged_u0=r0.converged,
        converged_u1=r1.converged,
        minimizer_bound=minimizer_bound,
        mp_upper=mp_upper,
        mp_floor=summary.c2_floor,
        minimizer_bound_ok=bool(r0.energy_eps <= minimizer_bound),
        mp_bounds_ok=bool(0.0 < r1.energy_eps <= mp_upper),
        ordered=bool(np.all(u1 <= u0 + Config.ORDER_TOL)),
        nested=bool(above1.any() and np.all(u0[above1] > 1.0)),
    )


def estimate_lambda_star(
    config: SolveConfig,
    forms: AssembledForms,
    model: NonlinearityModel,
    lo: float,
    hi: float,
    tol: float = 1e-2,
) -> float:
    """
    Bisection on λ for the sign change of c1_estimate(λ) + |Ω|.

    Args:
        config: Solver settings; its λ is replaced at every probe
        forms: Assembled mesh
        model: Nonlinearity
        lo: λ believed below the threshold
        hi: λ believed above it
        tol: Absolute tolerance on λ

    Returns:
        Estimated threshold λ*

    Raises:
        InvalidArgumentError: [lo, hi] does not bracket the threshold
    """
    if not 0.0 <= lo < hi:
        raise InvalidArgumentError(f"need 0 <= lo < hi, got lo={lo!r}, hi={hi!r}")

    def margin(lam: float) -> float:
        pilot = pilot_minimizer(replace(config, lam=lam), forms, model)
        value = pilot.energy_true + forms.measure
        logger.info("threshold probe lambda=%.6g: c1 + |Ω| = %.6g", lam, value)
        return value

    m_lo, m_hi = margin(lo), margin(hi)
    if not (m_lo >= 0.0 and m_hi < 0.0):
        raise InvalidArgumentError(
            f"threshold not bracketed: c1 + |Ω| is {m_lo:.6g} at lambda={lo} and {m_hi:.6g} at lambda={hi}"
        )
    if m_lo == 0.0:
        return float(lo)
    return float(optimize.bisect(margin, lo, hi, xtol=tol))
