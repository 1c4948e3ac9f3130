"""
Run Report
==========

Verdict ledger and diagnostics of a two-branch run, and the flat
``section.key = value`` text they are stored in.

Verdicts are recomputed from nodal fields alone (compute_verdicts), so
``verify`` can re-derive every boolean from the emitted CSV files.
"""

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from vortexpatch.config import Config
from vortexpatch.core.continuation import ContinuationSummary
from vortexpatch.core.energy import EnergyFunctional, Field
from vortexpatch.core.freeboundary import FbReport
from vortexpatch.core.mesh import AssembledForms
from vortexpatch.errors import ArtifactError


@dataclass(frozen=True)
class Verdicts:
    minimizer_below_omega: bool
    mountain_pass_above_level_set: bool
    mountain_pass_above_omega: bool
    ordered: bool
    positive: bool
    phase_nonempty: bool
    u1_not_minimizer: bool

    @property
    def all(self) -> bool:
        return all(asdict(self).values())

    def items(self):
        return asdict(self).items()


@dataclass(frozen=True)
class VerdictNumbers:
    j_u0: float
    j_u1: float
    level_measure_u1: float
    phase_measure_u1: float
    min_interior_u0: float
    min_interior_u1: float
    max_order_violation: float


def compute_verdicts(
    functional: EnergyFunctional, u0: np.ndarray, u1: np.ndarray, eps_final: float
) -> tuple[Verdicts, VerdictNumbers]:
    """
    Energy orderings and nodal properties of the final branches.

    J(u0) < −|Ω|;  J(u1) > −m({u1 = 1});  J(u1) > −|Ω|;  u1 ≤ u0 + tol;
    interior values of both branches > 0;  m({u1 > 1}) > 0;  J(u0) < J(u1).

    The level set {u1 = 1} of a discrete field has no nodal mass, so it is
    measured as the lumped mass of the one-sided band {1 ≤ u1 ≤ 1 + ε_final},
    the same band the smoothed energy charges between J and J_ε.
    """
    forms = functional.forms
    mass = forms.lumped_mass
    interior = ~forms.mesh.boundary_mask
    omega = forms.measure

    j_u0 = functional.eval_j(Field(u0, forms.mesh_id)).total
    j_u1 = functional.eval_j(Field(u1, forms.mesh_id)).total
    level = float(mass @ ((u1 >= 1.0) & (u1 <= 1.0 + eps_final)))
    phase = float(mass @ (u1 > 1.0))
    min0 = float(u0[interior].min())
    min1 = float(u1[interior].min())
    violation = float(np.max(u1 - u0))

    numbers = VerdictNumbers(j_u0, j_u1, level, phase, min0, min1, violation)
    verdicts = Verdicts(
        minimizer_below_omega=j_u0 < -omega,
        mountain_pass_above_level_set=j_u1 > -level,
        mountain_pass_above_omega=j_u1 > -omega,
        ordered=violation <= Config.ORDER_TOL,
        positive=min0 > 0.0 and min1 > 0.0,
        phase_nonempty=phase > 0.0,
        u1_not_minimizer=j_u0 < j_u1,
    )
    return verdicts, numbers


# =============================================================================
# DIAGNOSTICS
# =============================================================================


def node_components(forms: AssembledForms, mask: np.ndarray) -> int:
    """Connected components of a node set in the mesh-edge graph."""
    nodes = np.flatnonzero(mask)
    if nodes.size == 0:
        return 0
    edges = forms.mesh.edges
    keep = mask[edges[:, 0]] & mask[edges[:, 1]]
    local = np.full(forms.n, -1)
    local[nodes] = np.arange(nodes.size)
    e = local[edges[keep]]
    graph = sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(nodes.size, nodes.size))
    count, _ = connected_components(graph, directed=False)
    return int(count)


def energy_identity_residual(functional: EnergyFunctional, u: np.ndarray) -> float:
    """
    Relative defect of (u−1)₊ᵀKu = λ Σ mᵢ g((uᵢ−1)₊)(uᵢ−1)₊, the discrete
    identity obtained by testing the limit equation with (u − 1)₊.
    """
    w = np.maximum(u - 1.0, 0.0)
    lhs = float(w @ (functional.stiffness @ u))
    rhs = functional.lam * float(functional.mass @ (functional.model.g(w) * w))
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale > 0.0 else 0.0


def fb_summary(fb: FbReport) -> dict[str, float | int]:
    return {
        "segments": len(fb.levelset),
        "reliable": fb.reliable_count,
        "length": fb.levelset.total_weight,
        "degenerate_nodes": fb.levelset.degenerate_nodes,
        "median_jump_residual": fb.median_jump_residual,
        "generalized_residual": fb.generalized_residual,
        "generalized_halved": fb.generalized_halved,
        "harmonic_residual": fb.harmonic_residual,
        "interior_residual": fb.interior_residual,
        "delta": fb.delta,
    }


# =============================================================================
# REPORT
# =============================================================================


@dataclass
class RunReport:
    config_lines: list[str]
    status: str
    omega_measure: float
    c1_estimate: float
    eps_zero: float = math.nan
    eps_final: float = math.nan
    c2_floor: float = math.nan
    stages: list = field(default_factory=list)
    verdicts: Verdicts | None = None
    numbers: VerdictNumbers | None = None
    fb: dict[str, dict] = field(default_factory=dict)
    diagnostics: dict[str, float | int | bool] = field(default_factory=dict)
    error: str | None = None

    @classmethod
    def from_summary(cls, config_lines: list[str], summary: ContinuationSummary) -> "RunReport":
        if summary.below_threshold:
            status = "below_threshold"
        elif summary.error:
            status = "failed"
        else:
            status = "ok"
        return cls(
            config_lines=config_lines,
            status=status,
            omega_measure=summary.omega_measure,
            c1_estimate=summary.c1_estimate,
            eps_zero=summary.eps_zero,
            eps_final=summary.final_eps,
            c2_floor=summary.c2_floor,
            stages=summary.stages,
            error=summary.error,
        )

    def to_lines(self) -> list[str]:
        lines = [f"config.{line}" for line in self.config_lines]
        lines += [
            f"run.status = {self.status}",
            f"run.omega_measure = {self.omega_measure!r}",
            f"run.c1_estimate = {self.c1_estimate!r}",
            f"run.eps_zero = {self.eps_zero!r}",
            f"run.eps_final = {self.eps_final!r}",
            f"run.c2_floor = {self.c2_floor!r}",
            f"run.stages = {len(self.stages)}",
        ]
        if self.error:
            lines.append(f"run.error = {self.error}")
        if self.numbers is not None:
            lines += [f"energy.{name} = {value!r}" for name, value in asdict(self.numbers).items()]
        if self.verdicts is not None:
            lines += [f"verdict.{name} = {str(value).lower()}" for name, value in self.verdicts.items()]
        for branch, summary in self.fb.items():
            lines += [f"fb.{branch}.{name} = {value!r}" for name, value in summary.items()]
        for name, value in self.diagnostics.items():
            rendered = str(value).lower() if isinstance(value, bool) else repr(value)
            lines.append(f"diagnostic.{name} = {rendered}")
        return lines

    def to_text(self) -> str:
        return "\n".join(self.to_lines()) + "\n"


def parse_report(text: str) -> dict[str, str]:
    """
    Read a report.txt back into a key -> raw value mapping.

    Raises:
        ArtifactError: malformed or duplicated lines
    """
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if " = " not in raw:
            raise ArtifactError(f"report line {lineno} is not 'key = value': {raw!r}")
        key, value = (part.strip() for part in raw.split(" = ", 1))
        if key in entries:
            raise ArtifactError(f"report line {lineno} repeats key {key!r}")
        entries[key] = value
    return entries


def report_config_text(entries: dict[str, str]) -> str:
    """The run configuration echoed in a report, as parse_config input."""
    lines = [f"{key[len('config.'):]} = {value}" for key, value in entries.items() if key.startswith("config.")]
    if not lines:
        raise ArtifactError("report carries no config echo")
    return "\n".join(lines) + "\n"


def verdict_names() -> list[str]:
    return [f.name for f in fields(Verdicts)]
