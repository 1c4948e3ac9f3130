"""
Free Boundary Diagnostics
=========================

Extraction of level sets of P1 fields and the checks made on them:

- jump condition |∇u⁺|² − |∇u⁻|² = 2 from one-sided element gradients
- generalized (surface-integral) form of the same condition on the level
  sets {u = 1 ± δ}, for vector test fields Φ
- PDE residuals away from the free boundary: Δu = 0 in {u < 1−δ} and
  −Δu = λg in {u > 1+δ}

Everything here is read-only on the field and reports numbers; nothing
is asserted at fixed mesh size.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from vortexpatch.core.energy import Field
from vortexpatch.core.mesh import AssembledForms
from vortexpatch.core.model import NonlinearityModel
from vortexpatch.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

LEVEL_NUDGE = 1e-14
SEARCH_CELLS = 3


@dataclass(frozen=True)
class LevelSet:
    """
    Discrete level set {u = level}.

    segments[k] holds the two endpoints of segment k (both equal to the
    crossing point in 1D). cells[k] is the cell that contains it; that cell
    straddles the level. normals point toward increasing u.
    """

    level: float
    segments: np.ndarray
    cells: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    degenerate_cells: int = 0
    degenerate_nodes: int = 0

    def __len__(self):
        return len(self.cells)

    @property
    def midpoints(self) -> np.ndarray:
        return self.segments.mean(axis=1)

    @property
    def total_weight(self) -> float:
        """Total length (2D) or number of crossings (1D)."""
        return float(self.weights.sum())


@dataclass(frozen=True)
class OneSidedGradients:
    gplus_sq: np.ndarray
    gminus_sq: np.ndarray
    reliable: np.ndarray

    @property
    def jump_residuals(self) -> np.ndarray:
        return self.gplus_sq - self.gminus_sq - 2.0

    def median_abs_residual(self) -> float:
        res = np.abs(self.jump_residuals[self.reliable])
        return float(np.median(res)) if res.size else float("nan")


@dataclass(frozen=True)
class GeneralizedCheck:
    difference: float
    plus_integral: float
    minus_integral: float
    empty: bool


@dataclass(frozen=True)
class FbReport:
    levelset: LevelSet
    gradients: OneSidedGradients
    jump_residuals: np.ndarray
    generalized_residual: float
    generalized_halved: float
    harmonic_residual: float
    interior_residual: float
    delta: float

    @property
    def reliable_count(self) -> int:
        return int(self.gradients.reliable.sum())

    @property
    def median_jump_residual(self) -> float:
        return self.gradients.median_abs_residual()


def _nodal(forms: AssembledForms, field) -> np.ndarray:
    if isinstance(field, Field):
        if field.mesh_id != forms.mesh_id:
            raise InvalidArgumentError("field and forms belong to different meshes")
        return field.values
    values = np.asarray(field, dtype=float)
    if values.shape != (forms.n,):
        raise InvalidArgumentError(f"expected {forms.n} nodal values, got shape {values.shape}")
    return values


# =============================================================================
# LEVEL SETS
# =============================================================================


def extract_level_set(forms: AssembledForms, field, level: float) -> LevelSet:
    """
    Marching segments on triangles, linear roots on intervals.

    Nodes exactly at the level are nudged up by 1e-14; cells lying entirely
    on the level are skipped. Both are tallied.

    Args:
        forms: Assembled mesh (for cell gradients)
        field: Field or nodal array
        level: Level value

    Returns:
        LevelSet, possibly empty
    """
    mesh = forms.mesh
    values = np.array(_nodal(forms, field), dtype=float)
    cells = mesh.cells

    exact = values == level
    flat_cells = np.all(exact[cells], axis=1)
    values[exact] += LEVEL_NUDGE

    s = values[cells] - level
    above = s > 0.0
    n_above = above.sum(axis=1)
    crossing = np.flatnonzero((n_above > 0) & (n_above < cells.shape[1]) & ~flat_cells)

    p = mesh.vertices[cells[crossing]]
    sc = s[crossing]
    rows = np.arange(len(crossing))

    if mesh.dim == 1:
        t = sc[:, 0] / (sc[:, 0] - sc[:, 1])
        point = p[:, 0] + t[:, None] * (p[:, 1] - p[:, 0])
        segments = np.stack([point, point], axis=1)
        weights = np.ones(len(crossing))
    else:
        lone_above = n_above[crossing] == 1
        lone = np.where(lone_above, np.argmax(above[crossing], axis=1), np.argmin(above[crossing], axis=1))
        b = (lone + 1) % 3
        c = (lone + 2) % 3
        pa, pb, pc = p[rows, lone], p[rows, b], p[rows, c]
        sa, sb, s_c = sc[rows, lone], sc[rows, b], sc[rows, c]
        q1 = pa + (sa / (sa - sb))[:, None] * (pb - pa)
        q2 = pa + (sa / (sa - s_c))[:, None] * (pc - pa)
        segments = np.stack([q1, q2], axis=1)
        weights = np.linalg.norm(q2 - q1, axis=1)

    grads = forms.cell_gradients(values)[crossing]
    norms = np.linalg.norm(grads, axis=1)
    normals = grads / np.where(norms > 0.0, norms, 1.0)[:, None]

    return LevelSet(
        level=float(level),
        segments=segments.reshape(len(crossing), 2, mesh.dim),
        cells=crossing,
        weights=weights,
        normals=normals,
        degenerate_cells=int(flat_cells.sum()),
        degenerate_nodes=int(exact.sum()),
    )


# =============================================================================
# ONE-SIDED GRADIENTS
# =============================================================================


@lru_cache(maxsize=8)
def _centroid_tree(forms: AssembledForms) -> cKDTree:
    return cKDTree(forms.mesh.centroids)


def barycentric(forms: AssembledForms, cells: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of points[k] in cells[k], shape (k, dim + 1)."""
    mesh = forms.mesh
    grads = forms.basis_gradients[cells]
    origin = mesh.vertices[mesh.cells[cells, 0]]
    lam = np.einsum("kad,kd->ka", grads, points - origin)
    lam[:, 0] += 1.0
    return lam


def locate_cells(forms: AssembledForms, points: np.ndarray, candidates: int = 8) -> np.ndarray:
    """Index of a cell containing each point, or -1 outside the mesh."""
    points = np.atleast_2d(points)
    tree = _centroid_tree(forms)
    k = min(candidates, forms.mesh.n_cells)
    _, near = tree.query(points, k=k)
    near = near.reshape(len(points), k)
    found = np.full(len(points), -1)
    for j in range(k):
        todo = found < 0
        if not todo.any():
            break
        cells = near[todo, j]
        inside = np.all(barycentric(forms, cells, points[todo]) >= -1e-12, axis=1)
        idx = np.flatnonzero(todo)[inside]
        found[idx] = cells[inside]
    return found


def one_sided_gradients(forms: AssembledForms, field, levelset: LevelSet, delta: float) -> OneSidedGradients:
    """
    |∇u|² on each side of every segment.

    Walks from the segment midpoint along ±normal in half-cell steps (up to
    three cells) and takes the first cell lying entirely in {u > level+δ}
    (plus side) or {u < level−δ} (minus side). Segments without such a cell
    on either side are marked unreliable.

    Raises:
        InvalidArgumentError: delta ≤ 0
    """
    if not delta > 0.0:
        raise InvalidArgumentError(f"delta must be positive, got {delta!r}")

    values = _nodal(forms, field)
    mesh = forms.mesh
    k = len(levelset)
    gsq = np.sum(forms.cell_gradients(values) ** 2, axis=1)
    cell_min = values[mesh.cells].min(axis=1)
    cell_max = values[mesh.cells].max(axis=1)

    mid = levelset.midpoints
    sizes = mesh.cell_sizes[levelset.cells] if k else np.zeros(0)
    result = {}
    for side, sign in (("plus", 1.0), ("minus", -1.0)):
        found = np.full(k, np.nan)
        for step in np.arange(1, 2 * SEARCH_CELLS + 1) * 0.5:
            todo = np.isnan(found)
            if not todo.any():
                break
            points = mid[todo] + sign * step * sizes[todo][:, None] * levelset.normals[todo]
            cells = locate_cells(forms, points)
            valid = cells >= 0
            safe = np.where(valid, cells, 0)
            if sign > 0:
                ok = valid & (cell_min[safe] > levelset.level + delta)
            else:
                ok = valid & (cell_max[safe] < levelset.level - delta)
            idx = np.flatnonzero(todo)[ok]
            found[idx] = gsq[safe[ok]]
        result[side] = found

    reliable = ~np.isnan(result["plus"]) & ~np.isnan(result["minus"])
    return OneSidedGradients(
        gplus_sq=np.nan_to_num(result["plus"]),
        gminus_sq=np.nan_to_num(result["minus"]),
        reliable=reliable,
    )


# =============================================================================
# GENERALIZED CONDITION
# =============================================================================


def _phi_at(forms: AssembledForms, phi: np.ndarray, levelset: LevelSet) -> np.ndarray:
    cells = levelset.cells
    lam = barycentric(forms, cells, levelset.midpoints)
    return np.einsum("ka,kad->kd", lam, phi[forms.mesh.cells[cells]])


def _surface_integral(forms: AssembledForms, values: np.ndarray, phi: np.ndarray, level: float, plus: bool):
    ls = extract_level_set(forms, values, level)
    if len(ls) == 0:
        return 0.0, True
    gsq = np.sum(forms.cell_gradients(values)[ls.cells] ** 2, axis=1)
    flux = np.einsum("kd,kd->k", _phi_at(forms, phi, ls), ls.normals)
    if plus:
        return float(np.sum((2.0 - gsq) * flux * ls.weights)), False
    return float(np.sum(gsq * (-flux) * ls.weights)), False


def generalized_fb_check(
    forms: AssembledForms, field, phi, delta_plus: float, delta_minus: float
) -> GeneralizedCheck:
    """
    Surface-integral form of the free boundary condition:

        ∫_{u=1+δ⁺} (2 − |∇u|²) Φ·n  −  ∫_{u=1−δ⁻} |∇u|² Φ·n

    with n = ∇u/|∇u| on the upper level set and n = −∇u/|∇u| on the lower
    one. In 1D the integrals are sums over crossing points.

    Args:
        forms: Assembled mesh
        field: Field or nodal array
        phi: Per-vertex vectors, shape (n, dim) (or (n,) in 1D)
        delta_plus: Offset of the upper level set
        delta_minus: Offset of the lower level set

    Returns:
        GeneralizedCheck; `empty` is set when either level set is empty
    """
    if not (delta_plus > 0.0 and delta_minus > 0.0):
        raise InvalidArgumentError("delta_plus and delta_minus must be positive")
    values = _nodal(forms, field)
    phi = np.asarray(phi, dtype=float).reshape(forms.n, forms.mesh.dim)

    plus, empty_plus = _surface_integral(forms, values, phi, 1.0 + delta_plus, plus=True)
    minus, empty_minus = _surface_integral(forms, values, phi, 1.0 - delta_minus, plus=False)
    empty = empty_plus or empty_minus
    if empty_plus and empty_minus:
        return GeneralizedCheck(0.0, 0.0, 0.0, True)
    return GeneralizedCheck(plus - minus, plus, minus, empty)


def generalized_trend(forms: AssembledForms, field, phi, delta: float, halvings: int = 3) -> list[float]:
    """|generalized_fb_check| at δ, δ/2, ... (halvings + 1 values)."""
    return [
        abs(generalized_fb_check(forms, field, phi, delta / 2**j, delta / 2**j).difference)
        for j in range(halvings + 1)
    ]


def bump_vector_field(forms: AssembledForms, center, radius: float, direction=None) -> np.ndarray:
    """
    Test field Φ = ψ(|x − center|/radius)·direction with a C¹ compact bump ψ,
    zeroed at Dirichlet nodes. The default direction is radial from `center`.
    """
    x = forms.mesh.vertices
    offset = x - np.asarray(center, dtype=float)
    r = np.linalg.norm(offset, axis=1) / radius
    psi = np.where(r < 1.0, (1.0 - r**2) ** 2, 0.0)
    if direction is None:
        norms = np.linalg.norm(offset, axis=1)
        dirs = offset / np.where(norms > 0.0, norms, 1.0)[:, None]
    else:
        dirs = np.broadcast_to(np.asarray(direction, dtype=float), x.shape)
    phi = psi[:, None] * dirs
    phi[forms.mesh.boundary_mask] = 0.0
    return phi


# =============================================================================
# PDE RESIDUALS
# =============================================================================


def pde_residuals(
    forms: AssembledForms, field, lam: float, model: NonlinearityModel, delta: float
) -> tuple[float, float]:
    """
    Nodal strong-form residuals away from the free boundary.

    Returns:
        (harmonic_residual, interior_residual):
        max |(Ku)ᵢ|/mᵢ over interior nodes with u < 1−δ whose neighbours are
        all below 1−δ too, and max |(Ku)ᵢ/mᵢ − λ·g(uᵢ−1)| over interior nodes
        with u > 1+δ. An empty node set gives 0.
    """
    if not delta > 0.0:
        raise InvalidArgumentError(f"delta must be positive, got {delta!r}")
    values = _nodal(forms, field)
    interior = ~forms.mesh.boundary_mask
    laplacian = (forms.stiffness @ values) / forms.lumped_mass

    low = values < 1.0 - delta
    adjacency = sparse.csr_matrix(
        (np.ones(forms.stiffness.nnz), forms.stiffness.indices, forms.stiffness.indptr),
        shape=forms.stiffness.shape,
    )
    touches_high = (adjacency @ (~low).astype(float)) > 0.0
    harmonic_nodes = interior & low & ~touches_high
    harmonic = float(np.max(np.abs(laplacian[harmonic_nodes]))) if harmonic_nodes.any() else 0.0

    high = interior & (values > 1.0 + delta)
    if high.any():
        source = lam * model.g(values[high] - 1.0)
        inner = float(np.max(np.abs(laplacian[high] - source)))
    else:
        inner = 0.0
    return harmonic, inner


def fb_report(
    forms: AssembledForms,
    field,
    lam: float,
    model: NonlinearityModel,
    delta: float,
    phi=None,
) -> FbReport:
    """Level set at 1, one-sided gradients, generalized check and PDE residuals."""
    values = _nodal(forms, field)
    ls = extract_level_set(forms, values, 1.0)
    gradients = one_sided_gradients(forms, values, ls, delta)
    if phi is None:
        center = forms.mesh.vertices[int(np.argmax(values))]
        phi = bump_vector_field(forms, center, radius=0.5 * float(np.ptp(forms.mesh.vertices, axis=0).max()))
    check = generalized_fb_check(forms, values, phi, delta, delta)
    halved = generalized_fb_check(forms, values, phi, delta / 2.0, delta / 2.0)
    harmonic, inner = pde_residuals(forms, values, lam, model, delta)
    return FbReport(
        levelset=ls,
        gradients=gradients,
        jump_residuals=gradients.jump_residuals,
        generalized_residual=check.difference,
        generalized_halved=halved.difference,
        harmonic_residual=harmonic,
        interior_residual=inner,
        delta=delta,
    )
