"""
Mesh
====

Simplicial meshes of the computational domain and their P1 forms.

Supported domains:
- interval (0, L) split into uniform cells (1D)
- rectangle (0, lx) x (0, ly), each grid square split into two triangles
- disk of radius R, approximated by its inscribed polygon and triangulated
  by concentric rings

All energies are evaluated with the assembled stiffness matrix and the
lumped (vertex-quadrature) mass, so |Ω| always means the measure of the
discrete domain.
"""

import hashlib
import logging
import math
import threading
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from vortexpatch.errors import AssemblyError, InvalidArgumentError, MeshError

logger = logging.getLogger(__name__)

MEASURE_RTOL = 1e-12
FACTOR_LOCK = threading.Lock()


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Simplicial mesh with Dirichlet boundary flags.

    Use Mesh.from_cells (or one of the build_* functions) rather than the
    constructor: it orients the cells, computes their measures and infers
    the boundary.
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_mask: np.ndarray
    cell_measures: np.ndarray
    domain_measure: float

    @classmethod
    def from_cells(
        cls,
        vertices,
        cells,
        boundary_mask=None,
        domain_measure: float | None = None,
    ) -> "Mesh":
        """
        Build a mesh from raw coordinates and connectivity.

        Args:
            vertices: (n,) or (n, dim) coordinates
            cells: (m, dim + 1) vertex indices per simplex
            boundary_mask: per-vertex Dirichlet flags. Defaults to the
                boundary vertices of the cell complex.
            domain_measure: exact |Ω| of the discretized domain. Defaults to
                the sum of the cell measures.

        Returns:
            Mesh with positively oriented cells
        """
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim == 1:
            vertices = vertices[:, None]
        dim = vertices.shape[1]
        if dim not in (1, 2):
            raise MeshError(f"only 1D and 2D meshes are supported, got dim={dim}")

        cells = np.array(cells, dtype=np.int64)
        if cells.ndim != 2 or cells.shape[1] != dim + 1:
            raise MeshError(f"cells must have shape (m, {dim + 1}), got {cells.shape}")
        if cells.size and (cells.min() < 0 or cells.max() >= len(vertices)):
            raise MeshError("cell references a vertex index out of range")

        signed = _signed_measures(vertices, cells)
        flip = signed < 0
        if np.any(flip):
            cells[flip] = cells[flip][:, ::-1]
        measures = np.abs(signed)

        if boundary_mask is None:
            boundary_mask = np.zeros(len(vertices), dtype=bool)
            boundary_mask[_complex_boundary_vertices(cells, len(vertices))] = True
        boundary_mask = np.asarray(boundary_mask, dtype=bool)
        if boundary_mask.shape != (len(vertices),):
            raise MeshError("boundary_mask must have one flag per vertex")

        if domain_measure is None:
            domain_measure = float(measures.sum())

        for array in (vertices, cells, boundary_mask, measures):
            array.setflags(write=False)

        return cls(
            dim=dim,
            vertices=vertices,
            cells=cells,
            boundary_mask=boundary_mask,
            cell_measures=measures,
            domain_measure=float(domain_measure),
        )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def measure(self) -> float:
        """|Ω| of the discretized domain."""
        return self.domain_measure

    @cached_property
    def mesh_id(self) -> str:
        """Content hash; equal meshes share an id."""
        digest = hashlib.sha1()
        digest.update(np.ascontiguousarray(self.vertices).tobytes())
        digest.update(np.ascontiguousarray(self.cells).tobytes())
        return digest.hexdigest()[:16]

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique vertex pairs (k, 2), smaller index first."""
        return np.unique(_cell_facets(self.cells, 1).reshape(-1, 2), axis=0)

    @cached_property
    def cell_sizes(self) -> np.ndarray:
        """Characteristic length per cell (length in 1D, sqrt(2·area) in 2D)."""
        if self.dim == 1:
            return self.cell_measures.copy()
        return np.sqrt(2.0 * self.cell_measures)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)


def _signed_measures(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    p = vertices[cells]
    if vertices.shape[1] == 1:
        return p[:, 1, 0] - p[:, 0, 0]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _cell_facets(cells: np.ndarray, facet_dim: int) -> np.ndarray:
    """Sorted facets of every cell: vertices (facet_dim=0) or edges (facet_dim=1)."""
    if facet_dim == 0:
        return cells.reshape(-1, 1)
    k = cells.shape[1]
    pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
    edges = np.stack([cells[:, [a, b]] for a, b in pairs], axis=1)
    return np.sort(edges, axis=2)


def _complex_boundary_vertices(cells: np.ndarray, n_vertices: int) -> np.ndarray:
    """Vertices lying on facets that belong to exactly one cell."""
    facet_dim = cells.shape[1] - 2
    facets = _cell_facets(cells, facet_dim).reshape(-1, facet_dim + 1)
    unique, counts = np.unique(facets, axis=0, return_counts=True)
    return np.unique(unique[counts == 1].ravel())


def validate_mesh(mesh: Mesh) -> Mesh:
    """
    Check the structural invariants of a mesh.

    Raises:
        MeshError: nonpositive cell measure, measure mismatch against |Ω|,
            or an unflagged boundary vertex
    """
    bad = np.flatnonzero(mesh.cell_measures <= 0.0)
    if bad.size:
        raise MeshError(f"cell {int(bad[0])} has nonpositive measure")

    total = float(mesh.cell_measures.sum())
    if abs(total - mesh.domain_measure) > MEASURE_RTOL * mesh.domain_measure:
        raise MeshError(f"cell measures sum to {total!r}, expected |Ω| = {mesh.domain_measure!r}")

    boundary = _complex_boundary_vertices(mesh.cells, mesh.n_vertices)
    if not np.all(mesh.boundary_mask[boundary]):
        raise MeshError("boundary vertex of the cell complex is not flagged")

    return mesh


def _require_count(name: str, value: int, minimum: int = 2):
    if int(value) != value or value < minimum:
        raise InvalidArgumentError(f"{name} must be an integer >= {minimum}, got {value!r}")


def _require_positive(name: str, value: float):
    if not value > 0.0 or not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be positive, got {value!r}")


def build_interval_mesh(n_cells: int, length: float = 1.0) -> Mesh:
    """
    Uniform mesh of (0, length) with both endpoints flagged as Dirichlet nodes.

    Args:
        n_cells: Number of cells, at least 2
        length: Interval length

    Returns:
        1D Mesh with n_cells + 1 vertices
    """
    _require_count("n_cells", n_cells)
    _require_positive("length", length)

    n_cells = int(n_cells)
    x = np.linspace(0.0, length, n_cells + 1)
    cells = np.column_stack([np.arange(n_cells), np.arange(1, n_cells + 1)])
    mask = np.zeros(n_cells + 1, dtype=bool)
    mask[[0, -1]] = True

    return validate_mesh(Mesh.from_cells(x, cells, mask, domain_measure=float(length)))


def build_rect_mesh(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> Mesh:
    """
    Structured triangulation of (0, lx) x (0, ly).

    Each grid square is split along its (0,0)-(1,1) diagonal, so every
    triangle is right-angled and the stiffness matrix has nonpositive
    off-diagonal entries.

    Args:
        nx: Squares along x, at least 2
        ny: Squares along y, at least 2
        lx: Width
        ly: Height

    Returns:
        2D Mesh with (nx + 1)(ny + 1) vertices and 2·nx·ny triangles
    """
    _require_count("nx", nx)
    _require_count("ny", ny)
    _require_positive("lx", lx)
    _require_positive("ly", ly)

    nx, ny = int(nx), int(ny)
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    v00 = (j * (nx + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    cells = np.concatenate([
        np.column_stack([v00, v10, v11]),
        np.column_stack([v00, v11, v01]),
    ])

    ix = np.tile(np.arange(nx + 1), ny + 1)
    iy = np.repeat(np.arange(ny + 1), nx + 1)
    mask = (ix == 0) | (ix == nx) | (iy == 0) | (iy == ny)

    return validate_mesh(Mesh.from_cells(vertices, cells, mask, domain_measure=float(lx * ly)))


def disk_polygon_area(n_rings: int, radius: float) -> float:
    """Area of the inscribed regular polygon with 6·n_rings sides."""
    sides = 6 * n_rings
    return 0.5 * sides * radius**2 * math.sin(2.0 * math.pi / sides)


def build_disk_mesh(n_rings: int, radius: float = 1.0) -> Mesh:
    """
    Ring triangulation of the disk of the given radius.

    Ring k (k = 1..n_rings) carries 6k vertices at radius k·radius/n_rings;
    consecutive rings are zipped together by angle. The outer ring is the
    inscribed polygon whose area is recorded as |Ω|.

    Args:
        n_rings: Number of rings, at least 2
        radius: Disk radius

    Returns:
        2D Mesh with 1 + 3·n_rings·(n_rings + 1) vertices
    """
    _require_count("n_rings", n_rings)
    _require_positive("radius", radius)

    n_rings = int(n_rings)
    coords = [np.zeros((1, 2))]
    rings = [(np.array([0]), np.array([0.0]))]
    start = 1
    for k in range(1, n_rings + 1):
        count = 6 * k
        angles = 2.0 * np.pi * np.arange(count) / count
        r = radius * k / n_rings
        coords.append(np.column_stack([r * np.cos(angles), r * np.sin(angles)]))
        rings.append((np.arange(start, start + count), angles))
        start += count
    vertices = np.concatenate(coords)

    triangles = []
    for (inner, inner_angles), (outer, outer_angles) in zip(rings[:-1], rings[1:]):
        triangles.extend(_zip_rings(inner, inner_angles, outer, outer_angles))
    cells = np.array(triangles, dtype=np.int64)

    mask = np.zeros(len(vertices), dtype=bool)
    mask[rings[-1][0]] = True

    return validate_mesh(Mesh.from_cells(
        vertices, cells, mask, domain_measure=disk_polygon_area(n_rings, radius)
    ))


def _zip_rings(inner, inner_angles, outer, outer_angles) -> list[tuple[int, int, int]]:
    """Triangulate the strip between two concentric rings, advancing by angle."""
    n_in, n_out = len(inner), len(outer)
    if n_in == 1:
        return [(int(inner[0]), int(outer[o]), int(outer[(o + 1) % n_out])) for o in range(n_out)]

    def angle_of(angles, idx):
        n = len(angles)
        return angles[idx % n] + 2.0 * np.pi * (idx // n)

    triangles = []
    i = o = 0
    while i < n_in or o < n_out:
        advance_outer = i >= n_in or (o < n_out and angle_of(outer_angles, o + 1) <= angle_of(inner_angles, i + 1))
        if advance_outer:
            triangles.append((int(inner[i % n_in]), int(outer[o % n_out]), int(outer[(o + 1) % n_out])))
            o += 1
        else:
            triangles.append((int(inner[i % n_in]), int(outer[o % n_out]), int(inner[(i + 1) % n_in])))
            i += 1
    return triangles


# =============================================================================
# ASSEMBLY
# =============================================================================


@dataclass(frozen=True, eq=False)
class AssembledForms:
    """
    P1 stiffness and lumped mass of a mesh.

    Boundary rows are not eliminated; solvers restrict to interior_index.
    """

    mesh: Mesh
    stiffness: sparse.csr_matrix
    lumped_mass: np.ndarray
    interior_index: np.ndarray
    basis_gradients: np.ndarray

    @property
    def mesh_id(self) -> str:
        return self.mesh.mesh_id

    @property
    def measure(self) -> float:
        return self.mesh.measure

    @property
    def n(self) -> int:
        return self.mesh.n_vertices

    @cached_property
    def interior_stiffness(self) -> sparse.csc_matrix:
        idx = self.interior_index
        return self.stiffness[idx][:, idx].tocsc()

    @cached_property
    def interior_factor(self):
        """Sparse LU of K_II, shared by the preconditioner and the seeds."""
        return splu(self.interior_stiffness)

    def solve_interior(self, rhs: np.ndarray) -> np.ndarray:
        """Full-length x with K_II x_I = rhs_I and x = 0 on the boundary."""
        x = np.zeros(self.n)
        b = np.asarray(rhs, dtype=float)[self.interior_index]
        # SuperLU objects are shared across solver workers
        with FACTOR_LOCK:
            x[self.interior_index] = self.interior_factor.solve(b)
        return x

    def dirichlet(self, values: np.ndarray) -> float:
        """½ uᵀKu."""
        return 0.5 * float(values @ (self.stiffness @ values))

    def cell_gradients(self, values: np.ndarray) -> np.ndarray:
        """Piecewise-constant P1 gradient, shape (m, dim)."""
        return np.einsum("mad,ma->md", self.basis_gradients, values[self.mesh.cells])

    def max_gradient(self, values: np.ndarray) -> float:
        """Largest element gradient magnitude."""
        return float(np.max(np.linalg.norm(self.cell_gradients(values), axis=1)))


def _basis_gradients(mesh: Mesh) -> np.ndarray:
    p = mesh.vertices[mesh.cells]
    if mesh.dim == 1:
        h = p[:, 1, 0] - p[:, 0, 0]
        return np.stack([-1.0 / h, 1.0 / h], axis=1)[:, :, None]

    x, y = p[:, :, 0], p[:, :, 1]
    twice_area = 2.0 * mesh.cell_measures
    grads = np.empty((mesh.n_cells, 3, 2))
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        grads[:, a, 0] = (y[:, b] - y[:, c]) / twice_area
        grads[:, a, 1] = (x[:, c] - x[:, b]) / twice_area
    return grads


def assemble(mesh: Mesh) -> AssembledForms:
    """
    Assemble the P1 stiffness matrix and the lumped mass vector.

    Args:
        mesh: Mesh to assemble on

    Returns:
        AssembledForms with symmetric stiffness and positive lumped mass

    Raises:
        AssemblyError: a cell has (numerically) zero measure
    """
    scale = max(float(np.ptp(mesh.vertices, axis=0).max()), 1.0) ** mesh.dim
    degenerate = np.flatnonzero(mesh.cell_measures <= 1e-14 * scale)
    if degenerate.size:
        raise AssemblyError("degenerate cell", int(degenerate[0]))

    cells = mesh.cells
    n, k = mesh.n_vertices, cells.shape[1]
    grads = _basis_gradients(mesh)

    local = np.einsum("mad,mbd->mab", grads, grads) * mesh.cell_measures[:, None, None]
    rows = np.repeat(cells, k, axis=1).ravel()
    cols = np.tile(cells, (1, k)).ravel()
    K = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K = ((K + K.T) * 0.5).tocsr()
    K.sort_indices()

    mass = np.bincount(cells.ravel(), weights=np.repeat(mesh.cell_measures / k, k), minlength=n)
    if np.any(mass <= 0.0):
        raise MeshError("vertex without an incident cell")

    interior = np.flatnonzero(~mesh.boundary_mask)
    for array in (mass, interior, grads):
        array.setflags(write=False)

    logger.debug("assembled %d vertices, %d cells, nnz=%d", n, mesh.n_cells, K.nnz)
    return AssembledForms(
        mesh=mesh,
        stiffness=K,
        lumped_mass=mass,
        interior_index=interior,
        basis_gradients=grads,
    )
