"""Tests for meshes and P1 assembly."""

import math

import numpy as np
import pytest

from vortexpatch.core.mesh import (
    Mesh,
    assemble,
    build_disk_mesh,
    build_interval_mesh,
    build_rect_mesh,
    disk_polygon_area,
    validate_mesh,
)
from vortexpatch.errors import AssemblyError, InvalidArgumentError, MeshError


class TestBuilders:
    def test_interval_counts_and_boundary(self):
        mesh = build_interval_mesh(10, 2.0)
        assert mesh.dim == 1
        assert mesh.n_vertices == 11
        assert mesh.n_cells == 10
        assert mesh.measure == 2.0
        assert np.flatnonzero(mesh.boundary_mask).tolist() == [0, 10]

    def test_rect_counts_and_boundary(self):
        mesh = build_rect_mesh(4, 3, 2.0, 1.5)
        assert mesh.n_vertices == 5 * 4
        assert mesh.n_cells == 2 * 4 * 3
        assert mesh.boundary_mask.sum() == 2 * (4 + 3)
        assert mesh.measure == pytest.approx(3.0)
        assert mesh.cell_measures.sum() == pytest.approx(3.0, rel=1e-14)

    def test_disk_counts_and_measure(self):
        mesh = build_disk_mesh(5, 2.0)
        assert mesh.n_vertices == 1 + 3 * 5 * 6
        assert mesh.boundary_mask.sum() == 30
        assert mesh.measure == pytest.approx(disk_polygon_area(5, 2.0), rel=1e-14)
        assert mesh.cell_measures.sum() == pytest.approx(mesh.measure, rel=1e-12)
        assert np.all(mesh.cell_measures > 0.0)

    def test_disk_polygon_approaches_circle(self):
        assert disk_polygon_area(64, 1.0) == pytest.approx(math.pi, rel=1e-3)

    @pytest.mark.parametrize("builder, args", [
        (build_interval_mesh, (1,)),
        (build_rect_mesh, (1, 4)),
        (build_disk_mesh, (0,)),
        (build_interval_mesh, (4, -1.0)),
        (build_rect_mesh, (4, 4, 0.0, 1.0)),
    ])
    def test_invalid_arguments(self, builder, args):
        with pytest.raises(InvalidArgumentError):
            builder(*args)

    def test_mesh_id_is_content_hash(self):
        assert build_rect_mesh(4, 4).mesh_id == build_rect_mesh(4, 4).mesh_id
        assert build_rect_mesh(4, 4).mesh_id != build_rect_mesh(4, 5).mesh_id

    def test_arrays_are_read_only(self):
        mesh = build_rect_mesh(2, 2)
        with pytest.raises(ValueError):
            mesh.vertices[0, 0] = 1.0


class TestFromCells:
    def test_orients_clockwise_cells(self):
        vertices = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        mesh = Mesh.from_cells(vertices, [[0, 2, 1]])
        assert mesh.cell_measures[0] == pytest.approx(0.5)
        assert mesh.boundary_mask.all()

    def test_infers_boundary_of_complex(self):
        mesh = build_rect_mesh(3, 3)
        inferred = Mesh.from_cells(mesh.vertices, mesh.cells)
        assert np.array_equal(inferred.boundary_mask, mesh.boundary_mask)

    def test_rejects_bad_shapes(self):
        with pytest.raises(MeshError):
            Mesh.from_cells([[0.0, 0.0], [1.0, 0.0]], [[0, 1]])
        with pytest.raises(MeshError):
            Mesh.from_cells([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 5]])

    def test_validate_flags_unmarked_boundary(self):
        mesh = build_rect_mesh(3, 3)
        mask = np.array(mesh.boundary_mask)
        mask[0] = False
        broken = Mesh.from_cells(mesh.vertices, mesh.cells, mask, domain_measure=1.0)
        with pytest.raises(MeshError):
            validate_mesh(broken)


class TestAssembly:
    @pytest.mark.parametrize("mesh", [
        build_interval_mesh(12),
        build_rect_mesh(6, 5, 1.0, 2.0),
        build_disk_mesh(4),
    ], ids=["interval", "rect", "disk"])
    def test_stiffness_symmetric_with_constant_kernel(self, mesh):
        forms = assemble(mesh)
        K = forms.stiffness
        assert abs(K - K.T).max() == 0.0
        assert np.abs(K @ np.ones(forms.n)).max() < 1e-10
        assert forms.lumped_mass.sum() == pytest.approx(mesh.measure, rel=1e-12)
        assert np.all(forms.lumped_mass > 0.0)

    def test_rect_stiffness_offdiagonals_nonpositive(self):
        K = assemble(build_rect_mesh(5, 5)).stiffness.tocoo()
        off = K.row != K.col
        assert np.all(K.data[off] <= 1e-15)

    def test_dirichlet_energy_of_linear_function(self):
        forms = assemble(build_rect_mesh(8, 8, 2.0, 1.0))
        x = forms.mesh.vertices[:, 0]
        assert forms.dirichlet(3.0 * x) == pytest.approx(0.5 * 9.0 * 2.0, rel=1e-12)

    def test_cell_gradients_exact_for_linear(self, disk_forms):
        v = disk_forms.mesh.vertices
        grads = disk_forms.cell_gradients(2.0 * v[:, 0] - v[:, 1])
        assert np.allclose(grads, [2.0, -1.0], atol=1e-12)
        assert disk_forms.max_gradient(2.0 * v[:, 0] - v[:, 1]) == pytest.approx(math.sqrt(5.0))

    def test_interval_torsion_is_nodally_exact(self, interval_forms):
        x = interval_forms.mesh.vertices[:, 0]
        w = interval_forms.solve_interior(interval_forms.lumped_mass)
        assert np.allclose(w, 0.5 * x * (1.0 - x), atol=1e-12)

    def test_degenerate_cell_raises_with_index(self):
        vertices = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]
        mesh = Mesh.from_cells(vertices, [[0, 1, 3], [0, 1, 2]])
        with pytest.raises(AssemblyError) as info:
            assemble(mesh)
        assert info.value.cell_index == 1
