"""Tests for CSV and text artifacts."""

import numpy as np
import pytest

from tests.conftest import random_interior_field
from vortexpatch.artifacts import (
    check_cells,
    check_mesh,
    read_cells,
    read_fb,
    read_field,
    read_stages,
    read_text,
    write_cells,
    write_error,
    write_fb,
    write_field,
    write_mesh,
    write_stages,
)
from vortexpatch.core.continuation import StageRecord
from vortexpatch.core.energy import Field
from vortexpatch.core.freeboundary import fb_report
from vortexpatch.core.mesh import Mesh, build_rect_mesh
from vortexpatch.errors import ArtifactError


def _stage(eps, ordered=True):
    return StageRecord(
        eps=eps, j_eps_u0=-3.25, j_u0=-3.3, j_eps_u1=0.7, j_u1=0.1 + 0.2,
        grad_u0=1e-6, grad_u1=2e-6, max_grad_u0=4.0, max_grad_u1=3.5,
        converged_u0=True, converged_u1=False,
        minimizer_bound=-2.9, mp_upper=11.0, mp_floor=0.05,
        minimizer_bound_ok=True, mp_bounds_ok=True, ordered=ordered, nested=False,
    )


class TestFields:
    def test_round_trip_is_exact(self, tmp_path, small_square_forms, rng):
        field = Field.on(small_square_forms, random_interior_field(small_square_forms, rng) / 3.0)
        path = write_field(tmp_path / "u0.csv", field)
        restored = read_field(path, small_square_forms)
        assert np.array_equal(restored.values, field.values)
        assert restored.mesh_id == small_square_forms.mesh_id

    def test_boundary_tolerance(self, tmp_path, small_square_forms):
        values = np.zeros(small_square_forms.n)
        boundary = np.flatnonzero(small_square_forms.mesh.boundary_mask)[0]

        values[boundary] = 1e-15
        restored = read_field(write_field(tmp_path / "ok.csv", values), small_square_forms)
        assert restored.values[boundary] == 0.0

        values[boundary] = 1e-10
        with pytest.raises(ArtifactError, match="Dirichlet"):
            read_field(write_field(tmp_path / "bad.csv", values), small_square_forms)

    def test_wrong_vertex_count(self, tmp_path, small_square_forms, square_forms):
        path = write_field(tmp_path / "u.csv", np.zeros(square_forms.n))
        with pytest.raises(ArtifactError, match="vertices"):
            read_field(path, small_square_forms)

    def test_rows_out_of_order(self, tmp_path, small_square_forms):
        path = write_field(tmp_path / "u.csv", np.zeros(small_square_forms.n))
        lines = path.read_text().splitlines()
        lines[1], lines[2] = lines[2], lines[1]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ArtifactError, match="out of order"):
            read_field(path, small_square_forms)

    def test_non_number(self, tmp_path, small_square_forms):
        path = write_field(tmp_path / "u.csv", np.zeros(small_square_forms.n))
        path.write_text(path.read_text().replace("5,0.0", "5,abc"))
        with pytest.raises(ArtifactError, match="not a number"):
            read_field(path, small_square_forms)

    def test_missing_file(self, tmp_path, small_square_forms):
        with pytest.raises(ArtifactError, match="missing"):
            read_field(tmp_path / "u1.csv", small_square_forms)

    def test_wrong_header(self, tmp_path, small_square_forms):
        path = tmp_path / "u.csv"
        path.write_text("id,value\n0,0.0\n")
        with pytest.raises(ArtifactError, match="columns"):
            read_field(path, small_square_forms)


class TestMesh:
    def test_matching_mesh_passes(self, tmp_path, small_square_forms):
        path = write_mesh(tmp_path / "mesh.csv", small_square_forms.mesh)
        check_mesh(path, small_square_forms.mesh)
        assert path.read_text().splitlines()[0] == "vertex_id,x,y,boundary"

    def test_different_mesh_rejected(self, tmp_path, small_square_forms):
        path = write_mesh(tmp_path / "mesh.csv", small_square_forms.mesh)
        with pytest.raises(ArtifactError, match="coordinates"):
            check_mesh(path, build_rect_mesh(8, 8, 2.0, 2.0))
        with pytest.raises(ArtifactError, match="vertices"):
            check_mesh(path, build_rect_mesh(8, 9))

    def test_cells_rebuild_the_triangulation(self, tmp_path, small_square_forms):
        mesh = small_square_forms.mesh
        path = write_cells(tmp_path / "cells.csv", mesh)
        assert path.read_text().splitlines()[0] == "cell_id,v0,v1,v2"

        cells = read_cells(path, mesh.n_vertices)
        assert np.array_equal(cells, mesh.cells)
        rebuilt = Mesh.from_cells(mesh.vertices, cells)
        assert np.array_equal(rebuilt.cells, mesh.cells)
        assert np.array_equal(rebuilt.boundary_mask, mesh.boundary_mask)
        assert rebuilt.cell_measures.sum() == pytest.approx(mesh.domain_measure)
        check_cells(path, mesh)

    def test_interval_cells_have_two_corners(self, tmp_path, interval_forms):
        path = write_cells(tmp_path / "cells.csv", interval_forms.mesh)
        assert path.read_text().splitlines()[0] == "cell_id,v0,v1"
        assert read_cells(path, interval_forms.n).shape == (interval_forms.mesh.n_cells, 2)

    def test_cells_reject_bad_rows(self, tmp_path, small_square_forms):
        mesh = small_square_forms.mesh
        path = write_cells(tmp_path / "cells.csv", mesh)
        lines = path.read_text().splitlines()

        lines[1] = f"0,0,1,{mesh.n_vertices}"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ArtifactError, match="outside"):
            read_cells(path, mesh.n_vertices)

        lines[1], lines[2] = lines[2], lines[1]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ArtifactError, match="out of order"):
            read_cells(path, mesh.n_vertices)

    def test_cells_of_other_mesh_rejected(self, tmp_path, small_square_forms):
        path = write_cells(tmp_path / "cells.csv", small_square_forms.mesh)
        flipped = small_square_forms.mesh.cells[:, ::-1].copy()
        lines = ["cell_id,v0,v1,v2"] + [f"{c},{a},{b},{d}" for c, (a, b, d) in enumerate(flipped)]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ArtifactError, match="connectivity"):
            check_cells(path, small_square_forms.mesh)
        with pytest.raises(ArtifactError, match="missing"):
            read_cells(tmp_path / "none.csv", small_square_forms.n)

    def test_interval_header(self, tmp_path, interval_forms):
        path = write_mesh(tmp_path / "mesh.csv", interval_forms.mesh)
        assert path.read_text().splitlines()[0] == "vertex_id,x,boundary"
        check_mesh(path, interval_forms.mesh)


class TestStages:
    def test_round_trip(self, tmp_path):
        stages = [_stage(0.1), _stage(0.05, ordered=False)]
        restored = read_stages(write_stages(tmp_path / "stages.csv", stages))
        assert restored == stages

    def test_booleans_written_as_words(self, tmp_path):
        path = write_stages(tmp_path / "stages.csv", [_stage(0.1)])
        row = path.read_text().splitlines()[1].split(",")
        assert row[StageRecord.columns().index("converged_u1")] == "false"

    def test_empty_stage_file(self, tmp_path):
        assert read_stages(write_stages(tmp_path / "stages.csv", [])) == []


class TestFreeBoundaryTable:
    def test_interval_segments_have_zero_y(self, tmp_path, interval_forms, pb_model):
        x = interval_forms.mesh.vertices[:, 0]
        u = Field.on(interval_forms, 8.0 * x * (1.0 - x))
        fb = fb_report(interval_forms, u, 16.0, pb_model, 0.05)
        table = read_fb(write_fb(tmp_path / "fb_u0.csv", fb))
        assert np.array_equal(table["x0"], fb.levelset.segments[:, 0, 0])
        assert np.all(table["y0"] == 0.0)
        assert np.array_equal(table["reliable"], fb.gradients.reliable)
        assert np.array_equal(table["jump_residual"], fb.jump_residuals)


class TestText:
    def test_error_record(self, tmp_path):
        path = write_error(tmp_path, "line 3: duplicate key 'mesh.n'")
        assert read_text(path) == "error = line 3: duplicate key 'mesh.n'\n"

    def test_missing_text(self, tmp_path):
        with pytest.raises(ArtifactError):
            read_text(tmp_path / "report.txt")
