"""
Run Artifacts
=============

CSV import/export of everything a run leaves on disk:

    u0.csv, u1.csv      vertex_id,value
    mesh.csv            vertex_id,x[,y],boundary
    cells.csv           cell_id,v0,v1[,v2]
    stages.csv          one row per ε stage (StageRecord columns)
    fb_u0.csv, fb_u1.csv
                        seg_id,x0,y0,x1,y1,gplus_sq,gminus_sq,jump_residual,reliable
    report.txt          flat key = value lines (see vortexpatch.report)
    error.txt           failure record next to partial artifacts

Floats are written with repr, so a read reproduces the written value
exactly.
"""

import csv
import logging
from pathlib import Path

import numpy as np

from vortexpatch.core.continuation import StageRecord
from vortexpatch.core.energy import Field
from vortexpatch.core.freeboundary import FbReport
from vortexpatch.core.mesh import AssembledForms, Mesh
from vortexpatch.errors import ArtifactError

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-14

FIELD_COLUMNS = ["vertex_id", "value"]
FB_COLUMNS = ["seg_id", "x0", "y0", "x1", "y1", "gplus_sq", "gminus_sq", "jump_residual", "reliable"]


def _read_rows(path: Path, columns: list[str]) -> list[dict[str, str]]:
    if not path.is_file():
        raise ArtifactError(f"missing artifact: {path}")
    with path.open(newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != columns:
            raise ArtifactError(f"{path.name}: expected columns {columns}, found {reader.fieldnames}")
        return list(reader)


def _float(path: Path, row: int, text: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ArtifactError(f"{path.name} row {row}: not a number: {text!r}") from None


def _bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true")


# =============================================================================
# FIELDS
# =============================================================================


def write_field(path: Path, field: Field | np.ndarray) -> Path:
    values = field.values if isinstance(field, Field) else np.asarray(field, dtype=float)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(FIELD_COLUMNS)
        for i, v in enumerate(values):
            writer.writerow([i, repr(float(v))])
    return path


def read_field(path: Path, forms: AssembledForms) -> Field:
    """
    Import a nodal field written by write_field.

    Raises:
        ArtifactError: missing file, wrong vertex count or ordering,
            non-finite value, or a boundary value farther than 1e-14 from zero
    """
    rows = _read_rows(path, FIELD_COLUMNS)
    if len(rows) != forms.n:
        raise ArtifactError(f"{path.name}: expected {forms.n} vertices, found {len(rows)}")

    values = np.empty(forms.n)
    for k, row in enumerate(rows):
        if row["vertex_id"] != str(k):
            raise ArtifactError(f"{path.name} row {k}: vertex_id {row['vertex_id']!r} out of order")
        values[k] = _float(path, k, row["value"])

    if not np.all(np.isfinite(values)):
        raise ArtifactError(f"{path.name}: non-finite values")
    boundary = forms.mesh.boundary_mask
    worst = float(np.max(np.abs(values[boundary]), initial=0.0))
    if worst > BOUNDARY_TOL:
        raise ArtifactError(f"{path.name}: boundary value {worst:.3e} violates the zero Dirichlet condition")
    values[boundary] = 0.0
    return Field.on(forms, values)


# =============================================================================
# MESH
# =============================================================================


def write_mesh(path: Path, mesh: Mesh) -> Path:
    axes = ["x", "y"][: mesh.dim]
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["vertex_id", *axes, "boundary"])
        for i, (point, on_boundary) in enumerate(zip(mesh.vertices, mesh.boundary_mask)):
            writer.writerow([i, *(repr(float(c)) for c in point), int(on_boundary)])
    return path


def check_mesh(path: Path, mesh: Mesh):
    """
    Compare a mesh.csv with a rebuilt mesh.

    Raises:
        ArtifactError: different vertex count, coordinates or boundary flags
    """
    axes = ["x", "y"][: mesh.dim]
    rows = _read_rows(path, ["vertex_id", *axes, "boundary"])
    if len(rows) != mesh.n_vertices:
        raise ArtifactError(f"{path.name}: {len(rows)} vertices, rebuilt mesh has {mesh.n_vertices}")
    coords = np.array([[_float(path, k, row[a]) for a in axes] for k, row in enumerate(rows)])
    flags = np.array([_bool(row["boundary"]) for row in rows])
    if not np.array_equal(coords, mesh.vertices):
        raise ArtifactError(f"{path.name}: vertex coordinates differ from the rebuilt mesh")
    if not np.array_equal(flags, mesh.boundary_mask):
        raise ArtifactError(f"{path.name}: boundary flags differ from the rebuilt mesh")


def _cell_columns(corners: int) -> list[str]:
    return ["cell_id", *(f"v{k}" for k in range(corners))]


def write_cells(path: Path, mesh: Mesh) -> Path:
    """Connectivity table: cell_id,v0,v1[,v2] in the mesh's vertex numbering."""
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(_cell_columns(mesh.cells.shape[1]))
        for c, cell in enumerate(mesh.cells):
            writer.writerow([c, *(int(v) for v in cell)])
    return path


def read_cells(path: Path, n_vertices: int) -> np.ndarray:
    """
    Load a cells.csv as an (m, dim + 1) integer array.

    Raises:
        ArtifactError: missing file, wrong columns, rows out of order, or a
            vertex index outside [0, n_vertices)
    """
    if not path.is_file():
        raise ArtifactError(f"missing artifact: {path}")
    with path.open(newline="") as f:
        header = next(csv.reader(f), [])
    if len(header) not in (3, 4) or header != _cell_columns(len(header) - 1):
        raise ArtifactError(f"{path.name}: unexpected columns {header}")

    rows = _read_rows(path, header)
    cells = np.empty((len(rows), len(header) - 1), dtype=np.int64)
    for c, row in enumerate(rows):
        try:
            if int(row["cell_id"]) != c:
                raise ArtifactError(f"{path.name}: row {c + 2} out of order")
            cells[c] = [int(row[name]) for name in header[1:]]
        except ValueError:
            raise ArtifactError(f"{path.name}: row {c + 2} has a non-integer entry") from None
    if cells.size and (cells.min() < 0 or cells.max() >= n_vertices):
        raise ArtifactError(f"{path.name}: vertex index outside [0, {n_vertices})")
    return cells


def check_cells(path: Path, mesh: Mesh):
    """Compare a cells.csv with a rebuilt mesh's connectivity."""
    if not np.array_equal(read_cells(path, mesh.n_vertices), mesh.cells):
        raise ArtifactError(f"{path.name}: connectivity differs from the rebuilt mesh")


# =============================================================================
# STAGES
# =============================================================================


def write_stages(path: Path, stages: list[StageRecord]) -> Path:
    columns = StageRecord.columns()
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for record in stages:
            row = []
            for name in columns:
                value = getattr(record, name)
                row.append(str(value).lower() if isinstance(value, bool) else repr(float(value)))
            writer.writerow(row)
    return path


def read_stages(path: Path) -> list[StageRecord]:
    columns = StageRecord.columns()
    records = []
    for k, row in enumerate(_read_rows(path, columns)):
        values = {}
        for name in columns:
            text = row[name]
            values[name] = _bool(text) if text in ("true", "false") else _float(path, k, text)
        records.append(StageRecord(**values))
    return records


# =============================================================================
# FREE BOUNDARY
# =============================================================================


def write_fb(path: Path, fb: FbReport) -> Path:
    segments = fb.levelset.segments
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(FB_COLUMNS)
        for k in range(len(fb.levelset)):
            (x0, *y0), (x1, *y1) = segments[k]
            writer.writerow([
                k,
                repr(float(x0)),
                repr(float(y0[0]) if y0 else 0.0),
                repr(float(x1)),
                repr(float(y1[0]) if y1 else 0.0),
                repr(float(fb.gradients.gplus_sq[k])),
                repr(float(fb.gradients.gminus_sq[k])),
                repr(float(fb.jump_residuals[k])),
                int(fb.gradients.reliable[k]),
            ])
    return path


def read_fb(path: Path) -> dict[str, np.ndarray]:
    """Columns of an fb CSV as arrays (reliable as bool)."""
    rows = _read_rows(path, FB_COLUMNS)
    table = {}
    for name in FB_COLUMNS[1:-1]:
        table[name] = np.array([_float(path, k, row[name]) for k, row in enumerate(rows)])
    table["reliable"] = np.array([_bool(row["reliable"]) for row in rows], dtype=bool)
    return table


# =============================================================================
# TEXT RECORDS
# =============================================================================


def write_text(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def read_text(path: Path) -> str:
    if not path.is_file():
        raise ArtifactError(f"missing artifact: {path}")
    return path.read_text()


def write_error(out_dir: Path, message: str) -> Path:
    logger.error("%s", message)
    return write_text(out_dir / "error.txt", f"error = {message}\n")

