"""
Run Configuration
=================

Parser for run configuration files.

A run configuration is flat key-value text:

    # unit square, Prandtl-Batchelor
    mesh.kind = square
    mesh.n = 32
    solve.lambda = 50

Keys a document omits take their defaults from Config. The same format is
echoed (under a ``config.`` prefix) into every run report, which is what
lets ``verify`` rebuild the mesh without the original file.
"""

from dataclasses import dataclass, replace

from vortexpatch.config import Config
from vortexpatch.core.mesh import Mesh, build_disk_mesh, build_interval_mesh, build_rect_mesh
from vortexpatch.core.model import NonlinearityModel
from vortexpatch.core.solve import SolveConfig
from vortexpatch.errors import ConfigError, InvalidArgumentError

MESH_KINDS = ("interval", "square", "rect", "disk")


@dataclass(frozen=True)
class MeshSpec:
    """Recipe for a mesh; `n` means cells per side, cells, or rings by kind."""

    kind: str = Config.MESH_KIND
    n: int = Config.MESH_N
    nx: int | None = None
    ny: int | None = None
    lx: float = Config.MESH_LENGTH
    ly: float = Config.MESH_LENGTH
    length: float = Config.MESH_LENGTH
    radius: float = Config.MESH_RADIUS

    def build(self) -> Mesh:
        if self.kind == "interval":
            return build_interval_mesh(self.n, self.length)
        if self.kind == "square":
            return build_rect_mesh(self.n, self.n, self.length, self.length)
        if self.kind == "rect":
            return build_rect_mesh(self.nx or self.n, self.ny or self.n, self.lx, self.ly)
        if self.kind == "disk":
            return build_disk_mesh(self.n, self.radius)
        raise InvalidArgumentError(f"unknown mesh kind {self.kind!r}")


# key -> (target, field, converter)
_KEYS = {
    "mesh.kind": ("mesh", "kind", str),
    "mesh.n": ("mesh", "n", int),
    "mesh.nx": ("mesh", "nx", int),
    "mesh.ny": ("mesh", "ny", int),
    "mesh.lx": ("mesh", "lx", float),
    "mesh.ly": ("mesh", "ly", float),
    "mesh.length": ("mesh", "length", float),
    "mesh.radius": ("mesh", "radius", float),
    "model.kind": ("model", "kind", str),
    "model.a1": ("model", "a1", float),
    "model.a2": ("model", "a2", float),
    "model.p": ("model", "p", float),
    "solve.lambda": ("solve", "lam", float),
    "solve.eps_start": ("solve", "eps_start", float),
    "solve.eps_factor": ("solve", "eps_factor", float),
    "solve.eps_min": ("solve", "eps_min", float),
    "solve.grad_tol": ("solve", "grad_tol", float),
    "solve.max_iters": ("solve", "max_iters", int),
    "solve.path_points": ("solve", "path_points", int),
    "solve.restarts": ("solve", "restarts", int),
    "solve.seed": ("solve", "seed", int),
}


def _read_pairs(text: str) -> dict[str, tuple[str, int]]:
    pairs: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if key in pairs:
            raise ConfigError(f"duplicate key {key!r} (first set on line {pairs[key][1]})", line=lineno)
        pairs[key] = (value, lineno)
    return pairs


def _convert(key: str, value: str, converter, lineno: int):
    if key == "solve.eps_start" and value.lower() == "auto":
        return None
    try:
        return converter(value)
    except ValueError:
        raise ConfigError(f"{key} expects {converter.__name__}, got {value!r}", line=lineno) from None


def parse_config(text: str) -> tuple[MeshSpec, NonlinearityModel, SolveConfig]:
    """
    Parse and validate a run configuration document.

    Args:
        text: Configuration file contents

    Returns:
        Tuple of (MeshSpec, NonlinearityModel, SolveConfig)

    Raises:
        ConfigError: Malformed line, duplicate or unknown keys, missing
            solve.lambda, or a value outside its documented range
    """
    pairs = _read_pairs(text)

    unknown = [f"{key} (line {lineno})" for key, (_, lineno) in pairs.items() if key not in _KEYS]
    if unknown:
        raise ConfigError("unknown keys: " + ", ".join(unknown))

    values: dict[str, dict] = {"mesh": {}, "model": {}, "solve": {}}
    for key, (value, lineno) in pairs.items():
        target, field_name, converter = _KEYS[key]
        values[target][field_name] = _convert(key, value, converter, lineno)

    def line_of(key):
        return pairs.get(key, (None, None))[1]

    if "lam" not in values["solve"]:
        raise ConfigError("solve.lambda is required")

    mesh_kind = values["mesh"].get("kind", Config.MESH_KIND)
    if mesh_kind not in MESH_KINDS:
        raise ConfigError(
            f"mesh.kind must be one of {', '.join(MESH_KINDS)}, got {mesh_kind!r}", line=line_of("mesh.kind")
        )

    p = values["model"].get("p", Config.MODEL_P)
    if not 1.0 < p < 2.0:
        raise ConfigError(
            f"model.p = {p!r} violates the sublinear growth condition, which requires 1 < p < 2",
            line=line_of("model.p"),
        )

    eps_factor = values["solve"].get("eps_factor", Config.SOLVE_EPS_FACTOR)
    if not 0.0 < eps_factor < 1.0:
        raise ConfigError(f"solve.eps_factor must lie in (0, 1), got {eps_factor!r}", line=line_of("solve.eps_factor"))

    try:
        mesh_spec = MeshSpec(**values["mesh"])
        model = NonlinearityModel.create(**values["model"])
        solve_config = SolveConfig(**values["solve"])
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from exc

    return mesh_spec, model, solve_config


def render_config(mesh_spec: MeshSpec, model: NonlinearityModel, solve_config: SolveConfig) -> list[str]:
    """
    Render a configuration back to `key = value` lines that parse_config accepts.

    Floats are written with repr so a reparse reproduces them exactly.
    """
    sources = {"mesh": mesh_spec, "model": model, "solve": solve_config}
    lines = []
    for key, (target, field_name, _) in _KEYS.items():
        value = getattr(sources[target], field_name)
        if value is None:
            if key != "solve.eps_start":
                continue
            value = "auto"
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return lines


def with_threads(solve_config: SolveConfig, threads: int) -> SolveConfig:
    """Copy of solve_config with a different worker count."""
    return replace(solve_config, threads=threads)


__all__ = ["MeshSpec", "parse_config", "render_config", "with_threads", "MESH_KINDS"]
