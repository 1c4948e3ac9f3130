"""
Error Types
===========

Exception hierarchy for vortexpatch. Every error raised on purpose by the
package derives from VortexPatchError, so the CLI can map it to an exit code.
"""


class VortexPatchError(Exception):
    """Base class for all vortexpatch errors."""


class InvalidArgumentError(VortexPatchError, ValueError):
    """An argument violates a documented precondition."""


class MeshError(VortexPatchError):
    """A mesh violates one of its structural invariants."""


class AssemblyError(VortexPatchError):
    """Assembly hit a degenerate cell."""

    def __init__(self, message: str, cell_index: int):
        super().__init__(f"{message} (cell {cell_index})")
        self.cell_index = cell_index


class ConfigError(VortexPatchError):
    """A run configuration document is malformed or invalid."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line = line


class NoSolutionError(VortexPatchError):
    """A closed-form oracle has no root for the requested parameters."""


class PathCollapseError(VortexPatchError):
    """The mountain-pass path lost its interior maximum."""


class ArtifactError(VortexPatchError):
    """An artifact file is missing, corrupt, or violates a field invariant."""
