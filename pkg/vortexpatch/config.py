"""
vortexpatch Configuration
=========================

Defaults for meshes, nonlinearities and the ε-continuation. Run
configuration files override the solver defaults per run; the process
knobs at the bottom are read from the environment (a .env file is loaded
by the CLI before this module is imported).
"""

import os


def _env(name: str, default: str) -> str:
    return os.environ.get(f"VORTEXPATCH_{name}", default)


class Config:
    """
    Defaults for vortexpatch runs.

    Solver defaults are the values parse_config fills in for keys a run
    configuration omits.
    """

    # ==========================================================================
    # MESH DEFAULTS
    # ==========================================================================

    MESH_KIND = "square"      # interval | square | rect | disk
    MESH_N = 32               # cells per side / cells / rings
    MESH_LENGTH = 1.0         # interval length, square side
    MESH_RADIUS = 1.0         # disk radius

    # ==========================================================================
    # NONLINEARITY DEFAULTS
    # ==========================================================================

    MODEL_KIND = "prandtl_batchelor"   # prandtl_batchelor | power
    MODEL_A1 = 1.0
    MODEL_A2 = 0.0
    MODEL_P = 1.5

    # ==========================================================================
    # ε-CONTINUATION AND DESCENT
    # ==========================================================================

    SOLVE_EPS_START = 0.1        # used when solve.eps_start = auto
    SOLVE_EPS_FACTOR = 0.5
    SOLVE_EPS_MIN = 1e-3
    SOLVE_GRAD_TOL = 1e-5        # lumped-mass dual norm of the gradient
    SOLVE_MAX_ITERS = 3000
    SOLVE_PATH_POINTS = 16
    SOLVE_RESTARTS = 3
    SOLVE_SEED = int(_env("SEED", "12345"))

    # Armijo sufficient-decrease constant and the smallest step tried
    ARMIJO_C = 1e-4
    ARMIJO_MIN_STEP = 1e-14

    # Polak-Ribière direction is reset to steepest descent this often
    CG_RESTART_EVERY = 50

    # Mountain pass: path deformation hands over to the min-mode polish
    # once the peak gradient norm drops below MP_HANDOFF_TOL
    MP_HANDOFF_TOL = 1e-2
    MP_POLISH_ITERS = 200
    MP_SEGMENT_SAMPLES = 8       # energy samples per path segment before the bounded refine
    MP_STEP_HALVINGS = 6         # a peak step that drops the path below the floor is halved this often
    MP_STALL_ITERS = 50          # deformation hands over when the path maximum stops decreasing
    FD_STEP = 1e-6

    # Free boundary diagnostics use δ = FB_DELTA_FACTOR · ε
    FB_DELTA_FACTOR = 3.0

    # Verdict tolerance for u1 ≤ u0
    ORDER_TOL = 1e-10

    # ==========================================================================
    # PROCESS SETTINGS
    # ==========================================================================

    LOG_LEVEL = _env("LOG_LEVEL", "INFO")
    THREADS = int(_env("THREADS", "1"))
    OUT_DIR = _env("OUT_DIR", "out")

    # OTLP collector for solver traces (empty = no export)
    OTEL_ENDPOINT = _env("OTEL_ENDPOINT", "")

    @classmethod
    def validate(cls) -> list[str]:
        """Validate configuration and return list of issues."""
        issues = []

        if not 0.0 < cls.SOLVE_EPS_FACTOR < 1.0:
            issues.append(f"SOLVE_EPS_FACTOR must lie in (0, 1), got {cls.SOLVE_EPS_FACTOR}")

        if not cls.SOLVE_EPS_MIN < cls.SOLVE_EPS_START:
            issues.append("SOLVE_EPS_MIN must be below SOLVE_EPS_START")

        if cls.THREADS < 1:
            issues.append(f"VORTEXPATCH_THREADS must be at least 1, got {cls.THREADS}")

        if not 1.0 < cls.MODEL_P < 2.0:
            issues.append(f"MODEL_P must satisfy 1 < p < 2, got {cls.MODEL_P}")

        return issues

    @classmethod
    def print_config(cls, console=None):
        """Print current configuration for debugging."""
        from rich.console import Console
        from rich.table import Table

        console = console or Console()
        table = Table(title="vortexpatch Configuration")
        table.add_column("Setting")
        table.add_column("Value", justify="right")

        for name in sorted(vars(cls)):
            if name.isupper():
                table.add_row(name, str(getattr(cls, name)))

        console.print(table)
