"""
vortexpatch Numerical Core
==========================

- mesh: P1 meshes, stiffness and lumped mass
- model: nonlinearities g and the smoothing β, B, g_ε, G_ε
- energy: J, J_ε and the truncated J̃_ε with gradients
- solve / mountain_pass / continuation: the two solution branches
- freeboundary: level sets and free boundary checks
- oracles: closed-form 1D and radial solutions
"""

from .continuation import ContinuationSummary, StageRecord, continuation, eps_schedule, estimate_lambda_star
from .energy import EnergyFunctional, Field, eval_j, eval_j_eps, eval_j_tilde, grad_j_eps, grad_j_tilde
from .freeboundary import FbReport, LevelSet, extract_level_set, fb_report, generalized_fb_check
from .mesh import AssembledForms, Mesh, assemble, build_disk_mesh, build_interval_mesh, build_rect_mesh
from .model import NonlinearityModel, big_g_eps, g_eps
from .mountain_pass import c2_floor, mountain_pass
from .oracles import oracle_1d, oracle_radial, threshold_1d
from .solve import BranchResult, SolveConfig, eps_zero, minimize

__all__ = [
    "AssembledForms",
    "BranchResult",
    "ContinuationSummary",
    "EnergyFunctional",
    "FbReport",
    "Field",
    "LevelSet",
    "Mesh",
    "NonlinearityModel",
    "SolveConfig",
    "StageRecord",
    "assemble",
    "big_g_eps",
    "build_disk_mesh",
    "build_interval_mesh",
    "build_rect_mesh",
    "c2_floor",
    "continuation",
    "eps_schedule",
    "eps_zero",
    "estimate_lambda_star",
    "eval_j",
    "eval_j_eps",
    "eval_j_tilde",
    "extract_level_set",
    "fb_report",
    "g_eps",
    "generalized_fb_check",
    "grad_j_eps",
    "grad_j_tilde",
    "minimize",
    "mountain_pass",
    "oracle_1d",
    "oracle_radial",
    "threshold_1d",
]
