"""
vortexpatch - Two-Solution Solver for Sublinear Free Boundary Problems
======================================================================

Computes the energy minimizer and the mountain-pass solution of

    -Δu = λ χ{u>1} g(x, (u-1)+)   in Ω \\ F(u),
    |∇u+|² - |∇u-|² = 2           on F(u) = ∂{u > 1},
    u = 0                          on ∂Ω,

through ε-regularized energies on P1 meshes, and checks the energy
orderings, the ordering u1 ≤ u0, and the free boundary conditions.
"""

__version__ = "0.1.0"
