"""
Closed-Form Oracles
===================

Exact two-phase solutions of the g ≡ 1 problem used as ground truth.

1D, on (0, 1), symmetric about ½ with free boundary at x = a:
    u = x/a on (0, a),  u = 1 + (λ/2)(x − a)(1 − a − x) on (a, 1 − a)
    matching: ((λ/2)(1 − 2a))² − 1/a² = 2
    J = 1/a + L − λ²L³/24 with L = 1 − 2a

Disk of radius R with free boundary at r = ρ:
    u = log(R/r)/log(R/ρ) on (ρ, R),  u = 1 + (λ/4)(ρ² − r²) on (0, ρ)
    matching: (λρ/2)² − (1/(ρ log(R/ρ)))² = 2
    J = π/log(R/ρ) + πρ² − πλ²ρ⁴/16

Roots are bracketed by sign changes on a grid and refined by bisection.
The lower-energy root is the stable (minimizer) branch.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from vortexpatch.errors import InvalidArgumentError, NoSolutionError

logger = logging.getLogger(__name__)

SCAN_POINTS = 4000


def _roots(func, lo: float, hi: float) -> list[float]:
    grid = np.linspace(lo, hi, SCAN_POINTS)
    values = np.array([func(x) for x in grid])
    roots = []
    for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
        roots.append(float(optimize.bisect(func, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15)))
    return roots


@dataclass(frozen=True)
class Oracle1D:
    """Symmetric two-phase solutions on the unit interval."""

    lam: float
    a_stable: float
    a_unstable: float

    def energy(self, a: float) -> float:
        length = 1.0 - 2.0 * a
        return 1.0 / a + length - self.lam**2 * length**3 / 24.0

    @property
    def energy_stable(self) -> float:
        return self.energy(self.a_stable)

    @property
    def energy_unstable(self) -> float:
        return self.energy(self.a_unstable)

    def profile(self, a: float, x) -> np.ndarray:
        """u(x) of the solution with free boundary at a."""
        x = np.asarray(x, dtype=float).reshape(-1)
        y = np.minimum(x, 1.0 - x)
        inner = 1.0 + 0.5 * self.lam * (x - a) * (1.0 - a - x)
        return np.where(y < a, y / a, inner)

    def slopes(self, a: float) -> tuple[float, float]:
        """(|u'| inside the phase, |u'| outside) at the free boundary."""
        return 0.5 * self.lam * (1.0 - 2.0 * a), 1.0 / a


def matching_1d(lam: float, a: float) -> float:
    return (0.5 * lam * (1.0 - 2.0 * a)) ** 2 - 1.0 / a**2 - 2.0


def oracle_1d(lam: float) -> Oracle1D:
    """
    Both free-boundary positions of the symmetric 1D solutions.

    Raises:
        NoSolutionError: λ is below the 1D threshold (no real root)
    """
    if not lam > 0.0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam!r}")
    roots = _roots(lambda a: matching_1d(lam, a), 1e-6, 0.5 - 1e-9)
    if len(roots) < 2:
        raise NoSolutionError(f"no two-phase 1D solution at lambda={lam} (below threshold {threshold_1d():.6g})")

    oracle = Oracle1D(lam=lam, a_stable=roots[0], a_unstable=roots[-1])
    if oracle.energy(roots[-1]) < oracle.energy(roots[0]):
        oracle = Oracle1D(lam=lam, a_stable=roots[-1], a_unstable=roots[0])
    return oracle


def _max_matching_1d(lam: float) -> float:
    best = optimize.minimize_scalar(
        lambda a: -matching_1d(lam, a), bounds=(1e-6, 0.5 - 1e-9), method="bounded", options={"xatol": 1e-12}
    )
    return -float(best.fun)


def threshold_1d(lo: float = 1.0, hi: float = 1e4) -> float:
    """λ at which the two roots of the 1D matching equation merge."""
    return float(optimize.brentq(_max_matching_1d, lo, hi, xtol=1e-12))


@dataclass(frozen=True)
class OracleRadial:
    """Radial two-phase solutions on the disk of radius R."""

    lam: float
    radius: float
    rho_stable: float
    rho_unstable: float

    def energy(self, rho: float) -> float:
        return (
            math.pi / math.log(self.radius / rho)
            + math.pi * rho**2
            - math.pi * self.lam**2 * rho**4 / 16.0
        )

    @property
    def energy_stable(self) -> float:
        return self.energy(self.rho_stable)

    @property
    def energy_unstable(self) -> float:
        return self.energy(self.rho_unstable)

    def profile(self, rho: float, points) -> np.ndarray:
        """u at the given points (shape (k, 2)) for free-boundary radius rho."""
        r = np.linalg.norm(np.atleast_2d(points), axis=1)
        outer = np.log(self.radius / np.maximum(r, 1e-300)) / math.log(self.radius / rho)
        inner = 1.0 + 0.25 * self.lam * (rho**2 - r**2)
        return np.where(r < rho, inner, np.maximum(outer, 0.0))

    def slopes(self, rho: float) -> tuple[float, float]:
        return 0.5 * self.lam * rho, 1.0 / (rho * math.log(self.radius / rho))


def matching_radial(lam: float, radius: float, rho: float) -> float:
    return (0.5 * lam * rho) ** 2 - (1.0 / (rho * math.log(radius / rho))) ** 2 - 2.0


def oracle_radial(lam: float, radius: float = 1.0) -> OracleRadial:
    """
    Both free-boundary radii of the radial solutions.

    Raises:
        NoSolutionError: fewer than two roots in (0, R)
    """
    if not (lam > 0.0 and radius > 0.0):
        raise InvalidArgumentError("lambda and radius must be positive")
    roots = _roots(lambda rho: matching_radial(lam, radius, rho), 1e-6 * radius, radius * (1.0 - 1e-9))
    if len(roots) < 2:
        raise NoSolutionError(f"no two-phase radial solution at lambda={lam}, R={radius}")

    oracle = OracleRadial(lam=lam, radius=radius, rho_stable=roots[0], rho_unstable=roots[-1])
    if oracle.energy(roots[-1]) < oracle.energy(roots[0]):
        oracle = OracleRadial(lam=lam, radius=radius, rho_stable=roots[-1], rho_unstable=roots[0])
    return oracle
