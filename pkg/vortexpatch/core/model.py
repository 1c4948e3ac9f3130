"""
Nonlinearity Model
==================

The nonlinearity g, its primitive G, the smoothing pair (β, B) and the
ε-smoothed g_ε(s) = B(s/ε)·g(s), G_ε(s) = ∫₀ˢ g_ε.

β is the normalized polynomial bump 30s²(1−s)² on [0, 1]. It is C¹ on the
real line and integrates to 1, so B has the closed form 10s³ − 15s⁴ + 6s⁵
between its two plateaus.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from vortexpatch.config import Config
from vortexpatch.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

MODEL_KINDS = ("prandtl_batchelor", "power")

# Gauss-Legendre points for the smoothed part of G_ε
NODAL_QUADRATURE_POINTS = 24


def _like(s, result):
    return float(result) if np.ndim(s) == 0 else result


def beta(s):
    """30·s²(1−s)² on [0, 1], zero elsewhere."""
    x = np.asarray(s, dtype=float)
    inside = (x >= 0.0) & (x <= 1.0)
    return _like(s, np.where(inside, 30.0 * x**2 * (1.0 - x) ** 2, 0.0))


def big_b(s):
    """Primitive of beta: 0 below 0, 1 above 1, nondecreasing."""
    t = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return _like(s, t**3 * (10.0 - 15.0 * t + 6.0 * t**2))


def big_b_integral(x):
    """∫₀ˣ B(t) dt for 0 ≤ x ≤ 1, elementwise."""
    return 2.5 * x**4 - 3.0 * x**5 + x**6


@dataclass(frozen=True)
class NonlinearityModel:
    """
    g(s) = a1 + a2·s^(p−1) for s ≥ 0.

    kind = prandtl_batchelor is the constant case g ≡ 1.
    """

    kind: str
    a1: float
    a2: float
    p: float

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidArgumentError(f"model kind must be one of {', '.join(MODEL_KINDS)}, got {self.kind!r}")
        if not 1.0 < self.p < 2.0:
            raise InvalidArgumentError(
                f"p = {self.p!r} violates the sublinear growth condition, which requires 1 < p < 2"
            )
        if self.a1 < 0.0 or self.a2 < 0.0:
            raise InvalidArgumentError("a1 and a2 must be nonnegative")
        if self.a1 + self.a2 <= 0.0:
            raise InvalidArgumentError("g must be positive for s > 0: a1 + a2 > 0 required")
        if self.kind == "prandtl_batchelor" and (self.a1 != 1.0 or self.a2 != 0.0):
            raise InvalidArgumentError("prandtl_batchelor requires a1 = 1 and a2 = 0")

    @classmethod
    def create(
        cls,
        kind: str = Config.MODEL_KIND,
        a1: float | None = None,
        a2: float | None = None,
        p: float = Config.MODEL_P,
    ) -> "NonlinearityModel":
        """
        Build a model, filling coefficients from Config.

        For prandtl_batchelor the coefficients are forced to a1 = 1, a2 = 0;
        other values are ignored with a warning.
        """
        if kind == "prandtl_batchelor":
            if (a1 is not None and a1 != 1.0) or (a2 is not None and a2 != 0.0):
                logger.warning("prandtl_batchelor ignores a1=%s, a2=%s (g is identically 1)", a1, a2)
            return cls(kind=kind, a1=1.0, a2=0.0, p=p)
        return cls(
            kind=kind,
            a1=Config.MODEL_A1 if a1 is None else a1,
            a2=Config.MODEL_A2 if a2 is None else a2,
            p=p,
        )

    @classmethod
    def prandtl_batchelor(cls) -> "NonlinearityModel":
        return cls.create("prandtl_batchelor")

    def g(self, s):
        x = np.maximum(np.asarray(s, dtype=float), 0.0)
        if self.a2 == 0.0:
            return _like(s, np.full_like(x, self.a1))
        return _like(s, self.a1 + self.a2 * x ** (self.p - 1.0))

    def big_g(self, s):
        """Exact primitive a1·s + (a2/p)·s^p."""
        x = np.maximum(np.asarray(s, dtype=float), 0.0)
        return _like(s, self.a1 * x + (self.a2 / self.p) * x**self.p)

    def smoothing_gap(self, eps: float) -> float:
        """Upper bound a1·ε + (a2/p)·ε^p on G − G_ε."""
        return self.a1 * eps + (self.a2 / self.p) * eps**self.p


def _require_eps(eps: float):
    if not eps > 0.0 or not math.isfinite(eps):
        raise InvalidArgumentError(f"eps must be positive, got {eps!r}")


def g_eps(model: NonlinearityModel, s, eps: float):
    """B(s/ε)·g(s); zero at s = 0 and equal to g(s) for s ≥ ε."""
    _require_eps(eps)
    x = np.maximum(np.asarray(s, dtype=float), 0.0)
    return _like(s, big_b(x / eps) * model.g(x))


def big_g_eps(model: NonlinearityModel, s: float, eps: float) -> float:
    """
    G_ε(s) by adaptive Gauss-Kronrod quadrature of g_ε on [0, s].

    Args:
        model: Nonlinearity
        s: Upper limit, s ≥ 0
        eps: Smoothing width

    Returns:
        ∫₀ˢ g_ε(t) dt to absolute tolerance 1e-12
    """
    _require_eps(eps)
    if s <= 0.0:
        return 0.0
    points = [eps] if eps < s else None
    value, _ = integrate.quad(
        lambda t: g_eps(model, t, eps), 0.0, s, points=points, epsabs=1e-12, epsrel=1e-12, limit=200
    )
    return float(value)


@lru_cache(maxsize=4)
def _legendre_rule(points: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(points)
    return nodes, weights


def big_g_eps_nodal(model: NonlinearityModel, s, eps: float):
    """
    Vectorized G_ε for the energy loops.

    On [0, min(s, ε)] the a1 part is a1·ε·∫B in closed form and the a2 part
    uses a fixed Gauss-Legendre rule; beyond ε, g_ε = g and the exact
    primitive G is used.
    """
    _require_eps(eps)
    x = np.maximum(np.asarray(s, dtype=float), 0.0)
    head = np.minimum(x, eps)

    smoothed = model.a1 * eps * big_b_integral(head / eps)
    if model.a2 != 0.0:
        nodes, weights = _legendre_rule(NODAL_QUADRATURE_POINTS)
        t = 0.5 * head[..., None] * (nodes + 1.0)
        power = model.a2 * big_b(t / eps) * t ** (model.p - 1.0)
        smoothed = smoothed + 0.5 * head * (power @ weights)

    tail = np.where(x > eps, model.big_g(x) - model.big_g(eps), 0.0)
    return _like(s, smoothed + tail)
