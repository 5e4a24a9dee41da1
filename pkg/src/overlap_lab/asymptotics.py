"""Limit laws for the joint density of a real eigenvalue and its overlap.

Edge scaling: z = sqrt(N)(1 + tau) + zeta N^{-1/6}, (1 - tau) N^{1/3} = b^2,
t = O_kk - 1 unscaled.  Bulk and strong non-normality limits are reached
from the edge law through the reparametrisations documented on each
function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erfc

from .deformed import ai_b_range, cum_ai, deformed, tail_sq
from .quad import DEFAULT_CONFIG, QuadratureConfig, integrate


@dataclass(frozen=True)
class EdgeCoords:
    zeta: float
    t: float
    b: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be non-negative")


@dataclass(frozen=True)
class TQuadruple:
    T0: float
    T1: float
    T2: float
    T3: float
    # ingredients, kept for diagnostics
    J: float = 0.0
    ai: float = 0.0
    aip: float = 0.0


@dataclass(frozen=True)
class BulkCoords:
    a: float
    w: float
    nu: float

    def __post_init__(self):
        if self.w <= 0 or self.a <= 0 or self.nu <= 0:
            raise ValueError("a, w and nu must be positive")

    @property
    def A(self) -> float:
        return self.a * self.a * self.w

    @property
    def b(self) -> float:
        return self.a / (self.nu * math.sqrt(2.0))

    @property
    def zeta(self) -> float:
        return -self.nu**2 * self.w


@dataclass(frozen=True)
class StrongCoords:
    delta: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def edge(self, b: float):
        """(zeta, t) on the edge scale for a given b."""
        return math.sqrt(2.0) * b * self.delta, math.sqrt(2.0) * b**3 * self.sigma


def _check_b(b):
    if not b > 0:
        raise ValueError("b must be positive: at b = 0 the overlap density collapses to "
                         "rho_0(zeta) delta(t), which has no pointwise value")


def t_quadruple(zeta: float, b: float, cfg: Optional[QuadratureConfig] = None) -> TQuadruple:
    """T0..T3 of the edge law.

    T3 = int_zeta^inf (Ai_b'^2 - Ai_b Ai_b'') dp with Ai_b'' eliminated through
    Ai_b'' = b^2 Ai_b' + p Ai_b.
    """
    _check_b(b)
    cfg = cfg or DEFAULT_CONFIG
    beta = b * b
    hi, pts = ai_b_range(zeta, b, cfg)

    def f(p):
        a = deformed(p, beta, 0)
        ap = deformed(p, beta, 1)
        return np.stack([a * a, ap * ap - beta * a * ap - p * a * a], axis=1)

    if hi > zeta:
        J, T3 = (float(v) for v in integrate(f, zeta, hi, cfg, pts))
    else:
        J, T3 = 0.0, 0.0
    ai = float(deformed(zeta, beta, 0)[0])
    aip = float(deformed(zeta, beta, 1)[0])
    T2 = beta * T3 + J
    T1 = -zeta * T3 + 0.5 * ai * ai + beta * J
    T0 = math.fsum([-T3, 0.5 * beta * ai * ai, -0.5 * ai * aip, -zeta * J])
    return TQuadruple(T0, T1, T2, T3, J, ai, aip)


def edge_law(T: TQuadruple, zeta: float, t, b: float):
    """Evaluate the edge density for precomputed coefficients (vectorised in t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    b2 = b * b
    b6 = b2**3
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        expo = b2 * zeta / t - b6 / (2 * t * t) - b6 / (3 * t**3)
        # pairwise sum of the bracket terms
        bracket = (T.T0 + b2 * T.T1 / t) + (b2 * b2 * T.T2 / t**2 + b6 * T.T3 / t**3)
        # fold the polynomial prefactor into the exponent before exponentiating
        lead = np.log(np.abs(bracket)) + 2 * math.log(b) - 2 * np.log(t) + expo
        out = np.sign(bracket) * np.exp(lead)
    return np.where(t > 0, np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0), 0.0)


def jpdf_edge(coords: EdgeCoords = None, *, zeta=None, t=None, b=None,
              cfg: Optional[QuadratureConfig] = None, T: Optional[TQuadruple] = None):
    """Limiting joint density of (zeta, t) at weak non-normality near the edge.

    Accepts an :class:`EdgeCoords` or keyword arguments; ``t`` may be an
    array (the zeta-dependent coefficients are computed once).
    """
    if coords is not None:
        zeta, t, b = coords.zeta, coords.t, coords.b
    _check_b(b)
    if T is None:
        T = t_quadruple(zeta, b, cfg)
    out = edge_law(T, zeta, t, b)
    return float(out) if np.ndim(out) == 0 else out


def edge_density(zeta: float, b: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """rho_b(zeta): the edge law with the overlap integrated out.

    rho_b = J + Ai_b/2 (1 - int_zeta^inf Ai_b), and 1 - int_zeta^inf Ai_b is
    the cumulative integral from the left.
    """
    if b < 0:
        raise ValueError("b must be non-negative")
    cfg = cfg or DEFAULT_CONFIG
    ai = float(deformed(zeta, b * b, 0)[0])
    return tail_sq(zeta, b, cfg) + 0.5 * ai * cum_ai(zeta, b, cfg)


def t_marginal(zeta: float, b: float, cfg: Optional[QuadratureConfig] = None,
               T: Optional[TQuadruple] = None) -> float:
    """int_0^inf jpdf_edge(zeta, t, b) dt by quadrature.

    The substitution t = b^2/u maps the algebraic 1/t^2 tail onto a
    super-exponentially decaying integrand on (0, inf).
    """
    _check_b(b)
    cfg = cfg or DEFAULT_CONFIG
    if T is None:
        T = t_quadruple(zeta, b, cfg)
    b2 = b * b

    def f(u):
        out = np.zeros_like(u)
        pos = u > 0
        t = b2 / u[pos]
        out[pos] = edge_law(T, zeta, t, b) * b2 / (u[pos] ** 2)
        return out

    disc = b2 * b2 + 4 * abs(zeta)
    u_peak = 0.5 * (-b2 + math.sqrt(disc))
    return integrate(f, 0.0, math.inf, cfg, [u_peak] if u_peak > 0 else None,
                     step=max(0.5, u_peak))


def cond_density(t, zeta: float, b: float, cfg: Optional[QuadratureConfig] = None,
                 T: Optional[TQuadruple] = None, rho: Optional[float] = None):
    """Overlap density conditioned on the eigenvalue position zeta."""
    cfg = cfg or DEFAULT_CONFIG
    if rho is None:
        rho = edge_density(zeta, b, cfg)
    if rho <= cfg.abs_tol:
        raise ZeroDivisionError(f"eigenvalue density {rho:.3g} at zeta={zeta} is below abs_tol")
    return jpdf_edge(zeta=zeta, t=t, b=b, cfg=cfg, T=T) / rho


def bulk_weak_jpdf(w: float, t, a: float, cfg: Optional[QuadratureConfig] = None):
    """Bulk weak non-normality limit, (1 - tau) = a^2/2N, depth w, A = a^2 w."""
    if not (w > 0 and a > 0):
        raise ValueError("w and a must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    A = a * a * w
    # int_0^1 exp(-A s^2/2) ds
    inner = integrate(lambda s: np.exp(-A * s * s / 2.0), 0.0, 1.0, cfg)
    with np.errstate(under="ignore"):
        out = (A * math.sqrt(w) / (2 * math.pi * t * t) * np.exp(-A / (2 * t))
               * ((2 / A - 1 / t) * math.exp(-A / 2) + (1 + 1 / t - 2 / A) * inner))
    return float(out) if out.ndim == 0 else out


def strong_jpdf(coords: StrongCoords = None, *, delta=None, sigma=None):
    """Strong non-normality limit in the (delta, sigma) variables."""
    if coords is not None:
        delta, sigma = coords.delta, coords.sigma
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    # int_{2 delta}^inf exp(-p^2/2) dp
    tail = math.sqrt(math.pi / 2) * erfc(math.sqrt(2.0) * delta)
    with np.errstate(under="ignore", over="ignore"):
        out = (np.exp(delta / sigma - 1 / (4 * sigma * sigma)) / (4 * math.pi * sigma * sigma)
               * (math.exp(-2 * delta * delta) + (1 / sigma - 2 * delta) * tail))
    return float(out) if out.ndim == 0 else out


def strong_bridge(delta: float, sigma, b: float, cfg: Optional[QuadratureConfig] = None):
    """2 b^4 jpdf_edge(sqrt(2) b delta, sqrt(2) b^3 sigma, b): tends to strong_jpdf."""
    zeta = math.sqrt(2.0) * b * delta
    t = math.sqrt(2.0) * b**3 * np.asarray(sigma, dtype=float)
    return 2 * b**4 * jpdf_edge(zeta=zeta, t=t, b=b, cfg=cfg)


def bulk_bridge(w: float, t, a: float, nu: float, cfg: Optional[QuadratureConfig] = None):
    """nu^{-1} jpdf_edge(-nu^2 w, t, a/(nu sqrt 2)): tends to bulk_weak_jpdf."""
    c = BulkCoords(a, w, nu)
    return jpdf_edge(zeta=c.zeta, t=t, b=c.b, cfg=cfg) / nu
