"""Deformed Airy functions, the deformed Scorer function and their integrals.

The deformation is parametrised by ``beta``, the square of the deformation
parameter::

    Ai_[beta](z) = exp(beta z / 2 + beta^3 / 12) Ai(z + beta^2 / 4)

so ``beta = b**2`` gives Ai_b and ``beta = -b**2`` gives Ai_{ib}.  Every
evaluation goes through sign/log arrays; ``exp(b^6/12)`` is never formed on
its own.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.special import log_ndtr, ndtr

from . import airy
from .logvalue import LogValue, to_float_array
from .quad import (DEFAULT_CONFIG, ComplexPath, QuadratureConfig, integrate,
                   integrate_complex)

# int_{-inf}^0 Ai = 2/3, int_{-inf}^0 Bi = 0
AI_LEFT_MASS = 2.0 / 3.0
# cum integrals drop the Gaussian-smoothing tail beyond this many widths
SMOOTHING_WIDTHS = 9.5


def _coefficients(zeta, beta, k):
    """(c, d) with F_[beta]^{(k)} = exp(E) (c F(x) + d F'(x)), x = zeta + beta^2/4."""
    one = np.ones_like(zeta)
    c = [one, 0.5 * beta * one]
    d = [0.0 * one, one]
    # F'' = beta F' + zeta F ;  F''' = beta F'' + zeta F' + F
    c.append(beta * c[1] + zeta * c[0])
    d.append(beta * d[1] + zeta * d[0])
    c.append(beta * c[2] + zeta * c[1] + c[0])
    d.append(beta * d[2] + zeta * d[1] + d[0])
    return c[k], d[k]


def deformed_log(zeta, beta: float, k: int = 0, kind: str = "ai"):
    """Sign and log-magnitude arrays of ``Ai_[beta]^{(k)}`` (or ``Bi``)."""
    if k not in (0, 1, 2, 3):
        raise ValueError("derivative order must be 0..3")
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    x = zeta + beta * beta / 4.0
    ai, aip, bi, bip, xi = airy.airy_scaled(x)
    c, d = _coefficients(zeta, beta, k)
    expo = beta * zeta / 2.0 + beta**3 / 12.0
    if kind == "ai":
        mant = c * ai + d * aip
        expo = expo - xi
    elif kind == "bi":
        mant = c * bi + d * bip
        expo = expo + xi
    else:
        raise ValueError("kind must be 'ai' or 'bi'")
    with np.errstate(divide="ignore"):
        return np.sign(mant), expo + np.log(np.abs(mant))


def deformed(zeta, beta: float, k: int = 0, kind: str = "ai"):
    """Plain-float array of ``Ai_[beta]^{(k)}``; raises on overflow."""
    s, l = deformed_log(zeta, beta, k, kind)
    return to_float_array(s, l)


def _scalar(s, l):
    s = int(s[0])
    return LogValue(s, float(l[0]) if s else -math.inf)


def ai_def(zeta: float, beta: float, k: int = 0) -> LogValue:
    """Ai_[beta]^{(k)}(zeta) as a :class:`LogValue`."""
    return _scalar(*deformed_log(zeta, beta, k, "ai"))


def bi_def(zeta: float, beta: float, k: int = 0) -> LogValue:
    """Bi_[beta]^{(k)}(zeta) as a :class:`LogValue`."""
    return _scalar(*deformed_log(zeta, beta, k, "bi"))


def _contour_vertex(zeta, b):
    # real saddle of u^3/3 + b^2 u^2/2 - u zeta when it exists
    disc = b**4 + 4.0 * zeta
    if disc >= 0:
        return 0.5 * (-b * b + math.sqrt(disc))
    return -0.5 * b * b


def ai_def_contour(zeta: float, b: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """Ai_b(zeta) from its defining contour integral (independent oracle).

    The two rays leave the real axis at angles -pi/3 and +pi/3; the vertex
    sits at the real saddle point when there is one.
    """
    if abs(b) > 3 or abs(zeta) > 10:
        raise ValueError("contour oracle is only certified for |b| <= 3, |zeta| <= 10")
    b2 = b * b

    def f(u):
        return np.exp(u**3 / 3.0 + b2 * u * u / 2.0 - u * zeta)

    val = integrate_complex(f, ComplexPath.two_rays(_contour_vertex(zeta, b)), cfg)
    return (val / (2j * math.pi)).real


# --------------------------------------------------------------------------
# integration ranges


def right_cut(logf, start: float, cfg: QuadratureConfig = DEFAULT_CONFIG, step: float = 1.0,
              max_steps: int = 200) -> float:
    """First point right of ``start`` beyond which ``log|f|`` is negligible.

    ``logf`` must eventually decrease monotonically.  "Negligible" is relative
    to the largest value met on the way when that value is below one, so that
    tiny integrals keep their relative accuracy.
    """
    x = start
    peak = -math.inf
    prev = float(logf(np.array([x]))[0])
    peak = max(peak, prev)
    log_thr = math.log(cfg.truncation_threshold)
    for _ in range(max_steps):
        x_new = x + step
        cur = float(logf(np.array([x_new]))[0])
        peak = max(peak, cur)
        if cur < log_thr + min(0.0, peak) and cur <= prev:
            return x_new
        x, prev = x_new, cur
        step *= 1.5
    raise RuntimeError(f"integrand did not decay to the truncation threshold before {x:g}")


def _oscillation_points(lo, hi, beta):
    """Half-period breakpoints of Ai_[beta] on [lo, hi] (shifted Airy argument)."""
    shift = beta * beta / 4.0
    return [p - shift for p in airy.airy_zeros_phase_points(lo + shift, hi + shift)]


def _ai_sq_logf(b):
    beta = b * b

    def logf(p):
        _, l = deformed_log(p, beta, 0, "ai")
        _, lp = deformed_log(p, beta, 1, "ai")
        return 2.0 * np.maximum(l, lp) + np.log1p(np.abs(p)) * 7
    return logf


def ai_b_range(zeta: float, b: float, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Upper cut and breakpoints for integrals of Ai_b products over [zeta, inf)."""
    start = max(zeta, 0.0)
    hi = right_cut(_ai_sq_logf(b), start, cfg)
    pts = _oscillation_points(zeta, hi, b * b)
    if zeta < 0 < hi:
        pts.append(0.0)
    return hi, pts


# --------------------------------------------------------------------------
# tail and cumulative integrals


def tail_sq(zeta: float, b: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """J(zeta, b) = int_zeta^inf Ai_b(p)^2 dp."""
    cfg = cfg or DEFAULT_CONFIG
    beta = b * b
    hi, pts = ai_b_range(zeta, b, cfg)
    if hi <= zeta:
        return 0.0
    return integrate(lambda p: deformed(p, beta) ** 2, zeta, hi, cfg, pts)


def _airy_plain(kind):
    def f(x):
        ai, _, bi, _, xi = airy.airy_scaled(x)
        with np.errstate(over="ignore", under="ignore"):
            return ai * np.exp(-xi) if kind == "ai" else bi * np.exp(xi)
    return f


def _cum_classical(x_end: float, kind: str, cfg: QuadratureConfig) -> float:
    """int_{-inf}^{x_end} Ai (or Bi), using the known masses of the left half line."""
    f = _airy_plain(kind)
    base = AI_LEFT_MASS if kind == "ai" else 0.0
    if kind == "ai" and x_end > 2.0:
        # Ai decays: 1 - int_x^inf Ai keeps the small tail accurate
        hi = right_cut(lambda x: np.log(np.abs(f(x)) + 1e-300), x_end, cfg)
        return 1.0 - integrate(f, x_end, hi, cfg)
    pts = airy.airy_zeros_phase_points(min(x_end, 0.0), 0.0)
    return base + integrate(f, 0.0, x_end, cfg, pts)


def _cum_smoothed(zeta: float, b: float, kind: str, cfg: QuadratureConfig) -> float:
    """int_{-inf}^zeta F_b for F = Ai or Bi, with b != 0.

    F_b is the heat flow of F for time b^2/2, i.e. a Gaussian smoothing of
    width |b|.  Hence int_{-inf}^zeta F_b = int F(x) Phi((zeta - x)/|b|) dx:
    below X = zeta - 9.5|b| the weight is 1 to double precision, so the left
    part is the classical cumulative integral and only [X, cut] needs
    quadrature.
    """
    sb = abs(b)
    X = zeta - SMOOTHING_WIDTHS * sb
    f = _airy_plain(kind)
    ai_log = kind == "ai"

    def g(x):
        return f(x) * ndtr((zeta - x) / sb)

    def logg(x):
        ai, _, bi, _, xi = airy.airy_scaled(x)
        mant = ai if ai_log else bi
        lx = np.log(np.abs(mant) + 1e-300) + (-xi if ai_log else xi)
        return lx + log_ndtr((zeta - x) / sb)

    hi = right_cut(logg, max(X, zeta, 0.0), cfg)
    pts = airy.airy_zeros_phase_points(X, min(hi, 0.0))
    if X < 0 < hi:
        pts.append(0.0)
    return _cum_classical(X, kind, cfg) + integrate(g, X, hi, cfg, pts)


def cum_ai(zeta: float, b: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """K(zeta, b) = int_{-inf}^zeta Ai_b(p) dp."""
    cfg = cfg or DEFAULT_CONFIG
    if b == 0:
        return _cum_classical(zeta, "ai", cfg)
    return _cum_smoothed(zeta, b, "ai", cfg)


def cum_bi(zeta: float, b: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """int_{-inf}^zeta Bi_b(p) dp."""
    cfg = cfg or DEFAULT_CONFIG
    if b == 0:
        return _cum_classical(zeta, "bi", cfg)
    return _cum_smoothed(zeta, b, "bi", cfg)


def cum_direct(zeta: float, b: float, kind: str = "ai",
               cfg: Optional[QuadratureConfig] = None) -> float:
    """int_{-inf}^zeta F_b by direct quadrature in p (oracle for b >~ 0.5).

    The lower limit is where the envelope exp(b^2 p / 2) |p + b^4/4|^{-1/4}
    times the prefactor falls below the truncation threshold.
    """
    cfg = cfg or DEFAULT_CONFIG
    if b == 0:
        raise ValueError("direct quadrature needs b != 0 (the integrand does not decay)")
    beta = b * b
    log_pref = beta**3 / 12.0
    lo = min(zeta, -1.0)
    while beta * lo / 2.0 + log_pref > math.log(cfg.truncation_threshold) - 5:
        lo *= 1.5
    pts = _oscillation_points(lo, zeta, beta)
    return integrate(lambda p: deformed(p, beta, 0, kind), lo, zeta, cfg, pts)


# --------------------------------------------------------------------------
# deformed Scorer function


def hi_def_direct(zeta: float, b: float, cfg: Optional[QuadratureConfig] = None,
                  derivative: int = 0) -> float:
    """Hi_b(zeta) = pi^{-1} int_0^inf exp(zeta u - b^2 u^2/2 - u^3/3) du.

    ``derivative`` = m differentiates under the integral (weight u^m).
    """
    if derivative not in (0, 1, 2):
        raise ValueError("derivative must be 0, 1 or 2")
    b2 = b * b

    def f(u):
        return u**derivative * np.exp(zeta * u - b2 * u * u / 2.0 - u**3 / 3.0)

    # the exponent peaks where u^2 + b^2 u = zeta
    u_peak = 0.5 * (-b2 + math.sqrt(b2 * b2 + 4 * zeta)) if b2 * b2 + 4 * zeta > 0 else 0.0
    pts = [u_peak] if u_peak > 0 else None
    return integrate(f, 0.0, math.inf, cfg, pts, step=max(1.0, u_peak)) / math.pi


def hi_def_closed(zeta: float, b: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """Hi_b(zeta) = Bi_{ib} int_{-inf}^zeta Ai_b - Ai_{ib} int_{-inf}^zeta Bi_b."""
    beta = -b * b
    bi_ib = bi_def(zeta, beta)
    ai_ib = ai_def(zeta, beta)
    return (bi_ib * cum_ai(zeta, b, cfg)).to_float() - (ai_ib * cum_bi(zeta, b, cfg)).to_float()


# --------------------------------------------------------------------------
# moment integrals


def moments(zeta: float, b: float, k: int, cfg: Optional[QuadratureConfig] = None):
    """(A_k, B_k, C_k): int_0^inf p^k {Ai_b'^2, Ai_b^2, Ai_b' Ai_b}(p + zeta) dp."""
    if not 0 <= k <= 6:
        raise ValueError("moment order must be in 0..6")
    cfg = cfg or DEFAULT_CONFIG
    beta = b * b
    hi, pts = ai_b_range(zeta, b, cfg)
    if hi <= zeta:
        return 0.0, 0.0, 0.0

    def f(p):
        x = p + zeta
        a = deformed(x, beta, 0)
        ap = deformed(x, beta, 1)
        w = p**k
        return np.stack([w * ap * ap, w * a * a, w * ap * a], axis=1)

    val = integrate(f, 0.0, hi - zeta, cfg, [q - zeta for q in pts])
    return float(val[0]), float(val[1]), float(val[2])
