"""Airy functions Ai, Bi and their first derivatives on the real line.

|x| <= 12: Taylor re-expansion around grid nodes spaced 0.5 apart.  The node
values come from the Maclaurin series summed once in 60-digit arithmetic, so
the large cancellations of that series for x > 0 never reach double precision.
Between nodes the Airy equation y'' = x y gives the Taylor coefficients.

|x| > 12: the standard asymptotic expansions (exponential on the right,
oscillatory on the left), summed until the terms drop below 1e-17.

Values on the right half line are returned in scaled form so that
``Ai(200) ~ exp(-1886)`` never underflows.
"""

from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numpy as np

from .logvalue import LogValue

SWITCH = 12.0
NODE_STEP = 0.5
N_TAYLOR = 30
_SQRT_PI = math.sqrt(math.pi)

AiryValue = LogValue


def _maclaurin(x, dps=60):
    """(Ai, Ai', Bi, Bi') at x by the Maclaurin series in extended precision."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        c1 = 1 / (mpmath.cbrt(9) * mpmath.gamma(mpmath.mpf(2) / 3))
        c2 = 1 / (mpmath.cbrt(3) * mpmath.gamma(mpmath.mpf(1) / 3))
        x3 = x**3
        f, fp, g, gp = mpmath.mpf(1), mpmath.mpf(0), x, mpmath.mpf(1)
        t = mpmath.mpf(1)      # x^{3k} / prod
        s = x                  # x^{3k+1} / prod
        tiny = mpmath.mpf(10) ** (-dps - 5)
        k = 0
        while True:
            k += 1
            t = t * x3 / ((3 * k - 1) * (3 * k))
            s = s * x3 / ((3 * k) * (3 * k + 1))
            f += t
            g += s
            if x != 0:
                fp += 3 * k * t / x
                gp += (3 * k + 1) * s / x
            if abs(t) + abs(s) < tiny and k > 5:
                break
        ai = c1 * f - c2 * g
        aip = c1 * fp - c2 * gp
        bi = mpmath.sqrt(3) * (c1 * f + c2 * g)
        bip = mpmath.sqrt(3) * (c1 * fp + c2 * gp)
        return float(ai), float(aip), float(bi), float(bip)


@lru_cache(maxsize=1)
def _node_table():
    nodes = np.arange(-SWITCH, SWITCH + NODE_STEP / 2, NODE_STEP)
    vals = np.array([_maclaurin(x) for x in nodes])
    vals.setflags(write=False)
    nodes.setflags(write=False)
    return nodes, vals


def _taylor(x):
    """(Ai, Ai', Bi, Bi') for |x| <= SWITCH + NODE_STEP/2, unscaled."""
    nodes, vals = _node_table()
    idx = np.clip(np.rint((x + SWITCH) / NODE_STEP).astype(int), 0, nodes.size - 1)
    x0 = nodes[idx]
    h = x - x0
    out = []
    for col in (0, 2):
        a_prev2 = np.zeros_like(x)         # a_{n-1}
        a_prev = vals[idx, col]            # a_n for n = 0
        a_cur = vals[idx, col + 1]         # a_{n+1}
        value = a_prev + a_cur * h
        deriv = a_cur.copy()
        hp = h.copy()                      # h^{n+1}
        hpm = np.ones_like(x)              # h^{n}
        # a_{n+2} = (x0 a_n + a_{n-1}) / ((n+1)(n+2))
        for n in range(0, N_TAYLOR):
            a_next = (x0 * a_prev + a_prev2) / ((n + 1) * (n + 2))
            hpm = hp
            hp = hp * h
            value = value + a_next * hp
            deriv = deriv + (n + 2) * a_next * hpm
            a_prev2, a_prev, a_cur = a_prev, a_cur, a_next
        out.extend([value, deriv])
    return out


@lru_cache(maxsize=1)
def _asymptotic_coefficients(n=60):
    u = [1.0]
    for k in range(1, n):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, n)]
    return np.array(u), np.array(v)


def _series(coef, inv, signs, tol=1e-17):
    """Sum coef[k] * signs[k] * inv**k, truncated where terms stop shrinking."""
    total = np.zeros_like(inv)
    power = np.ones_like(inv)
    prev = np.full_like(inv, np.inf)
    live = np.ones(inv.shape, dtype=bool)
    for k in range(coef.size):
        term = signs[k] * coef[k] * power
        mag = np.abs(term)
        live &= mag < prev
        total = total + np.where(live, term, 0.0)
        live &= mag > tol * np.abs(total)
        if not np.any(live):
            break
        prev = mag
        power = power * inv
    return total


def _right_asymptotic(x):
    """Scaled (Ai e^xi, Ai' e^xi, Bi e^-xi, Bi' e^-xi) for large positive x."""
    u, v = _asymptotic_coefficients()
    xi = 2.0 / 3.0 * x**1.5
    inv = 1.0 / xi
    alt = (-1.0) ** np.arange(u.size)
    ones = np.ones(u.size)
    q = x**0.25
    ai = _series(u, inv, alt) / (2 * _SQRT_PI * q)
    aip = -q * _series(v, inv, alt) / (2 * _SQRT_PI)
    bi = _series(u, inv, ones) / (_SQRT_PI * q)
    bip = q * _series(v, inv, ones) / _SQRT_PI
    return ai, aip, bi, bip


def _left_asymptotic(x):
    """(Ai, Ai', Bi, Bi') for large negative x."""
    u, v = _asymptotic_coefficients()
    X = -x
    xi = 2.0 / 3.0 * X**1.5
    inv2 = 1.0 / xi**2
    alt = (-1.0) ** np.arange(u.size // 2)
    even_u = _series(u[0::2], inv2, alt)
    odd_u = _series(u[1::2], inv2, alt) / xi
    even_v = _series(v[0::2], inv2, alt)
    odd_v = _series(v[1::2], inv2, alt) / xi
    phase = xi - math.pi / 4
    c, s = np.cos(phase), np.sin(phase)
    q = X**0.25
    ai = (c * even_u + s * odd_u) / (_SQRT_PI * q)
    aip = q * (s * even_v - c * odd_v) / _SQRT_PI
    bi = (-s * even_u + c * odd_u) / (_SQRT_PI * q)
    bip = q * (c * even_v + s * odd_v) / _SQRT_PI
    return ai, aip, bi, bip


def airy_scaled(x):
    """Scaled Airy functions on real ``x``.

    Returns ``(ai, aip, bi, bip, xi)`` with ``xi = 2/3 x^{3/2}`` for ``x > 0``
    and ``0`` otherwise, such that ``Ai = ai exp(-xi)``, ``Ai' = aip exp(-xi)``,
    ``Bi = bi exp(xi)``, ``Bi' = bip exp(xi)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~np.isfinite(x)):
        raise ValueError("Airy functions need finite arguments")
    xi = np.where(x > 0, 2.0 / 3.0 * np.abs(x) ** 1.5, 0.0)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    bi = np.empty_like(x)
    bip = np.empty_like(x)

    mid = np.abs(x) <= SWITCH
    if np.any(mid):
        a, ap, b, bp = _taylor(x[mid])
        e = np.exp(xi[mid])
        ai[mid], aip[mid] = a * e, ap * e
        bi[mid], bip[mid] = b / e, bp / e
    right = x > SWITCH
    if np.any(right):
        ai[right], aip[right], bi[right], bip[right] = _right_asymptotic(x[right])
    left = x < -SWITCH
    if np.any(left):
        ai[left], aip[left], bi[left], bip[left] = _left_asymptotic(x[left])
    return ai, aip, bi, bip, xi


def airy_all(x):
    """Unscaled (Ai, Ai', Bi, Bi') arrays; may under/overflow for |x| >~ 100."""
    ai, aip, bi, bip, xi = airy_scaled(x)
    with np.errstate(over="ignore", under="ignore"):
        e = np.exp(-xi)
        g = np.exp(xi)
        return ai * e, aip * e, bi * g, bip * g


def _as_logvalue(mantissa, log_scale):
    m = float(mantissa)
    if m == 0.0:
        return LogValue(0, -math.inf)
    return LogValue(1 if m > 0 else -1, math.log(abs(m)) + log_scale)


def airy_ai(x: float, derivative: int = 0) -> AiryValue:
    """Ai(x) or Ai'(x) as a sign/log value."""
    if derivative not in (0, 1):
        raise ValueError("derivative must be 0 or 1")
    ai, aip, _, _, xi = airy_scaled(x)
    return _as_logvalue((ai, aip)[derivative][0], -xi[0])


def airy_bi(x: float, derivative: int = 0) -> AiryValue:
    """Bi(x) or Bi'(x) as a sign/log value."""
    if derivative not in (0, 1):
        raise ValueError("derivative must be 0 or 1")
    _, _, bi, bip, xi = airy_scaled(x)
    return _as_logvalue((bi, bip)[derivative][0], xi[0])


def airy_zeros_phase_points(lo: float, hi: float, per_half_period: int = 1):
    """Breakpoints on ``[lo, hi]`` at half-period spacing of Ai/Bi on x < 0.

    Used to pre-partition oscillatory integrals so that each panel holds
    at most about half an oscillation.
    """
    hi = min(hi, 0.0)
    if lo >= hi:
        return []
    j_max = int(2.0 / 3.0 * abs(lo) ** 1.5 / math.pi * per_half_period) + 1
    j = np.arange(1, j_max + 1)
    pts = -(1.5 * math.pi * j / per_half_period) ** (2.0 / 3.0)
    return [float(p) for p in pts if lo < p < hi]
