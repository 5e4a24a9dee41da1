"""Registry of identity checks run by ``overlap-lab verify``.

Every check evaluates an identity between independently computed
quantities and reports the worst deviation against its tolerance.
``quick`` restricts each grid to a single point.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np

from . import airy, asymptotics, deformed, finite_n
from .quad import finite_diff


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tol: float
    seconds: float = 0.0
    detail: str = ""


@dataclass(frozen=True)
class Check:
    name: str
    tol: float
    run: Callable[[bool], float]


REGISTRY: Dict[str, Check] = {}


def register(name: str, tol: float):
    def wrap(fn):
        REGISTRY[name] = Check(name, tol, fn)
        return fn
    return wrap


def _grid(values: Sequence, quick: bool):
    return list(values)[:1] if quick else list(values)


@register("wronskian", 1e-12)
def _wronskian(quick):
    x = np.array([0.7]) if quick else np.linspace(-10, 10, 201)
    ai, aip, bi, bip = airy.airy_all(x)
    return float(np.max(np.abs(ai * bip - aip * bi - 1 / math.pi)))


def _fg(kind, beta, zeta, k=0):
    return float(deformed.deformed(zeta, beta, k, kind)[0])


@register("airy product relation", 1e-12)
def _airy_prop1(quick):
    worst = 0.0
    for zeta in _grid([-2.0, 0.0, 1.5], quick):
        for b in _grid([0.5, 1.0, 1.4], quick):
            b2 = b * b
            x = zeta + b2 * b2 / 4
            plain = {k: float(v[0]) for k, v in zip("ab", airy.airy_all(x)[::2])}
            for F in "ab":
                for G in "ab":
                    lhs = _fg(F + "i", -b2, zeta) * _fg(G + "i", b2, zeta)
                    rhs = plain[F] * plain[G]
                    worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return worst


@register("airy derivative relation", 1e-10)
def _airy_prop2(quick):
    worst = 0.0
    for zeta in _grid([-2.0, 0.0, 1.5], quick):
        for b in _grid([0.5, 1.0, 1.4], quick):
            b2 = b * b
            x = zeta + b2 * b2 / 4
            ai, aip, bi, bip = (float(v[0]) for v in airy.airy_all(x))
            plain = {"a": (ai, aip), "b": (bi, bip)}
            for F in "ab":
                for G in "ab":
                    res = (_fg(F + "i", -b2, zeta, 1) * _fg(G + "i", b2, zeta)
                           + 0.5 * b2 * _fg(F + "i", -b2, zeta) * _fg(G + "i", b2, zeta)
                           - plain[F][1] * plain[G][0])
                    worst = max(worst, abs(res))
    return worst


@register("deformed Airy contour vs closed form", 1e-9)
def _contour(quick):
    worst = 0.0
    for zeta in _grid([1.0, -3.0, 0.0, -10.0, 10.0], quick):
        for b in _grid([1.0, 0.5, 0.0, 2.0, 3.0], quick):
            closed = _fg("ai", b * b, zeta)
            worst = max(worst, abs(deformed.ai_def_contour(zeta, b) - closed))
    return worst


@register("diffusion equation", 1e-5)
def _diffusion(quick):
    def phi(z, eta):
        return float(airy.airy_all(z + eta * eta)[0][0]) * math.exp(z * eta + 2 * eta**3 / 3)

    worst = 0.0
    for zeta in _grid([-2.0, 0.0, 2.0], quick):
        for eta in _grid([0.25, 0.5, 1.0], quick):
            d_eta = finite_diff(lambda e: phi(zeta, e), eta, 1)
            d_zz = finite_diff(lambda z: phi(z, eta), zeta, 2)
            worst = max(worst, abs(d_eta - d_zz))
    return worst


@register("scorer closed form vs integral", 1e-8)
def _scorer(quick):
    worst = 0.0
    for zeta in _grid([1.0, -4.0, -2.0, 0.0, 2.0], quick):
        for b in _grid([1.0, 0.0, 0.8, 1.5], quick):
            worst = max(worst, abs(deformed.hi_def_closed(zeta, b) - deformed.hi_def_direct(zeta, b)))
    return worst


@register("scorer differential equation", 1e-6)
def _scorer_ode(quick):
    worst = 0.0
    for zeta, b in _grid([(1.3, 0.8), (-2.0, 1.5), (0.0, 0.0)], quick):
        h = lambda z: deformed.hi_def_direct(z, b)
        res = (finite_diff(h, zeta, 2) + b * b * finite_diff(h, zeta, 1)
               - zeta * h(zeta) - 1 / math.pi)
        worst = max(worst, abs(res))
    return worst


@register("scorer bridge to cumulative Ai_b", 1e-7)
def _scorer_bridge(quick):
    worst = 0.0
    for zeta in _grid([0.0, -4.0, -2.0, 2.0], quick):
        for b in _grid([0.6, 0.3, 1.0, 2.0], quick):
            beta = b * b
            a, ap = _fg("ai", beta, zeta), _fg("ai", beta, zeta, 1)
            hi = deformed.hi_def_direct(zeta, b)
            hip = deformed.hi_def_direct(zeta, b, derivative=1)
            lhs = math.pi * (a * hip + beta * a * hi - ap * hi)
            worst = max(worst, abs(lhs - deformed.cum_ai(zeta, b)))
    return worst


def moment_residuals(zeta: float, b: float, k: int, printed_first_row: bool = False):
    """Residuals of the three moment recurrences at order k >= 2.

    The first row is  2 b^2 A_k = -k A_{k-1} + (k+1) B_k - 2 zeta C_k;
    ``printed_first_row`` swaps B_k and C_k in its last two terms.
    """
    A, B, C = {}, {}, {}
    for j in range(k - 2, k + 1):
        A[j], B[j], C[j] = deformed.moments(zeta, b, j)
    b2 = b * b
    if printed_first_row:
        r1 = 2 * b2 * A[k] - (-k * A[k - 1] - 2 * zeta * B[k] + (k + 1) * C[k])
    else:
        r1 = 2 * b2 * A[k] - (-k * A[k - 1] + (k + 1) * B[k] - 2 * zeta * C[k])
    r2 = B[k] - (-A[k - 1] - zeta * B[k - 1] - b2 * C[k - 1] - (k - 1) * C[k - 2])
    r3 = C[k] + 0.5 * k * B[k - 1]
    return r1, r2, r3


@register("moment recurrences", 1e-8)
def _moments(quick):
    worst = 0.0
    for zeta, b in _grid([(0.5, 0.7), (0.0, 1.0), (-1.0, 1.2), (-2.0, 0.5)], quick):
        for k in _grid([2, 3], quick):
            worst = max(worst, max(abs(r) for r in moment_residuals(zeta, b, k)))
    return worst


@register("finite-N sums vs contour integrals", 1e-7)
def _tilde(quick):
    worst = 0.0
    for n in _grid([3, 2, 6, 9, 12], quick):
        for tau in _grid([0.3, 0.7, 0.99], quick):
            for z in _grid([0.5 * math.sqrt(n), 0.0, 1.9 * math.sqrt(n)], quick):
                params = finite_n.EllipticParams(n, tau)
                rec = np.array([v.to_float() for v in finite_n.tilde_sums(z, params)])
                con = np.array(finite_n.tilde_sums_contour(z, params))
                # R~ vanishes at z = 0; measure against the P~ scale there
                scale = np.maximum(np.abs(rec), abs(rec[0]))
                worst = max(worst, float(np.max(np.abs(rec - con) / scale)))
    return worst


INTEGRATION_GRID = [(z, b) for z in (-4.0, -2.0, 0.0, 2.0) for b in (0.3, 0.6, 1.0, 2.0)]


@register("t-marginal identity", 1e-6)
def _integration(quick):
    worst = 0.0
    for zeta, b in _grid([(-1.0, 0.6)] + INTEGRATION_GRID, quick):
        rho = asymptotics.edge_density(zeta, b)
        worst = max(worst, abs(asymptotics.t_marginal(zeta, b) - rho) / (1 + rho))
    return worst


def _decreasing(devs):
    return all(x > y for x, y in zip(devs, devs[1:]))


@register("bridge limits", 0.10)
def _bridges(quick):
    s_ref = asymptotics.strong_jpdf(delta=-0.5, sigma=0.4)
    strong = [abs(asymptotics.strong_bridge(-0.5, 0.4, b) / s_ref - 1) for b in (4, 6, 8)]
    if quick:
        return strong[-1]
    b_ref = asymptotics.bulk_weak_jpdf(1.0, 1.0, math.sqrt(2))
    bulk = [abs(asymptotics.bulk_bridge(1.0, 1.0, math.sqrt(2), nu) / b_ref - 1) for nu in (4, 6, 8)]
    # monotone decay is part of the check: report a failing value otherwise
    if not (_decreasing(strong) and _decreasing(bulk)):
        return math.inf
    return strong[-1]


def run(quick: bool = False, names=None) -> List[CheckResult]:
    out = []
    for name, check in REGISTRY.items():
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            worst = float(check.run(quick))
            detail = ""
        except Exception as exc:  # a crashing check is a failing check
            worst, detail = math.inf, f"{type(exc).__name__}: {exc}"
        passed = bool(worst <= check.tol)
        out.append(CheckResult(name, passed, worst, check.tol, time.perf_counter() - t0, detail))
    return out


def format_table(results: Sequence[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  status  worst      tol        seconds"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = f"{r.name:<{width}}  {status:<6}  {r.worst:<9.3g}  {r.tol:<9.3g}  {r.seconds:.2f}"
        if r.detail:
            line += f"  {r.detail}"
        lines.append(line)
    return "\n".join(lines)
