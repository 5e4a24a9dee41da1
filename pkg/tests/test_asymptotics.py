import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from overlap_lab.asymptotics import (BulkCoords, EdgeCoords, StrongCoords, bulk_bridge,
                                     bulk_weak_jpdf, cond_density, edge_density, edge_law,
                                     jpdf_edge, strong_bridge, strong_jpdf, t_marginal,
                                     t_quadruple)
from overlap_lab.deformed import ai_b_range, cum_ai, deformed, hi_def_direct, tail_sq
from overlap_lab.quad import integrate

DATA = Path(__file__).parent / "data"
GRID16 = [(z, b) for z in (-4.0, -2.0, 0.0, 2.0) for b in (0.3, 0.6, 1.0, 2.0)]


def test_t_quadruple_decays():
    T = t_quadruple(40.0, 1.0)
    assert max(abs(T.T0), abs(T.T1), abs(T.T2), abs(T.T3)) < 1e-12


@pytest.mark.parametrize("zeta, b", GRID16)
def test_t2_definition(zeta, b):
    T = t_quadruple(zeta, b)
    assert abs(T.T2 - b * b * T.T3 - tail_sq(zeta, b)) <= 1e-14 * (1 + abs(T.T2))


def test_t3_second_derivative_oracle():
    beta = 1.0
    hi, pts = ai_b_range(0.0, 1.0)

    def f(p):
        return deformed(p, beta, 1) ** 2 - deformed(p, beta, 0) * deformed(p, beta, 2)

    assert t_quadruple(0.0, 1.0).T3 == pytest.approx(integrate(f, 0.0, hi, None, pts), abs=1e-9)


def test_jpdf_edge_small_b_vanishes():
    # the t > 0 mass collapses onto t = 0 with weight O(b^2)
    vals = [jpdf_edge(zeta=-1.0, t=0.5, b=b) for b in (0.1, 0.01, 1e-3)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[-1] < 1e-6


def test_jpdf_edge_small_t_monotone():
    t = np.linspace(0.001, 0.05, 60)
    v = jpdf_edge(zeta=0.0, t=t, b=1.0)
    assert v[0] == 0.0
    assert np.all(np.diff(v) >= 0)


def test_jpdf_edge_accepts_coords_and_rejects_b0():
    T = t_quadruple(-1.0, 0.6)
    assert jpdf_edge(EdgeCoords(-1.0, 0.7, 0.6)) == jpdf_edge(zeta=-1.0, t=0.7, b=0.6, T=T)
    with pytest.raises(ValueError, match="delta"):
        jpdf_edge(zeta=0.0, t=1.0, b=0.0)
    with pytest.raises(ValueError):
        EdgeCoords(0.0, -1.0, 1.0)


def test_integration_identity_single_point():
    rho = edge_density(-1.0, 0.6)
    assert abs(t_marginal(-1.0, 0.6) - rho) <= 1e-6


@pytest.mark.parametrize("zeta, b", GRID16)
def test_integration_identity_grid(zeta, b):
    rho = edge_density(zeta, b)
    assert abs(t_marginal(zeta, b) - rho) <= 1e-6 * (1 + rho)


@pytest.mark.parametrize("zeta, b", GRID16)
def test_scorer_bridge(zeta, b):
    beta = b * b
    a, ap = float(deformed(zeta, beta, 0)[0]), float(deformed(zeta, beta, 1)[0])
    hi, hip = hi_def_direct(zeta, b), hi_def_direct(zeta, b, derivative=1)
    assert abs(math.pi * (a * hip + beta * a * hi - ap * hi) - cum_ai(zeta, b)) <= 1e-7


def test_edge_density_limits():
    assert abs(edge_density(40.0, 1.0)) < 1e-10
    assert edge_density(-20.0, 0.0) / (math.sqrt(20.0) / math.pi) == pytest.approx(1.0, abs=0.05)


def test_edge_density_snapshot():
    snap = json.loads((DATA / "edge_density_b06.json").read_text())
    got = [edge_density(z, snap["b"]) for z in snap["zeta"]]
    np.testing.assert_allclose(got, snap["density"], rtol=1e-9, atol=1e-14)


def test_cond_density_normalised():
    rho = edge_density(-2.0, 0.6)
    T = t_quadruple(-2.0, 0.6)
    assert t_marginal(-2.0, 0.6, T=T) / rho == pytest.approx(1.0, abs=1e-6)


def test_cond_density_small_t():
    assert cond_density(0.05, 0.0, 0.6) < 1e-30


def test_cond_density_peak_moves_right():
    t = np.linspace(0.01, 12.0, 1200)
    peaks = [t[np.argmax(cond_density(t, z, 0.6))] for z in (2.0, 0.0, -2.0, -4.0, -6.0)]
    assert all(a < b for a, b in zip(peaks, peaks[1:]))


def test_cond_density_guard():
    with pytest.raises(ZeroDivisionError):
        cond_density(1.0, 60.0, 1.0)


def test_tail_mass_grows_with_b():
    masses = []
    for b in (0.4, 0.8, 1.2):
        rho = edge_density(-0.5, b)
        T = t_quadruple(-0.5, b)
        f = lambda u: jpdf_edge(zeta=-0.5, t=2.0 / u, b=b, T=T) * 2.0 / u**2
        # t in (2, inf) mapped to u = 2/t in (0, 1)
        g = lambda u: np.where(u > 0, f(np.maximum(u, 1e-300)), 0.0)
        masses.append(integrate(g, 0.0, 1.0) / rho)
    assert masses[0] < masses[1] < masses[2]


@given(st.floats(-6, 3), st.floats(0.01, 10), st.floats(0.2, 3))
def test_edge_density_nonnegative(zeta, t, b):
    assert jpdf_edge(zeta=zeta, t=t, b=b) >= 0.0


def test_vectorised_matches_scalar():
    T = t_quadruple(-1.5, 0.8)
    t = np.array([0.3, 1.0, 4.0])
    vec = edge_law(T, -1.5, t, 0.8)
    for ti, vi in zip(t, vec):
        assert vi == edge_law(T, -1.5, ti, 0.8)


def test_bulk_limit_basics():
    assert bulk_weak_jpdf(1.0, 1e-3, math.sqrt(2)) == 0.0
    c = BulkCoords(math.sqrt(2), 1.0, 4.0)
    assert c.A == c.a * c.a * c.w and c.zeta == -16.0
    with pytest.raises(ValueError):
        bulk_weak_jpdf(-1.0, 1.0, 1.0)


def test_bulk_bridge_decreases():
    ref = bulk_weak_jpdf(1.0, 1.0, math.sqrt(2))
    dev = [abs(bulk_bridge(1.0, 1.0, math.sqrt(2), nu) / ref - 1) for nu in (4, 6, 8)]
    assert dev[0] > dev[1] > dev[2]


def test_bulk_t_integral_snapshot():
    snap = json.loads((DATA / "bulk_t_integral.json").read_text())

    def f(u):
        t = u / (1 - u)
        return bulk_weak_jpdf(snap["w"], t, snap["a"]) / (1 - u) ** 2

    value = integrate(f, 1e-300, 1.0 - 1e-15, None, [0.3, 0.6, 0.9])
    assert 0 < value < math.inf
    assert value == pytest.approx(snap["integral"], rel=1e-9)
    assert value == pytest.approx(snap["bridge_nu8"], rel=1e-4)


def test_strong_limit_basics():
    assert strong_jpdf(delta=0.0, sigma=0.01) == 0.0
    assert strong_jpdf(StrongCoords(-0.5, 0.4)) == strong_jpdf(delta=-0.5, sigma=0.4)
    assert StrongCoords(1.0, 2.0).edge(2.0) == pytest.approx((2 * math.sqrt(2), 16 * math.sqrt(2)))
    with pytest.raises(ValueError):
        StrongCoords(0.0, 0.0)


def test_strong_bridge():
    ref = strong_jpdf(delta=-0.5, sigma=0.4)
    dev = [abs(strong_bridge(-0.5, 0.4, b) / ref - 1) for b in (4, 6, 8)]
    assert dev[0] > dev[1] > dev[2]
    assert dev[2] <= 0.10


def test_strong_curve_shape():
    snap = json.loads((DATA / "strong_delta_m05.json").read_text())
    sigma = np.array(snap["sigma"])
    dens = strong_jpdf(delta=-0.5, sigma=sigma)
    assert abs(sigma[np.argmax(dens)] - snap["argmax"]) <= snap["step"]
    bridge = strong_bridge(-0.5, sigma, 8.0)
    assert abs(sigma[np.argmax(bridge)] - snap["argmax"]) <= 3 * snap["step"]
