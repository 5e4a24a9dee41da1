import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import hermite_e

from overlap_lab.asymptotics import jpdf_edge
from overlap_lab.finite_n import (ContourSpec, EllipticParams, edge_probe, expected_real_count,
                                  hermite_seq, jpdf_finite, jpdf_finite_t, q_kernel,
                                  tilde_sums, tilde_sums_contour, tilde_sums_order)
from overlap_lab.quad import integrate


def _direct_p(k, z, tau):
    c = np.zeros(k + 1)
    c[k] = 1
    return tau ** (k / 2) * hermite_e.hermeval(z / math.sqrt(tau), c)


def test_params_validation():
    for n, tau in [(1, 0.5), (2, 1.0), (2, -0.1), (2.5, 0.3)]:
        with pytest.raises(ValueError):
            EllipticParams(n, tau)
    assert EllipticParams(2, 0.0).tau == 0.0
    p = EllipticParams.from_edge_scaling(400, 1.0)
    assert p.b == pytest.approx(1.0)


def test_hermite_examples():
    seq = hermite_seq(1.0, EllipticParams(5, 0.5))
    assert seq.p(2).to_float() == pytest.approx(0.5, rel=1e-15)
    assert seq.p(3).to_float() == pytest.approx(-0.5, rel=1e-15)
    he = hermite_seq(0.0, 1.0, kmax=4)
    assert he.p(2).to_float() == pytest.approx(-1.0)
    assert he.p(4).to_float() == pytest.approx(3.0)
    tiny = hermite_seq(2.0, EllipticParams(5, 1e-12))
    assert tiny.p(5).to_float() == pytest.approx(32.0, abs=1e-9)


@given(st.floats(-8, 8), st.floats(0.05, 0.99))
def test_hermite_recurrence_vs_direct(z, tau):
    seq = hermite_seq(z, EllipticParams(25, tau))
    for k in range(26):
        d = _direct_p(k, z, tau)
        v = seq.p(k).to_float()
        scale = max(abs(d), math.sqrt(math.factorial(k)) * tau ** (k / 2) * 1e-3)
        assert abs(v - d) <= 1e-9 * scale


def test_hermite_no_overflow_at_large_n():
    n = 10_000
    seq = hermite_seq(2 * math.sqrt(n), EllipticParams(n, 0.5))
    assert np.all(np.isfinite(seq.log_abs()[np.isfinite(seq.log_abs())]))
    assert seq.p(n).log_abs > 700


@given(st.floats(-5, 5), st.floats(0.0, 0.99))
def test_small_order_identities(z, tau):
    P1, R1, S1 = (v.to_float() for v in tilde_sums_order(z, tau, 1))
    P2, R2, S2 = (v.to_float() for v in tilde_sums_order(z, tau, 2))
    tol = 1e-12
    assert abs(P1 - 1) <= tol and abs(R1 - 2 * z) <= tol * (1 + abs(z)) and abs(S1 - 1) <= tol
    assert abs(P2 - (1 + z * z + tau)) <= tol * (1 + z * z)
    assert abs(R2 - (2 * z + 2 * z**3)) <= tol * (1 + abs(z) ** 3)
    assert abs(S2 - (2 + z * z + tau)) <= tol * (1 + z * z)


def test_small_order_values():
    assert [v.to_float() for v in tilde_sums(1.0, EllipticParams(2, 0.5))] == pytest.approx([2.5, 4, 3.5])


def test_empty_sums_are_zero():
    assert all(v.sign == 0 and v.to_float() == 0.0 for v in tilde_sums_order(0.7, 0.5, 0))


@given(st.integers(2, 9), st.one_of(st.just(0.0), st.floats(1e-3, 0.95)), st.floats(-4, 4))
def test_sums_match_direct_summation(n, tau, z):
    p = [_direct_p(k, z, tau) if tau > 0 else z**k for k in range(n + 2)]
    pm = lambda k: p[k] if k >= 0 else 0.0
    P = sum(((k + 1) * pm(k) ** 2 - k * pm(k + 1) * pm(k - 1)) / math.factorial(k) for k in range(n))
    R = sum(((k + 2) * pm(k + 1) * pm(k) - k * pm(k + 2) * pm(k - 1)) / math.factorial(k)
            for k in range(n))
    S = sum((n - k) * ((k + 1) * pm(k) ** 2 - k * pm(k + 1) * pm(k - 1)) / math.factorial(k)
            for k in range(n))
    got = [v.to_float() for v in tilde_sums(z, EllipticParams(n, tau))]
    scale = max(abs(P), 1.0) * (1 + abs(z)) ** 2
    for g, w in zip(got, (P, R, S)):
        assert abs(g - w) <= 1e-10 * max(abs(w), scale)


def test_contour_examples():
    params = EllipticParams(3, 0.5)
    rec = [v.to_float() for v in tilde_sums(0.7, params)]
    a = tilde_sums_contour(0.7, params, ContourSpec(1.0, 0.5))
    b = tilde_sums_contour(0.7, params, ContourSpec(1.5, 0.8))
    np.testing.assert_allclose(a, rec, rtol=1e-8)
    np.testing.assert_allclose(b, a, rtol=1e-8)
    one = tilde_sums_contour(0.7, params, order=1)
    np.testing.assert_allclose(one, [1.0, 1.4, 1.0], rtol=1e-9)


def test_contour_spec_validation():
    with pytest.raises(ValueError):
        ContourSpec(0.5, 0.5)
    with pytest.raises(ValueError):
        tilde_sums_contour(0.0, EllipticParams(21, 0.5))
    with pytest.raises(ValueError):
        tilde_sums_contour(0.0, EllipticParams(3, 0.0))
    d = ContourSpec.default(100, 0.5)
    assert d.delta == pytest.approx(2 * max(1, 0.1 * math.sqrt(50))) and d.epsilon == d.delta / 2


@pytest.mark.parametrize("n", range(2, 13))
def test_contour_oracle_grid(n):
    for tau in (0.3, 0.7, 0.99):
        for z in (0.0, 0.5 * math.sqrt(n), 1.9 * math.sqrt(n)):
            params = EllipticParams(n, tau)
            rec = np.array([v.to_float() for v in tilde_sums(z, params)])
            con = np.array(tilde_sums_contour(z, params))
            # R~ vanishes identically at z = 0; measure it on the P~ scale there
            scale = np.maximum(np.abs(rec), abs(rec[0]))
            assert np.all(np.abs(rec - con) <= 1e-7 * scale)


def test_q_kernel_two_by_two():
    tau, z, q = 0.5, 0.3, 1.0
    # P1 = 1, R1 = 2z and every order-0 sum vanishes
    want = (1 + tau - 2 * z * z + z * 2 * z) / (1 + q) + z * z / (1 + q) ** 2
    assert q_kernel(z, q, EllipticParams(2, tau)).to_float() == pytest.approx(want, rel=1e-14)


def test_q_kernel_large_q():
    params = EllipticParams(6, 0.4)
    # every term carries a 1/(1+q) or 1/(1+tau+q) factor
    assert abs(q_kernel(0.8, 1e8, params).to_float()) < 1e-6
    with pytest.raises(ValueError):
        q_kernel(0.8, 0.0, params)


def test_q_kernel_positive():
    params = EllipticParams(10, 0.5)
    for z in np.linspace(-2 * math.sqrt(10), 2 * math.sqrt(10), 21):
        for q in np.logspace(-3, 3, 13):
            assert q_kernel(z, q, params).sign == 1


def test_density_nonnegative_grid():
    params = EllipticParams(10, 0.7)
    Z, Q = np.meshgrid(np.linspace(-8, 8, 50), np.logspace(-3, 3, 50))
    assert np.all(jpdf_finite(Z, Q, params) >= 0)


def test_t_form_is_rescaled_q_form():
    params = EllipticParams(7, 0.6)
    z = np.array([-1.0, 0.5, 3.0])
    t = np.array([0.2, 1.0, 5.0])
    np.testing.assert_array_equal(jpdf_finite_t(z, t, params), jpdf_finite(z, t / 0.4, params) / 0.4)


def test_t_and_q_integrals_agree():
    params = EllipticParams(4, 0.5)
    f_t = lambda t: jpdf_finite_t(np.full_like(t, 1.0), t, params)
    f_q = lambda q: jpdf_finite(np.full_like(q, 1.0), q, params)
    it = integrate(f_t, 1e-12, 50.0 * 0.5)
    iq = integrate(f_q, 2e-12, 50.0)
    assert it == pytest.approx(iq, rel=1e-8)


def test_normalisation_matches_known_counts():
    assert expected_real_count(EllipticParams(2, 0.0)) == pytest.approx(math.sqrt(2), rel=1e-7)
    assert expected_real_count(EllipticParams(3, 0.0)) == pytest.approx(1 + math.sqrt(2) / 2, rel=1e-7)


def test_edge_probe_convergence():
    devs = []
    for n in (100, 400, 1600):
        devs.append(max(abs(edge_probe(z, t, n, 1.0) - jpdf_edge(zeta=z, t=t, b=1.0))
                        for z in (-2.0, 0.0, 1.0) for t in (0.5, 1.0, 2.0)))
    assert devs[0] > devs[1] > devs[2]
