import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from overlap_lab import airy
from overlap_lab.airy import airy_ai, airy_all, airy_bi, airy_scaled


def test_values_at_origin():
    assert airy_ai(0.0).to_float() == pytest.approx(0.3550280538878172, rel=1e-15)
    assert airy_ai(0.0, 1).to_float() == pytest.approx(-0.2588194037928068, rel=1e-15)
    assert airy_bi(0.0).to_float() == pytest.approx(0.6149266274460007, rel=1e-15)


def test_ai_at_1_2():
    # reference value from mpmath
    assert airy_ai(1.2).to_float() == pytest.approx(0.10612576226331254, rel=1e-13)


def _ref(x):
    with mpmath.workdps(40):
        return [float(f(x, derivative=d)) for f in (mpmath.airyai, mpmath.airybi) for d in (0, 1)]


def _floor(x):
    # phase 2/3|x|^{3/2} carries an absolute error of eps times itself on x < 0
    eps = np.finfo(float).eps
    return 2 * eps * (1 + abs(min(x, 0.0)) ** 1.5) * (1 + abs(x)) ** 0.25


@given(st.floats(-200, 200))
def test_against_mpmath(x):
    got = [airy_ai(x).to_float(), airy_ai(x, 1).to_float()]
    ai_ref = _ref(x)
    for g, r in zip(got, ai_ref[:2]):
        # absolute floor near zeros of the oscillatory branch
        assert abs(g - r) <= 2e-12 * abs(r) + _floor(x)
    if x < 100:
        for d, r in zip((0, 1), ai_ref[2:]):
            g = airy_bi(x, d).to_float()
            assert abs(g - r) <= 2e-12 * abs(r) + _floor(x)


def test_branch_switch_agreement():
    x = np.linspace(airy.SWITCH - 0.25, airy.SWITCH + 0.25, 11)
    for sgn in (1, -1):
        series = airy._taylor(sgn * x)
        asym = (airy._right_asymptotic if sgn > 0 else airy._left_asymptotic)(sgn * x)
        if sgn > 0:
            xi = 2 / 3 * x**1.5
            series = [series[0] * np.exp(xi), series[1] * np.exp(xi),
                      series[2] * np.exp(-xi), series[3] * np.exp(-xi)]
        for a, b in zip(series, asym):
            np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15)


def test_wronskian():
    x = np.linspace(-10, 10, 401)
    ai, aip, bi, bip = airy_all(x)
    assert np.max(np.abs(ai * bip - aip * bi - 1 / math.pi)) < 1e-12


def test_large_argument_in_log_form():
    v = airy_ai(200.0)
    assert v.sign == 1
    with mpmath.workdps(30):
        ref = float(mpmath.log(mpmath.airyai(200)))
    assert v.log_abs == pytest.approx(ref, rel=1e-13)
    assert airy_bi(200.0).log_abs > 1800


def test_scaled_outputs_are_finite():
    ai, aip, bi, bip, xi = airy_scaled(np.array([-500.0, 0.0, 500.0]))
    assert np.all(np.isfinite([ai, aip, bi, bip]))


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        airy_scaled(np.inf)
    with pytest.raises(ValueError):
        airy_ai(0.0, 2)
