import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxasym.assoc_fn import AssociatedFunction
from proxasym.errors import DomainError, ParameterError
from proxasym.maergoiz import (
    MaergoizFunction,
    V_eval,
    mv_bounds,
    property_I_check,
    property_II_check,
    property_III_to_V_check,
    rho_V,
)
from proxasym.sequences import gevrey

R_GRID = np.geomspace(1e-3, 1e6, 400)


def test_power_values():
    V = MaergoizFunction.power(1.5)
    assert V_eval(V, 4.0, 0.0) == pytest.approx(8.0)
    z = 2.0 * np.exp(0.7j)
    assert V_eval(V, 2.0, 0.7) == pytest.approx(z**1.5)


def test_power_log_against_direct_formula():
    V = MaergoizFunction.power_log(0.5, 1.0)
    for mod, arg in [(0.01, 0.3), (1.0, -1.0), (1e5, 2.0), (1e12, 0.0)]:
        z = mod * np.exp(1j * arg)
        direct = z**0.5 * np.log(np.e + z)
        assert V_eval(V, mod, arg) == pytest.approx(direct, rel=1e-12)


def test_mp_helpers_agree_with_float():
    V = MaergoizFunction.power_log(1.0, 1.0)
    with mpmath.workdps(30):
        assert complex(V.mp_value(3.0, 0.4)) == pytest.approx(complex(V_eval(V, 3.0, 0.4)), rel=1e-14)
        x = V.mp_inverse(5.0)
        assert float(V.mp_value(x).real) == pytest.approx(5.0, rel=1e-20)
        h = mpmath.mpf("1e-12")
        fd = (V.mp_value(2 + h).real - V.mp_value(2 - h).real) / (2 * h)
        assert float(V.mp_derivative(2)) == pytest.approx(float(fd), rel=1e-10)


def test_validation():
    with pytest.raises(ParameterError):
        MaergoizFunction.power(0)
    with pytest.raises(ParameterError):
        MaergoizFunction.power_log(1, 1, gamma=3)
    with pytest.raises(DomainError):
        MaergoizFunction.power(1, gamma=1).log_V(1.0, 2.0)
    with pytest.raises(DomainError):
        rho_V(MaergoizFunction.power(1), 0.5)


def test_property_I_power_exact():
    for rho in (0.5, 1.0, 3.0):
        res = property_I_check(MaergoizFunction.power(rho))
        assert res.deviation == 0.0


def test_property_I_power_log_decays():
    res = property_I_check(MaergoizFunction.power_log(0.5, 1.0))
    assert res.decreasing
    # the deviation falls like 1/log r; r = 1e8 gives 0.080
    assert res.deviation == pytest.approx(0.0804, abs=5e-4)
    devs = np.array([d for _, d in res.decay])
    logs = np.log([r for r, _ in res.decay])
    assert np.allclose(devs * logs, devs[-1] * logs[-1], rtol=0.25)


def test_property_II():
    assert property_II_check(MaergoizFunction.power(1.3)) == 0.0
    assert property_II_check(MaergoizFunction.power_log(0.5, 1.0)) < 1e-14


def test_shape_properties():
    rep = property_III_to_V_check(MaergoizFunction.power(2.0), R_GRID)
    assert rep.passed and rep.V["status"] == "boundary"
    rep = property_III_to_V_check(MaergoizFunction.power_log(0.5, 1.0), R_GRID)
    assert rep.passed and rep.V["status"] == "pass"
    assert rep.to_dict()["passed"]
    with pytest.raises(DomainError):
        property_III_to_V_check(MaergoizFunction.power(1), R_GRID[:10])


def test_rho_V_tends_to_rho():
    V = MaergoizFunction.power_log(1.0, 1.0)
    vals = rho_V(V, np.geomspace(1e3, 1e12, 10))
    assert np.all(np.diff(vals) < 0) and vals[-1] - 1.0 < 0.15
    assert rho_V(MaergoizFunction.power(0.7), 50.0) == pytest.approx(0.7)


def test_scaled():
    V = MaergoizFunction.power(1.0).scaled(2.0)
    assert V_eval(V, 3.0) == pytest.approx(6.0)


def test_mv_band():
    A = AssociatedFunction(gevrey(1, 10**5))
    t = np.geomspace(10, 1e4, 200)
    band = mv_bounds(A, MaergoizFunction.power(1), t)
    assert band.bounded and 0.98 < band.A_est <= band.B_est < 1.0
    half = mv_bounds(A, MaergoizFunction.power(1).scaled(2.0), t)
    assert half.A_est == pytest.approx(band.A_est / 2)
    assert not mv_bounds(A, MaergoizFunction.power(2), t).bounded


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.05, 20.0), st.floats(-1.2, 1.2))
def test_power_conjugation_symmetry(rho, mod, arg):
    V = MaergoizFunction.power(rho)
    a = V_eval(V, mod, arg)
    b = V_eval(V, mod, -arg)
    assert b == pytest.approx(np.conj(a), rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 2.0), st.floats(0.0, 2.0), st.floats(1e-3, 1e6))
def test_power_log_positive_increasing(rho, b, r):
    V = MaergoizFunction.power_log(rho, b)
    v1, v2 = V.log_V_real(r), V.log_V_real(r * 1.01)
    assert v2 > v1
