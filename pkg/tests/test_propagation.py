import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxasym.assoc_fn import AssociatedFunction
from proxasym.errors import DomainError, ExperimentAborted, ParameterError
from proxasym.gevrey_type import SectorSpec
from proxasym.maergoiz import MaergoizFunction, mv_bounds
from proxasym.propagation import (
    RayTrace,
    TestFunction,
    _neumaier_remainders,
    default_radii,
    expansion_fit,
    expansion_fit_holds,
    extension_experiment,
    fit_flat_type,
    flat_fit_holds,
    large_opening_steps,
    pl_numeric_check,
    predicted_k2_bound,
    proof_recipe,
    propagation_experiment,
    trace_ray,
    two_direction_experiment,
    wasow_derivative,
    wasow_demo,
)
from proxasym.sequences import gevrey

W1 = gevrey(1, 10**5)
A1 = AssociatedFunction(W1)
V1 = MaergoizFunction.power(1)
F1 = TestFunction.exp_flat(V1)
BAND = mv_bounds(A1, V1, np.geomspace(10, 1e4, 200))
MV = {"A_est": BAND.A_est, "B_est": BAND.B_est, "omega": 1.0}


def test_default_radii():
    r = default_radii()
    assert r.size == 64 and r[0] == 0.5 and r[1] == pytest.approx(0.45)


def test_exp_flat_log_modulus_exact():
    # |exp(-1/z)| = exp(-cos(theta)/r)
    r = np.array([0.1, 0.01])
    assert F1.log_abs(r, 0.5) == pytest.approx(-math.cos(0.5) / r, rel=1e-14)
    assert abs(F1.value(0.1, 0.5)) == pytest.approx(math.exp(-math.cos(0.5) / 0.1), rel=1e-12)


def test_corrected_log_modulus():
    F = TestFunction.corrected(F1, V1, 0.1, 0.3)
    r, th = 0.05, 0.2
    z = r * np.exp(1j * th)
    expected = math.log(abs(np.exp(-1 / z) * np.exp(0.1 * np.exp(0.3j) / z)))
    assert F.log_abs(r, th) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ParameterError):
        TestFunction.corrected(F1, V1, 0.0, 0.3)


def test_wasow_log_modulus_matches_direct_where_representable():
    f = TestFunction.wasow(V1)
    for r, th in [(0.3, 0.0), (0.2, 0.1), (0.5, -0.4)]:
        direct = math.log(abs(np.sin(np.exp(np.exp(-1j * th) / r)) * np.exp(-np.exp(-1j * th) / r)))
        assert f.log_abs(r, th) == pytest.approx(direct, abs=1e-9)


def test_wasow_off_axis_blows_up():
    f = TestFunction.wasow(V1)
    assert f.log_abs(0.01, 0.3) > 1e10


def test_sector_checks():
    with pytest.raises(DomainError):
        TestFunction.exp_flat(MaergoizFunction.power(1, gamma=1)).log_abs(0.1, 1.6)
    with pytest.raises(DomainError):
        trace_ray(F1, 0.0, np.linspace(0.1, 0.5, 20))
    with pytest.raises(DomainError):
        trace_ray(F1, 0.0, default_radii(n=8))


def test_c2_law_for_exp_inverse():
    for th in np.linspace(-0.4 * np.pi, 0.4 * np.pi, 9):
        fit = fit_flat_type(trace_ray(F1, th), A1)
        assert 0.9 <= fit.c2 * math.cos(th) <= 1.1
        assert not fit.bracket_limited


def test_not_flat_cases():
    res = fit_flat_type(trace_ray(TestFunction.constant(), 0.0), A1)
    assert not res.flat
    res = fit_flat_type(trace_ray(TestFunction.exp_inverse(), 0.0), A1)
    assert not res.flat
    tr = trace_ray(F1, 0.0)
    bad = RayTrace(0.0, tr.radii, np.where(np.arange(64) == 5, np.inf, tr.log_abs))
    assert not fit_flat_type(bad, A1).flat


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.3, 1.3))
def test_fit_post_hoc_inequality(theta):
    tr = trace_ray(F1, theta)
    fit = fit_flat_type(tr, A1)
    assert fit.flat and flat_fit_holds(fit, tr, A1)
    assert fit.residual <= 1.0 + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.2, 1.2), st.integers(1, 63), st.floats(0.0, 50.0))
def test_fit_monotone_in_trace(theta, idx, bump):
    # raising a non-anchor sample never lowers c2
    tr = trace_ray(F1, theta)
    base = fit_flat_type(tr, A1)
    raised = tr.log_abs.copy()
    raised[idx] += bump
    res = fit_flat_type(RayTrace(theta, tr.radii, raised), A1)
    if res.flat:
        assert res.c2 >= base.c2
    else:
        assert "exceeds margin" in res.reason


def test_propagation_rows_satisfied():
    res = propagation_experiment(F1, A1, 0.9, MV)
    assert len(res.rows) == 10 and res.all_satisfied
    k2 = [r["k2_fitted"] for r in res.rows]
    # the fitted constant is smallest on the ray nearest the axis
    nearest = min(res.rows, key=lambda r: abs(r["theta"]))
    assert min(k2) == nearest["k2_fitted"]
    assert res.to_dict()["all_satisfied"]


def test_predicted_bound_decreases_in_delta():
    b = predicted_k2_bound(np.linspace(0.1, 2.8, 20), 1.0, 1.0, 1.0, 1.0)
    assert np.all(np.diff(b) < 0)


def test_propagation_aborts():
    with pytest.raises(ExperimentAborted) as exc:
        propagation_experiment(TestFunction.exp_inverse(), A1, 0.9, MV)
    assert "max_log_abs" in exc.value.diagnostic
    with pytest.raises(ExperimentAborted):
        propagation_experiment(TestFunction.constant(), A1, 0.9, MV)
    with pytest.raises(DomainError):
        propagation_experiment(F1, A1, 0.9, MV, delta_grid=[4.0])


def test_two_direction():
    res = two_direction_experiment(F1, A1, 0.9)
    assert res["uniform"]
    assert res["k2"] == max(r["c2"] for r in res["per_ray"])
    assert res["k1"] >= max(r["c1"] for r in res["per_ray"]) * (1 - 1e-12)
    res = two_direction_experiment(TestFunction.constant(), A1, 0.9)
    assert not res["uniform"] and res["failing_direction"] is not None


def test_proof_recipe_inequalities():
    rec = proof_recipe(0.99, 1.2, 1.0, 0.9, 1.0)
    assert rec.d2 < 1.2 ** (-1.0)
    assert rec.a_mod < (0.99 * rec.d2 / 2) ** 1.0
    assert rec.a_arg == pytest.approx(math.pi / 2 - 0.45 * math.pi + 0.5)
    assert rec.eps > 0
    with pytest.raises(ParameterError):
        proof_recipe(1, 1, 1.0, 1.5, 1.0)
    with pytest.raises(ParameterError):
        proof_recipe(1, 1, 1.0, 0.9, 3.0)


def _zoo():
    fit0 = fit_flat_type(trace_ray(F1, 0.45 * math.pi), A1)
    out = [F1, TestFunction.constant(2.0), TestFunction.identity(), TestFunction.geometric()]
    for delta in (0.3, 1.4, 2.5):
        rec = proof_recipe(BAND.A_est, fit0.c2, 1.0, 0.9, delta)
        out.append(TestFunction.corrected(F1, V1, rec.a_mod, rec.a_arg))
    return out


@pytest.mark.parametrize("f", _zoo(), ids=lambda f: f.name)
def test_pl_check_bounded_zoo(f):
    res = pl_numeric_check(f, SectorSpec(0.0, 0.9, 0.5), boundary_n=200, interior_n=900)
    assert res["satisfied"]


def test_pl_check_negative_control_and_validation():
    assert not pl_numeric_check(TestFunction.exp_inverse(), SectorSpec(0.0, 0.9, 0.5))["satisfied"]
    with pytest.raises(DomainError):
        pl_numeric_check(F1, SectorSpec(0.0, 0.9))
    with pytest.raises(ExperimentAborted):
        pl_numeric_check(TestFunction.exp_flat(MaergoizFunction.power(1, gamma=0.5)), SectorSpec(0.0, 0.9, 0.5))


def test_wasow_derivative_against_finite_difference():
    import mpmath

    V = V1
    r = 0.2
    with mpmath.workdps(50):
        def f(x):
            u = V.mp_value(1 / x).real
            return mpmath.sin(mpmath.exp(u)) * mpmath.exp(-u)

        fd = mpmath.diff(f, mpmath.mpf(r))
    assert wasow_derivative(V, r) == pytest.approx(float(fd), rel=1e-8)


def test_wasow_demo():
    res = wasow_demo(V1)
    assert res.flat_fit_on_axis.flat and res.flat_fit_on_axis.c2 <= 1.05
    assert res.oscillation_detected and res.vanishing_trend and res.unbounded_trend
    vanish = res.subsequences["derivative_vanishing"]
    # on w = pi n + pi/2 the derivative is +-V'(x) x^2 e^{-V(x)} = +-x^2/(pi n + pi/2) for V(x) = x
    for row in vanish:
        x = 1 / row["r"]
        assert abs(row["derivative"]) == pytest.approx(x**2 / (math.pi * row["n"] + math.pi / 2), rel=1e-9)
    for row in res.subsequences["derivative_unbounded"]:
        assert row["envelope"] == pytest.approx(1 / row["r"] ** 2, rel=1e-12)
    assert res.to_dict()["oscillation_detected"]


def test_expansion_null_matches_flat():
    for th in (-1.0, 0.0, 0.7):
        flat = fit_flat_type(trace_ray(F1, th), A1)
        ex = expansion_fit(F1, [0.0], W1, th)
        assert ex.A == pytest.approx(flat.c2, rel=1e-3)
        assert ex.C == pytest.approx(flat.c1, rel=1e-3)
        assert expansion_fit_holds(ex, F1, [0.0], W1, default_radii())


def test_neumaier_remainders_geometric_oracle():
    # 1/(1-z) - sum_{n<p} z^n = z^p / (1 - z) exactly
    r = default_radii(n=16)
    z = r * np.exp(0.4j)
    vals = 1 / (1 - z)
    absR, scale = _neumaier_remainders(vals, np.ones(8, dtype=complex), z, 8)
    exact = np.abs(z)[None, :] ** np.arange(9)[:, None] / np.abs(1 - z)[None, :]
    keep = absR >= 1e6 * np.finfo(float).eps * scale
    assert np.allclose(absR[keep], exact[keep], rtol=1e-8)


def test_expansion_geometric():
    g = TestFunction.geometric()
    W = gevrey(1, 1000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = expansion_fit(g, np.ones(20), W, 0.3)
    assert fit.fitted and fit.A <= 1.0 and fit.bracket_limited
    assert expansion_fit_holds(fit, g, np.ones(20), W, default_radii())
    zero = expansion_fit(g, np.ones(20), W, 0.3, p_max=0)
    assert zero.A == 1.0 and zero.C == pytest.approx(abs(1 / (1 - 0.5 * np.exp(0.3j))))


def test_expansion_fit_validation():
    g = TestFunction.geometric()
    with pytest.raises(DomainError):
        expansion_fit(g, np.ones(3), gevrey(1, 100), 0.0, p_max=5)
    with pytest.raises(DomainError):
        expansion_fit(g, np.ones(3), gevrey(1, 100), 0.0, p_max=500)


def test_extension_experiment():
    res = extension_experiment(F1, [0.0], W1, SectorSpec(0.0, 0.9), 0.0, np.linspace(-1.2, 1.2, 5))
    assert res["success"]
    A = [row["A"] for row in res["rows"]]
    cos = np.cos([row["theta"] for row in res["rows"]])
    assert np.allclose(np.array(A) * cos, 1.0, atol=0.1)
    with pytest.raises(ExperimentAborted):
        extension_experiment(TestFunction.wasow(V1), [0.0], W1, SectorSpec(0.0, 0.9), 0.0)
    with pytest.raises(DomainError):
        extension_experiment(F1, [0.0], W1, SectorSpec(0.0, 0.9), 0.0, [2.0])


def test_large_opening_steps():
    V = MaergoizFunction.power(0.5)
    f = TestFunction.exp_flat(V)
    A = AssociatedFunction(gevrey(2, 10**5))
    steps = large_opening_steps(f, A, 1.6, 0.5)
    assert steps[0]["theta"] == pytest.approx(0.8 * math.pi)
    assert steps[-1]["theta"] == pytest.approx(-0.8 * math.pi)
    assert all(s["flat"] for s in steps)
    with pytest.raises(ParameterError):
        large_opening_steps(f, A, 1.6, 0.5, eps=1.0)
