import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxasym.errors import DomainError
from proxasym.indices import (
    b_limit,
    exponent_of_convergence,
    index_report,
    omega,
    omega_is_stable,
    omega_series,
    regvar_test,
)
from proxasym.sequences import alpha_beta, gevrey, q_square


def _omega_oracle(log_m, P, window):
    """Direct loop: min of log m_p / log p over the last window, in pure Python."""
    return min(log_m(p) / math.log(p) for p in range(P - window, P))


def test_omega_gevrey_against_oracle():
    P, window = 10**5, 10**4
    for a in (0.5, 2.0):
        oracle = _omega_oracle(lambda p: a * math.log1p(p), P, window)
        assert omega(gevrey(a, P)) == pytest.approx(oracle, rel=1e-12)
        assert abs(omega(gevrey(a, P)) - a) < 1e-3


def test_omega_alpha_beta_tail_oracle():
    # alpha_beta(2, 1): log m_p = 2 log(p+1) + log log(e+p+1); the tail reading is 2.19, not 2
    P, window = 10**5, 10**4
    oracle = _omega_oracle(lambda p: 2 * math.log1p(p) + math.log(math.log(math.e + p + 1)), P, window)
    val = omega(alpha_beta(2, 1, P))
    assert val == pytest.approx(oracle, rel=1e-12)
    assert val == pytest.approx(2.2119, abs=5e-3)


def test_omega_series_shape_and_stability():
    s = omega_series(gevrey(1, 10**5))
    assert s.shape == (10, 2)
    assert s[-1, 0] == 10**5
    assert np.all(np.diff(s[:, 1]) < 0)  # log(p+1)/log p decreases to 1
    assert omega_is_stable(s)
    assert not omega_is_stable(omega_series(q_square(2, 2000)))


def test_window_validation():
    with pytest.raises(DomainError):
        omega(gevrey(1, 1000), window=5)
    with pytest.raises(DomainError):
        omega(gevrey(1, 1000), window=200)


def test_exponent_of_convergence_known_sequences():
    n = np.arange(10**5, dtype=float)
    # c_n = n (log c = log n) -> 1; c_n = n^2 -> 1/2; c_n = 2^n -> 0
    with np.errstate(divide="ignore"):
        assert exponent_of_convergence(np.log(np.maximum(n, 1))) == pytest.approx(1.0, abs=1e-4)
        assert exponent_of_convergence(2 * np.log(np.maximum(n, 1))) == pytest.approx(0.5, abs=1e-4)
    assert exponent_of_convergence(n * math.log(2)) < 1e-3


def test_exponent_of_convergence_rejects_bad_tail():
    with pytest.raises(DomainError):
        exponent_of_convergence(-np.ones(1000))
    with pytest.raises(DomainError):
        exponent_of_convergence(np.sin(np.arange(1000)) + 5)


def test_regvar_passes_for_gevrey_fails_otherwise():
    assert regvar_test(gevrey(1, 10**6)).all_pass
    res = regvar_test(q_square(2, 10**4))
    assert not res.all_pass and res.diverges
    rows = res.to_rows()
    assert set(rows[0]) == {"ell", "p", "ratio", "target", "pass"}


def test_regvar_degenerate_multiplier_and_range():
    res = regvar_test(gevrey(1, 1000), multipliers=(1,), probes=(10, 100))
    assert res.all_pass and all(r.ratio == 1.0 for r in res.rows)
    with pytest.raises(DomainError):
        regvar_test(gevrey(1, 1000), multipliers=(0,))
    with pytest.raises(DomainError):
        regvar_test(gevrey(1, 1000), multipliers=(4,), probes=(300,))


def test_regvar_csv(tmp_path):
    res = regvar_test(gevrey(1, 10**4))
    path = tmp_path / "r.csv"
    res.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "ell,p,ratio,target,pass"
    assert len(lines) == 10


def test_b_limit():
    # gevrey(1): log m_p - log M_p / p = log(p+1) - log(p!)/p -> 1
    est = b_limit(gevrey(1, 10**6))
    assert est.value == pytest.approx(1.0, abs=2e-5)
    assert est.converged
    assert not b_limit(q_square(2, 10**4)).converged


def test_index_report_fields_and_identities():
    rep = index_report(gevrey(2, 10**6))
    assert abs(rep.lambda_m * rep.omega_estimate - 1) < 2e-2
    assert abs(rep.lambda_pm * (rep.omega_estimate + 1) - 1) < 2e-2
    d = rep.to_dict()
    assert d["regvar_all_pass"] and d["b_limit_converged"]


@settings(max_examples=20, deadline=None)
@given(st.floats(0.25, 4.0))
def test_omega_upper_bounds_alpha_for_gevrey(alpha):
    # log(p+1)/log p > 1, so the window minimum sits just above alpha
    val = omega(gevrey(alpha, 10**4))
    assert alpha < val < alpha * (1 + 2e-3)
