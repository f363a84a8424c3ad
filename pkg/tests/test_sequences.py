import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from proxasym.errors import DomainError, ParameterError
from proxasym.sequences import (
    WeightSequence,
    alpha_beta,
    build_sequence,
    condition_report,
    equivalence_estimate,
    from_log_terms,
    gevrey,
    load_sequence,
    log_convex_minorant,
    q_square,
    quotients,
    save_sequence,
    zero_beta,
)


def test_gevrey_terms_match_log_factorial():
    W = gevrey(2.0, 50)
    expected = [2.0 * math.lgamma(p + 1) for p in range(51)]
    assert np.allclose(W.log_terms, expected, rtol=0, atol=1e-12)
    assert W.horizon == 50
    assert W.label == "gevrey(alpha=2)"


def test_closed_form_quotients_agree_with_differences():
    for W in (gevrey(1.5, 200), alpha_beta(1, 2, 200), zero_beta(3, 200), q_square(1.5, 200)):
        assert np.allclose(quotients(W), np.diff(W.log_terms), rtol=1e-12, atol=1e-10)


def test_alpha_beta_explicit_product():
    # M_p = p!^alpha prod_{k<=p} log(e+k)^beta
    W = alpha_beta(1.0, 2.0, 20)
    p = 7
    direct = gammaln(p + 1) + 2.0 * sum(math.log(math.log(math.e + k)) for k in range(1, p + 1))
    assert W.log_terms[p] == pytest.approx(direct, rel=1e-13)


def test_build_sequence_accepts_names_and_dashes():
    W = build_sequence("q-square", {"q": 2}, 10)
    assert W.log_terms[3] == pytest.approx(9 * math.log(2))
    W2 = build_sequence("alpha_beta", (1.0, 0.5), 10)
    assert W2.params == {"alpha": 1.0, "beta": 0.5}


@pytest.mark.parametrize(
    "family,params",
    [("gevrey", {}), ("gevrey", {"alpha": 0}), ("q_square", {"q": 1}), ("zero_beta", {"beta": -1}), ("nope", {})],
)
def test_bad_parameters(family, params):
    with pytest.raises(ParameterError):
        build_sequence(family, params, 10)


def test_small_horizon_is_domain_error():
    with pytest.raises(DomainError):
        build_sequence("gevrey", {"alpha": 1}, 1)


def test_weight_sequence_invariants():
    with pytest.raises(DomainError):
        WeightSequence(np.array([1.0, 2.0, 3.0]))
    with pytest.raises(DomainError):
        WeightSequence(np.array([0.0, np.inf, 3.0]))
    W = gevrey(1, 10)
    with pytest.raises(ValueError):
        W.log_terms[0] = 5.0


def test_truncate_and_roundtrip(tmp_path):
    W = alpha_beta(1.0, -0.5, 100)
    T = W.truncate(40)
    assert T.horizon == 40 and np.array_equal(T.log_terms, W.log_terms[:41])
    path = tmp_path / "seq.txt"
    save_sequence(W, path)
    back = load_sequence(path)
    assert np.array_equal(back.log_terms, W.log_terms)


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0\n1.5\nabc\n")
    with pytest.raises(DomainError):
        load_sequence(path)
    path.write_text("1\n2\n3\n")
    with pytest.raises(DomainError):
        load_sequence(path)


def test_condition_report_examples():
    assert condition_report(gevrey(1, 10**4)).strongly_regular
    zb = condition_report(zero_beta(2, 10**5))
    assert zb.lc["holds_up_to_horizon"] and zb.mg["bounded_trend"] and not zb.snq["bounded_trend"]
    qs = condition_report(q_square(2, 2000))
    assert qs.lc["holds_up_to_horizon"] and not qs.mg["bounded_trend"]


def test_condition_report_mg_estimate_for_gevrey():
    # M_{2n}/(M_n^2) = binom(2n, n) <= 4^n, so B -> 2 for gevrey(1)
    rep = condition_report(gevrey(1, 10**4))
    assert 1.9 < rep.mg["B_estimate"] <= 2.0


def test_lc_violation_reported_and_stable_in_horizon():
    terms = np.array([0.0, 1.0, 1.5, 3.5, 6.0, 9.0, 12.5, 16.5, 21.0, 26.0, 31.5])
    W = from_log_terms(terms)
    rep = condition_report(W)
    assert not rep.lc["holds_up_to_horizon"]
    # M_1^2 <= M_0 M_2 fails first: 2 > 1.5
    assert rep.lc["first_violation"] == 1
    longer = from_log_terms(np.concatenate([terms, terms[-1] + 6.0 * np.arange(1, 20)]))
    assert not condition_report(longer).lc["holds_up_to_horizon"]


def test_condition_report_needs_horizon():
    with pytest.raises(DomainError):
        condition_report(gevrey(1, 5))


def test_equivalence_with_lc_minorant():
    W = alpha_beta(1.0, -0.5, 10**5)
    L = log_convex_minorant(W)
    est = equivalence_estimate(W, L)
    assert est["equivalent_trend"]
    assert est["lower"] >= 1.0 - 1e-12


def test_equivalence_mismatch():
    with pytest.raises(DomainError):
        equivalence_estimate(gevrey(1, 10), gevrey(1, 12))


log_terms_strategy = st.lists(
    st.floats(min_value=-5, max_value=5, allow_nan=False), min_size=3, max_size=40
).map(lambda xs: np.concatenate([[0.0], np.cumsum(xs[1:])]))


@settings(max_examples=80, deadline=None)
@given(log_terms_strategy)
def test_minorant_is_log_convex_and_below(terms):
    W = from_log_terms(terms)
    L = log_convex_minorant(W)
    assert np.all(L.log_terms <= W.log_terms + 1e-9)
    assert np.all(np.diff(L.log_quots) >= -1e-9)
    assert L.log_terms[0] == 0.0 and L.log_terms[-1] == pytest.approx(W.log_terms[-1])


@settings(max_examples=40, deadline=None)
@given(log_terms_strategy)
def test_minorant_idempotent(terms):
    L = log_convex_minorant(from_log_terms(terms))
    LL = log_convex_minorant(L)
    assert np.allclose(LL.log_terms, L.log_terms, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 4.0), st.integers(20, 400))
def test_gevrey_lc_and_dc_hold(alpha, horizon):
    rep = condition_report(gevrey(alpha, horizon))
    assert rep.lc["holds_up_to_horizon"]
    assert rep.to_dict()["dc"]["A_estimate"] >= 1.0
