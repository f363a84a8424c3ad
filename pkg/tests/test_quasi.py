import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxasym.errors import DomainError, ParameterError
from proxasym.quasi import (
    CONVERGES,
    DIVERGES,
    INCONCLUSIVE,
    NO,
    YES,
    classify_salinas,
    classify_watson_regions,
    classify_watson_uniform,
    series_classify,
)
from proxasym.sequences import alpha_beta, gevrey

P = 10**6
p = np.arange(P, dtype=float) + 3.0  # start at 3 so log log p > 0


def _terms(s, c=0.0, d=0.0):
    lp = np.log(p)
    return -s * lp - c * np.log(lp) - d * np.log(np.log(lp))


@pytest.mark.parametrize(
    "s,c,expected",
    [
        (0.5, 0, DIVERGES),
        (2.0, 0, CONVERGES),
        (1.0, 0, DIVERGES),
        (1.0, 2.0, CONVERGES),
        (1.0, 0.5, DIVERGES),
        (1.2, -3, CONVERGES),
        (0.8, 3, DIVERGES),
    ],
)
def test_power_and_bertrand_series(s, c, expected):
    assert series_classify(_terms(s, c)).verdict == expected


def test_third_tier():
    v = series_classify(_terms(1.0, 1.0, 0.0))
    assert v.verdict == DIVERGES and v.tier == 3
    v = series_classify(_terms(1.0, 1.0, 2.0))
    assert v.verdict == CONVERGES and v.tier == 3


def test_index_shift_absorbed():
    # 1/(p + 2) is the harmonic series
    v = series_classify(-np.log(np.arange(P) + 2.0))
    assert v.verdict == DIVERGES


def test_callable_terms_and_partial_sums():
    v = series_classify(lambda n: -2 * np.log1p(n), horizon=10**5)
    assert v.verdict == CONVERGES
    n, s = v.partial_sums[-1]
    assert s == pytest.approx(np.pi**2 / 6, abs=1e-4)


def test_series_input_validation():
    with pytest.raises(DomainError):
        series_classify(np.zeros(10))
    bad = _terms(2.0)
    bad[5] = np.nan
    with pytest.raises(DomainError):
        series_classify(bad)


def test_increasing_terms_inconclusive():
    assert series_classify(np.log1p(np.arange(5000.0))).verdict == INCONCLUSIVE


def test_trichotomy_gevrey1():
    W = gevrey(1, P)
    assert classify_salinas(W, 1.0).verdict == YES
    assert classify_watson_uniform(W, 1.0).verdict == YES
    assert classify_watson_regions(W, 1.0).verdict == NO
    for clf in (classify_salinas, classify_watson_uniform, classify_watson_regions):
        assert clf(W, 1.5).quasianalytic is True
        assert clf(W, 0.5).quasianalytic is False


def test_bertrand_borderline_sequence():
    W = alpha_beta(1, 1.5, P)
    v = classify_watson_uniform(W, 1.0)
    assert v.verdict == NO and v.series.tier == 2
    assert v.series.bertrand_exponent == pytest.approx(1.5, abs=0.05)


def test_regions_admissibility_sources():
    W = alpha_beta(1, 1.5, 10**5)
    assert classify_watson_regions(W, 3.0).verdict == INCONCLUSIVE
    assert classify_watson_regions(W, 3.0, admissible=True).verdict == YES
    assert classify_watson_regions(gevrey(1, 10**5), 3.0, admissible=False).verdict == INCONCLUSIVE


def test_salinas_bounded_sector_note_and_unstable_omega():
    W = gevrey(1, 10**5)
    assert "gamma <= 1" in classify_salinas(W, 2.0, bounded_sector=True).reason
    v = classify_salinas(alpha_beta(1, 1.5, 10**5), 1.0)
    assert v.verdict == INCONCLUSIVE and not v.omega_stable


def test_gamma_validation():
    with pytest.raises(ParameterError):
        classify_watson_uniform(gevrey(1, 10**4), 0.0)


def test_verdict_serialization():
    d = classify_watson_uniform(gevrey(1, 10**5), 1.0).to_dict()
    assert d["quasianalytic"] is True and d["series"]["verdict"] == DIVERGES


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 0.9) | st.floats(1.1, 3.0))
def test_power_exponent_recovered(s):
    v = series_classify(-s * np.log(np.arange(1, 10**5 + 1, dtype=float)))
    # the log-log columns are nearly collinear with log p; 1e-4 is far inside the 1e-3 band
    assert v.s_exponent == pytest.approx(s, abs=1e-4)
    assert v.verdict == (CONVERGES if s > 1 else DIVERGES)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.2, 4.0))
def test_uniform_verdict_matches_gamma_vs_alpha(alpha, gamma):
    # sum (p+1)^(-alpha/gamma) diverges iff gamma >= alpha
    if abs(gamma - alpha) < 0.05:
        return
    v = classify_watson_uniform(gevrey(alpha, 10**4), gamma)
    assert v.quasianalytic is (gamma > alpha)
