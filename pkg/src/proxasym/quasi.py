"""Quasianalyticity of the classes of functions with M-asymptotics on sectors.

Three criteria are implemented: the Salinas/Korenbljum test for the class
with uniformly bounded derivatives, the generalized Watson lemma for uniform
asymptotics, and the Watson lemma for sectorial regions. Each reduces to the
index ``omega(M)`` and, at the borderline, to the divergence of a series of
positive terms. That series question is answered by :func:`series_classify`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, ParameterError
from .indices import DEFAULT_TOL, omega_is_stable, omega_series, regvar_test
from .sequences import WeightSequence

DIVERGES, CONVERGES, INCONCLUSIVE = "diverges", "converges", "inconclusive"
YES, NO = "quasianalytic", "not_quasianalytic"

# log-scale exponents converge like 1/log log p, so they get a wider band
LOG_TOL = 0.05
DEFAULT_HORIZON = 10**6
FIT_POINTS = 400


@dataclass
class SeriesVerdict:
    """Outcome of the tiered comparison test.

    Attributes:
        verdict: ``diverges``, ``converges`` or ``inconclusive``.
        s_exponent: fitted power in ``t_p ~ p^-s``.
        bertrand_exponent: fitted power of ``log p`` once ``s`` is at 1.
        loglog_exponent: fitted power of ``log log p`` once both are at 1.
        partial_sums: ``(n, sum_{p<n} t_p)`` at dyadic ``n``.
        tier: which fit decided (1, 2, 3, or 0 for undecided).
    """

    verdict: str
    s_exponent: float
    bertrand_exponent: float | None = None
    loglog_exponent: float | None = None
    partial_sums: list = field(default_factory=list)
    tier: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _fit(y, columns):
    X = np.column_stack(columns)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def _side(value, center, tol):
    if value > center + tol:
        return 1
    if value < center - tol:
        return -1
    return 0


def series_classify(
    log_terms,
    horizon: int = DEFAULT_HORIZON,
    tol: float = DEFAULT_TOL,
    log_tol: float = LOG_TOL,
) -> SeriesVerdict:
    """Decide whether ``sum t_p`` diverges from its terms up to ``horizon``.

    Args:
        log_terms: ``log t_p`` as an array (``p = 0..len-1``) or a callable
            mapping an integer array ``p`` to ``log t_p``. Log form avoids
            underflow for fast-decaying terms.
        horizon: number of terms used when ``log_terms`` is a callable.
        tol: band around ``s = 1`` within which the power test is undecided.
        log_tol: band used for the two logarithmic tiers.

    The tail ``p in [sqrt(P), P)`` is fitted by least squares to
    ``-s log p - c log log p - d log log log p + k + e/p``; the ``1/p`` column
    absorbs index shifts such as ``1/(p+2)``. If ``s`` is within ``tol`` of 1
    the fit is repeated with ``s = 1`` fixed to read ``c``, and if ``c`` is
    within ``log_tol`` of 1, once more with ``c = 1`` fixed to read ``d``.

    Raises:
        DomainError: on a nonpositive (or non-finite) term or a short horizon.
    """
    if callable(log_terms):
        p_all = np.arange(int(horizon))
        values = np.asarray(log_terms(p_all), dtype=float)
    else:
        values = np.asarray(log_terms, dtype=float)
    P = values.size
    if P < 1000:
        raise DomainError(f"series_classify needs at least 1000 terms, got {P}")
    if not np.all(np.isfinite(values)):
        raise DomainError("series terms must be positive and finite")

    cums = np.logaddexp.accumulate(values)
    dyadic = [n for n in (2 ** np.arange(0, int(np.log2(P)) + 1)) if n <= P]
    with np.errstate(over="ignore"):
        partial = [[int(n), float(np.exp(cums[n - 1]))] for n in dyadic]

    idx = np.unique(np.round(np.logspace(0.5 * np.log10(P), np.log10(P - 1), FIT_POINTS)))
    idx = idx.astype(int)
    y = values[idx]
    p = idx.astype(float)
    lp = np.log(p)
    llp = np.log(lp)
    lllp = np.log(llp)
    one = np.ones_like(p)

    note = ""
    if np.any(np.diff(y) > 1e-12 * np.maximum(1.0, np.abs(y[1:]))):
        note = "terms are not eventually decreasing on the fitted tail"
        coef = _fit(y, [lp, llp, lllp, one, 1 / p])
        return SeriesVerdict(INCONCLUSIVE, float(-coef[0]), partial_sums=partial, note=note)

    s = float(-_fit(y, [lp, llp, lllp, one, 1 / p])[0])
    side = _side(s, 1.0, tol)
    if side:
        return SeriesVerdict(CONVERGES if side > 0 else DIVERGES, s, partial_sums=partial, tier=1)

    y1 = y + lp
    c = float(-_fit(y1, [llp, lllp, one, 1 / p])[0])
    side = _side(c, 1.0, log_tol)
    if side:
        return SeriesVerdict(
            CONVERGES if side > 0 else DIVERGES, s, c, partial_sums=partial, tier=2
        )

    y2 = y1 + llp
    d = float(-_fit(y2, [lllp, one, 1 / p])[0])
    side = _side(d, 1.0, log_tol)
    if side:
        return SeriesVerdict(
            CONVERGES if side > 0 else DIVERGES, s, c, d, partial_sums=partial, tier=3
        )
    return SeriesVerdict(
        INCONCLUSIVE, s, c, d, partial_sums=partial, note="all three exponents sit at 1"
    )


@dataclass
class QuasiVerdict:
    """Verdict of one quasianalyticity criterion, with the branch that fired."""

    criterion: str
    verdict: str
    reason: str
    gamma: float
    omega: float
    omega_stable: bool
    series: SeriesVerdict | None = None

    @property
    def quasianalytic(self) -> bool | None:
        return {YES: True, NO: False}.get(self.verdict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["quasianalytic"] = self.quasianalytic
        return d


def _omega_info(W, window):
    series = omega_series(W, window)
    return float(series[-1, 1]), omega_is_stable(series)


def _check_gamma(gamma):
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {gamma!r}")
    return float(gamma)


def _series_verdict(series, yes_on):
    if series.verdict == INCONCLUSIVE:
        return INCONCLUSIVE
    return YES if series.verdict == yes_on else NO


def classify_salinas(
    W: WeightSequence,
    gamma: float,
    tol: float = DEFAULT_TOL,
    window: int | None = None,
    bounded_sector: bool = False,
) -> QuasiVerdict:
    """Quasianalyticity of the class with uniformly bounded derivatives on ``S_gamma``.

    Quasianalytic when ``gamma > omega``; not when ``gamma < omega``; at
    ``|gamma - omega| <= tol`` the series ``sum ((p+1) m_p)^{-1/(omega+1)}``
    decides (divergence means quasianalytic). An unstable ``omega`` estimate
    gives ``inconclusive``.
    """
    gamma = _check_gamma(gamma)
    om, stable = _omega_info(W, window)
    tag = "salinas"
    extra = ""
    if bounded_sector and gamma > 1:
        extra = " (bounded-sector statement is only established for gamma <= 1)"
    if not stable:
        return QuasiVerdict(
            tag, INCONCLUSIVE, f"omega estimate {om:.6g} not stable across windows" + extra,
            gamma, om, False,
        )
    side = _side(gamma, om, tol)
    if side > 0:
        return QuasiVerdict(tag, YES, f"gamma > omega = {om:.6g}" + extra, gamma, om, True)
    if side < 0:
        return QuasiVerdict(tag, NO, f"gamma < omega = {om:.6g}" + extra, gamma, om, True)
    p = np.arange(W.horizon)
    log_t = -(np.log1p(p) + W.log_quots) / (om + 1.0)
    series = series_classify(log_t, tol=tol)
    verdict = _series_verdict(series, DIVERGES)
    reason = (
        f"gamma = omega = {om:.6g}; sum ((p+1) m_p)^(-1/(omega+1)) {series.verdict}" + extra
    )
    return QuasiVerdict(tag, verdict, reason, gamma, om, True, series)


def classify_watson_uniform(
    W: WeightSequence, gamma: float, tol: float = DEFAULT_TOL, window: int | None = None
) -> QuasiVerdict:
    """Quasianalyticity of the class with uniform M-asymptotics on ``S_gamma``.

    Quasianalytic iff ``sum (1/m_p)^{1/gamma}`` diverges. The series is
    classified directly, so a poorly resolved ``omega`` does not matter here;
    ``omega`` is reported for context.
    """
    gamma = _check_gamma(gamma)
    om, stable = _omega_info(W, window)
    series = series_classify(-W.log_quots / gamma, tol=tol)
    verdict = _series_verdict(series, DIVERGES)
    reason = f"sum (1/m_p)^(1/gamma) {series.verdict} (tier {series.tier})"
    return QuasiVerdict("watson_uniform", verdict, reason, gamma, om, stable, series)


def classify_watson_regions(
    W: WeightSequence,
    gamma: float,
    tol: float = DEFAULT_TOL,
    window: int | None = None,
    admissible: bool | None = None,
) -> QuasiVerdict:
    """Quasianalyticity of the class with M-asymptotics on sectorial regions ``G_gamma``.

    Needs ``M`` to admit a nonzero proximate order. ``admissible=None``
    uses the regular-variation test as evidence; ``True`` is a user
    assertion and ``False`` (or a failed test) yields ``inconclusive``.
    Quasianalytic iff ``gamma > omega``; the band ``|gamma - omega| <= tol``
    counts as equality, which is not quasianalytic.
    """
    gamma = _check_gamma(gamma)
    om, stable = _omega_info(W, window)
    tag = "watson_regions"
    if admissible is None:
        admissible = regvar_test(W, tol=tol, omega_value=om).all_pass
        source = "regular-variation test"
    else:
        source = "user assertion"
    if not admissible:
        return QuasiVerdict(
            tag, INCONCLUSIVE, f"no proximate order established ({source})", gamma, om, stable
        )
    if _side(gamma, om, tol) > 0:
        return QuasiVerdict(tag, YES, f"gamma > omega = {om:.6g}", gamma, om, stable)
    return QuasiVerdict(tag, NO, f"gamma <= omega = {om:.6g}", gamma, om, stable)


CLASSIFIERS = {
    "salinas": classify_salinas,
    "uniform": classify_watson_uniform,
    "regions": classify_watson_regions,
}
