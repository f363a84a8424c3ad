"""Weight sequences, their quotients and the structural conditions (lc), (dc), (mg), (snq).

Every sequence is stored through ``log M_p``; nothing in this module ever
forms ``M_p`` itself, so horizons of a few million terms are routine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, ParameterError

FAMILIES = ("gevrey", "alpha_beta", "zero_beta", "q_square", "custom")

# Relative change allowed in a running supremum over the last half of the horizon.
TREND_TOL = 1e-3


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """A sequence ``M_0 = 1, M_1, ..., M_P`` held in log-domain.

    Attributes:
        log_terms: ``log M_p`` for ``p = 0..P``.
        family: one of :data:`FAMILIES`.
        params: family parameters as a name -> value mapping.
        log_quots: ``log m_p = log M_{p+1} - log M_p`` for ``p = 0..P-1``.
    """

    log_terms: np.ndarray
    family: str = "custom"
    params: Mapping[str, float] = field(default_factory=dict)
    log_quots: np.ndarray = None

    def __post_init__(self):
        terms = _frozen(self.log_terms)
        if terms.ndim != 1 or terms.size < 3:
            raise DomainError("a weight sequence needs horizon >= 2 (at least 3 terms)")
        if not np.all(np.isfinite(terms)):
            raise DomainError("log_terms must be finite")
        if terms[0] != 0.0:
            raise DomainError(f"log M_0 must be 0 (M_0 = 1), got {terms[0]!r}")
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        quots = np.diff(terms) if self.log_quots is None else self.log_quots
        quots = _frozen(quots)
        if quots.shape != (terms.size - 1,):
            raise DomainError("log_quots must have exactly horizon entries")
        object.__setattr__(self, "log_terms", terms)
        object.__setattr__(self, "log_quots", quots)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def horizon(self) -> int:
        return self.log_terms.size - 1

    @property
    def label(self) -> str:
        if not self.params:
            return self.family
        inner = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.family}({inner})"

    def truncate(self, horizon: int) -> "WeightSequence":
        """Return the same sequence cut at a smaller horizon."""
        if horizon < 2 or horizon > self.horizon:
            raise DomainError(f"cannot truncate horizon {self.horizon} to {horizon}")
        return WeightSequence(
            self.log_terms[: horizon + 1],
            self.family,
            self.params,
            self.log_quots[:horizon],
        )


def _loglog_e_plus(m):
    return np.log(np.log(np.e + m))


def _cumsum_exact(x):
    # extended-precision accumulation keeps 1e6-term partial sums at ~1e-12 relative
    return np.cumsum(np.asarray(x, dtype=np.longdouble)).astype(float)


def _param(params, name, index):
    if isinstance(params, Mapping):
        if name not in params:
            raise ParameterError(f"missing parameter {name!r}")
        return float(params[name])
    try:
        return float(params[index])
    except (IndexError, TypeError):
        raise ParameterError(f"missing parameter {name!r}") from None


def build_sequence(family: str, params, horizon: int) -> WeightSequence:
    """Build one of the built-in families up to ``horizon``.

    ``params`` is either a mapping or a positional sequence:
    ``gevrey: (alpha,)``, ``alpha_beta: (alpha, beta)``, ``zero_beta: (beta,)``,
    ``q_square: (q,)``.

    Raises:
        DomainError: if ``horizon < 2``.
        ParameterError: if a parameter is missing or out of range.
    """
    family = family.replace("-", "_")
    if int(horizon) != horizon or horizon < 2:
        raise DomainError(f"horizon must be an integer >= 2, got {horizon!r}")
    horizon = int(horizon)
    p = np.arange(horizon + 1, dtype=float)
    q_idx = p[:-1]

    if family == "gevrey":
        alpha = _param(params, "alpha", 0)
        if not alpha > 0:
            raise ParameterError("gevrey needs alpha > 0")
        terms = alpha * gammaln(p + 1.0)
        quots = alpha * np.log1p(q_idx)
        named = {"alpha": alpha}
    elif family in ("alpha_beta", "zero_beta"):
        if family == "alpha_beta":
            alpha = _param(params, "alpha", 0)
            beta = _param(params, "beta", 1)
            if not alpha > 0:
                raise ParameterError("alpha_beta needs alpha > 0")
            named = {"alpha": alpha, "beta": beta}
        else:
            alpha = 0.0
            beta = _param(params, "beta", 0)
            if not beta > 0:
                raise ParameterError("zero_beta needs beta > 0")
            named = {"beta": beta}
        loglogs = _loglog_e_plus(p)
        terms = alpha * gammaln(p + 1.0) + beta * _cumsum_exact(loglogs)
        terms[0] = 0.0
        quots = alpha * np.log1p(q_idx) + beta * loglogs[1:]
    elif family == "q_square":
        q = _param(params, "q", 0)
        if not q > 1:
            raise ParameterError("q_square needs q > 1")
        logq = np.log(q)
        terms = p * p * logq
        quots = (2.0 * q_idx + 1.0) * logq
        named = {"q": q}
    elif family == "custom":
        raise ParameterError("custom sequences come from from_log_terms() or load_sequence()")
    else:
        raise ParameterError(f"unknown family {family!r}")
    return WeightSequence(terms, family, named, quots)


def gevrey(alpha: float, horizon: int) -> WeightSequence:
    return build_sequence("gevrey", (alpha,), horizon)


def alpha_beta(alpha: float, beta: float, horizon: int) -> WeightSequence:
    return build_sequence("alpha_beta", (alpha, beta), horizon)


def zero_beta(beta: float, horizon: int) -> WeightSequence:
    return build_sequence("zero_beta", (beta,), horizon)


def q_square(q: float, horizon: int) -> WeightSequence:
    return build_sequence("q_square", (q,), horizon)


def from_log_terms(log_terms: Sequence[float]) -> WeightSequence:
    """Wrap user-supplied ``log M_p`` values as a custom sequence."""
    return WeightSequence(np.asarray(log_terms, dtype=float), "custom")


def load_sequence(path) -> WeightSequence:
    """Read a custom sequence: UTF-8 text, one ``log M_p`` per line, first line 0."""
    text = Path(path).read_text(encoding="utf-8")
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise DomainError(f"{path}:{lineno}: not a decimal number: {line!r}") from None
    return from_log_terms(values)


def save_sequence(W: WeightSequence, path) -> None:
    Path(path).write_text(
        "".join(f"{v:.17g}\n" for v in W.log_terms), encoding="utf-8"
    )


def quotients(W: WeightSequence) -> np.ndarray:
    """Return ``log m_p`` for ``p = 0..P-1`` (length equals the horizon).

    Built-in families carry their quotients in closed form, which is exact to
    rounding even where differencing ``log M_p`` would lose digits.
    """
    return W.log_quots


def log_convex_minorant(W: WeightSequence) -> WeightSequence:
    """Largest log-convex sequence below ``W`` (lower convex hull of ``(p, log M_p)``).

    Collinear points are kept, so an (lc) input comes back term for term.
    """
    y = W.log_terms
    hull = []
    for i in range(y.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b only when it lies strictly above the chord a -> i
            if (y[b] - y[a]) * (i - a) > (y[i] - y[a]) * (b - a):
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.arange(y.size)
    terms = np.interp(idx, hull, y[hull])
    if len(hull) == y.size:
        return WeightSequence(y, W.family, W.params, W.log_quots)
    return WeightSequence(terms, "custom", {})


@dataclass(frozen=True)
class ConditionReport:
    """Finite-horizon evidence for (lc), (dc), (mg), (snq).

    The ``*_estimate`` fields are running suprema of the defining ratio; the
    ``bounded_trend`` flags say whether that supremum stopped moving over the
    last half of the horizon (relative change below ``tol``).
    """

    horizon: int
    lc: dict
    dc: dict
    mg: dict
    snq: dict
    quotients_to_infinity: bool
    tol: float = TREND_TOL

    @property
    def strongly_regular(self) -> bool:
        return bool(
            self.lc["holds_up_to_horizon"]
            and self.mg["bounded_trend"]
            and self.snq["bounded_trend"]
        )

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "lc": self.lc,
            "dc": self.dc,
            "mg": self.mg,
            "snq": self.snq,
            "quotients_to_infinity": self.quotients_to_infinity,
            "strongly_regular": self.strongly_regular,
            "tol": self.tol,
        }


def _trend(log_sup_half, log_sup_full, tol):
    """Stabilisation test on a running supremum given in log form."""
    with np.errstate(over="ignore"):
        change = float(np.expm1(log_sup_full - log_sup_half))
    return bool(abs(change) < tol), change


def _estimate(name, log_value, ok, change):
    with np.errstate(over="ignore"):
        value = float(np.exp(log_value))
    return {
        name: value,
        "log_" + name: float(log_value),
        "bounded_trend": ok,
        "relative_change": change,
    }


def _lc_check(log_quots):
    steps = np.diff(log_quots)
    bad = np.flatnonzero(steps < 0)
    if bad.size:
        # index p of the first failure of M_p^2 <= M_{p-1} M_{p+1}
        return {"holds_up_to_horizon": False, "first_violation": int(bad[0]) + 1}
    return {"holds_up_to_horizon": True, "first_violation": None}


def _mg_ratios(log_terms, lc_holds):
    """``max_{p+q=n} (log M_n - log M_p - log M_q) / n`` for ``n = 1..P``."""
    P = log_terms.size - 1
    n = np.arange(1, P + 1)
    if lc_holds:
        # log M convex => the symmetric sum log M_p + log M_{n-p} is smallest at p = n/2
        lo, hi = n // 2, n - n // 2
        return (log_terms[n] - log_terms[lo] - log_terms[hi]) / n
    out = np.empty(P)
    for k in range(1, P + 1):
        p = np.arange(0, k // 2 + 1)
        out[k - 1] = np.max(log_terms[k] - log_terms[p] - log_terms[k - p]) / k
    return out


def _snq_log_sup(log_quots, n):
    """``log max_{p <= n/2} m_p sum_{q=p}^{n-1} 1/((q+1) m_q)``."""
    q = np.arange(n)
    log_terms = -np.log1p(q) - log_quots[:n]
    tails = np.logaddexp.accumulate(log_terms[::-1])[::-1]
    p_max = n // 2
    return float(np.max(log_quots[: p_max + 1] + tails[: p_max + 1]))


def condition_report(W: WeightSequence, tol: float = TREND_TOL) -> ConditionReport:
    """Finite-horizon classification of the four structural conditions.

    Raises:
        DomainError: if the horizon is below 8.
    """
    P = W.horizon
    if P < 8:
        raise DomainError(f"condition_report needs horizon >= 8, got {P}")
    half = P // 2
    lq, lt = W.log_quots, W.log_terms

    lc = _lc_check(lq)

    dc_ratio = lq / np.arange(1, P + 1)
    dc_sup_full = float(np.max(dc_ratio))
    dc_sup_half = float(np.max(dc_ratio[:half]))
    ok, change = _trend(dc_sup_half, dc_sup_full, tol)
    dc = _estimate("A_estimate", dc_sup_full, ok, change)

    mg_ratio = np.maximum.accumulate(np.maximum(_mg_ratios(lt, lc["holds_up_to_horizon"]), 0.0))
    ok, change = _trend(mg_ratio[half - 1], mg_ratio[-1], tol)
    mg = _estimate("B_estimate", mg_ratio[-1], ok, change)

    snq_full = _snq_log_sup(lq, P)
    snq_half = _snq_log_sup(lq, half)
    ok, change = _trend(snq_half, snq_full, tol)
    snq = _estimate("C_estimate", snq_full, ok, change)

    to_inf = bool(np.min(lq[half:]) > np.max(lq[: P // 4 + 1]))
    return ConditionReport(P, lc, dc, mg, snq, to_inf, tol)


def equivalence_estimate(W: WeightSequence, L: WeightSequence, tol: float = TREND_TOL) -> dict:
    """Best constants ``a, b`` with ``a^p L_p <= M_p <= b^p L_p`` for ``1 <= p <= P``.

    Returns a dict with ``lower``, ``upper`` and ``equivalent_trend``; the trend
    flag requires both constants to be finite, nonzero, and to move by less
    than ``tol`` (relative) between horizon ``P/2`` and ``P``.
    """
    if W.horizon != L.horizon:
        raise DomainError(f"horizons differ: {W.horizon} vs {L.horizon}")
    P = W.horizon
    p = np.arange(1, P + 1)
    d = (W.log_terms[1:] - L.log_terms[1:]) / p
    half = P // 2
    lo_full, hi_full = float(np.min(d)), float(np.max(d))
    lo_half, hi_half = float(np.min(d[:half])), float(np.max(d[:half]))
    lower, upper = float(np.exp(lo_full)), float(np.exp(hi_full))
    stable = (
        abs(np.expm1(lo_full - lo_half)) < tol
        and abs(np.expm1(hi_full - hi_half)) < tol
    )
    finite = 0.0 < lower and np.isfinite(upper)
    return {"lower": lower, "upper": upper, "equivalent_trend": bool(stable and finite)}
