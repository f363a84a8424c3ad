"""Growth indices of a weight sequence.

The index ``omega(M) = liminf log(m_p) / log(p)``, exponents of convergence,
the regular-variation ratios ``m_{lp} / m_p`` and the limit of
``log(m_p / M_p^{1/p})``. A finite horizon cannot certify a liminf, so each
estimate is a tail-window extremum returned together with the series it was
read from.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .sequences import WeightSequence

DEFAULT_TOL = 1e-3


def _window(W_or_len, window):
    n = W_or_len.horizon if isinstance(W_or_len, WeightSequence) else int(W_or_len)
    if window is None:
        window = n // 10
    window = int(window)
    if window < 10:
        raise DomainError(f"window must be >= 10, got {window}")
    if n < 10 * window:
        raise DomainError(f"horizon {n} is below 10 * window = {10 * window}")
    return window


def omega_series(W: WeightSequence, window: int | None = None) -> np.ndarray:
    """Block minima of ``log m_p / log p`` over consecutive windows.

    Returns an ``(k, 2)`` array of ``(block end index, block minimum)``; the
    last row is the tail-window estimate of ``omega(M)``.
    """
    window = _window(W, window)
    P = W.horizon
    p = np.arange(2, P)
    ratio = W.log_quots[2:] / np.log(p)
    rows = []
    for end in range(P, window - 1, -window):
        start = max(end - window, 2)
        if start >= end:
            break
        rows.append((end, float(np.min(ratio[start - 2 : end - 2]))))
    return np.array(rows[::-1])


def omega(W: WeightSequence, window: int | None = None) -> float:
    """Tail-window estimate of ``omega(M)``: the minimum of ``log m_p / log p``
    over the final ``window`` indices.

    Raises:
        DomainError: if ``window < 10`` or the horizon is below ``10 * window``.
    """
    return float(omega_series(W, window)[-1, 1])


def omega_is_stable(series: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True when the last two block minima agree to ``tol`` (relative)."""
    if len(series) < 2:
        return False
    last, prev = series[-1, 1], series[-2, 1]
    return bool(np.isfinite(last) and abs(last - prev) <= tol * max(1.0, abs(last)))


def exponent_of_convergence(log_c, window: int | None = None) -> float:
    """Estimate ``limsup log(n) / log(c_n)`` from ``log c_n``, ``n = 0..N-1``.

    The sequence is passed in log form so that values such as ``c_n = 2^n``
    never overflow. The estimate is the maximum over the final ``window``
    indices.

    Raises:
        DomainError: if the tail is not nondecreasing or does not exceed 1.
    """
    log_c = np.asarray(log_c, dtype=float)
    window = _window(log_c.size, window)
    n = np.arange(log_c.size)
    tail = slice(log_c.size - window, log_c.size)
    if np.any(np.diff(log_c[tail]) < 0):
        raise DomainError("exponent_of_convergence needs a nondecreasing tail")
    if not log_c[tail][0] > 0 or not log_c[tail][-1] > log_c[tail][0]:
        raise DomainError("sequence does not tend to infinity within the horizon")
    return float(np.max(np.log(n[tail]) / log_c[tail]))


@dataclass(frozen=True)
class RegvarRow:
    ell: int
    p: int
    ratio: float
    target: float
    passed: bool
    log_ratio: float
    log_target: float


@dataclass(frozen=True)
class RegvarResult:
    rows: list
    omega: float
    tol: float

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def diverges(self) -> bool:
        """Flag raised when the ratios do not settle on ``l^omega``."""
        return not self.all_pass

    def to_rows(self) -> list[dict]:
        return [
            {"ell": r.ell, "p": r.p, "ratio": r.ratio, "target": r.target, "pass": r.passed}
            for r in self.rows
        ]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["ell", "p", "ratio", "target", "pass"])
            for r in self.rows:
                writer.writerow([r.ell, r.p, f"{r.ratio:.12g}", f"{r.target:.12g}", str(r.passed).lower()])


def regvar_test(
    W: WeightSequence,
    multipliers=(2, 3, 4),
    probes=None,
    tol: float = DEFAULT_TOL,
    omega_value: float | None = None,
) -> RegvarResult:
    """Compare ``m_{lp} / m_p`` with ``l^omega`` for every (multiplier, probe) pair.

    ``omega`` defaults to :func:`omega` at the default window. A row passes
    when ``|ratio / l^omega - 1| < tol``; comparisons are made in log form so
    overflowing ratios (``q_square``) fail cleanly.
    """
    P = W.horizon
    multipliers = [int(l) for l in multipliers]
    bad = [l for l in multipliers if l < 1]
    if bad:
        raise DomainError(f"multiplier must be >= 1, got {bad[0]}")
    if probes is None:
        top = max(multipliers)
        probes = [(P - 1) // (top * k) for k in (4, 2, 1)]
    probes = [int(p) for p in probes]
    if omega_value is None:
        omega_value = omega(W)
    rows = []
    for ell in multipliers:
        for p in probes:
            if p < 1 or ell * p > P - 1:
                raise DomainError(f"probe l*p = {ell}*{p} outside quotient range 0..{P - 1}")
            log_ratio = float(W.log_quots[ell * p] - W.log_quots[p])
            log_target = float(omega_value * np.log(ell))
            with np.errstate(over="ignore", invalid="ignore"):
                dev = np.expm1(log_ratio - log_target)
                ratio, target = float(np.exp(log_ratio)), float(np.exp(log_target))
            rows.append(
                RegvarRow(ell, p, ratio, target, bool(abs(dev) < tol), log_ratio, log_target)
            )
    return RegvarResult(rows, float(omega_value), tol)


@dataclass(frozen=True)
class LimitEstimate:
    """A tail-window reading of a limit that may not exist."""

    value: float
    converged: bool
    spread: float
    window_start: int
    window_end: int


def b_limit(W: WeightSequence, window: int | None = None, tol: float = DEFAULT_TOL) -> LimitEstimate:
    """Estimate ``lim log(m_p) - log(M_p) / p`` on the final window.

    ``converged`` is false when the values spread over the window by more
    than ``tol * max(1, |value|)``; for ``q_square`` the sequence grows
    linearly and the flag is false.
    """
    window = _window(W, window)
    P = W.horizon
    p = np.arange(P - window, P)
    b = W.log_quots[p] - W.log_terms[p] / p
    spread = float(np.max(b) - np.min(b))
    value = float(b[-1])
    return LimitEstimate(value, bool(spread <= tol * max(1.0, abs(value))), spread, int(p[0]), int(p[-1]))


@dataclass
class IndexReport:
    omega_estimate: float
    omega_stable: bool
    omega_window_series: list
    lambda_m: float | None
    lambda_pm: float | None
    b_limit_estimate: float
    b_limit_converged: bool
    regvar_table: list = field(default_factory=list)
    regvar_all_pass: bool = False
    window: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def index_report(W: WeightSequence, window: int | None = None, tol: float = DEFAULT_TOL) -> IndexReport:
    window = _window(W, window)
    series = omega_series(W, window)
    om = float(series[-1, 1])
    p = np.arange(W.horizon)
    try:
        lam_m = exponent_of_convergence(W.log_quots, window)
    except DomainError:
        lam_m = None
    try:
        lam_pm = exponent_of_convergence(np.log1p(p) + W.log_quots, window)
    except DomainError:
        lam_pm = None
    b = b_limit(W, window, tol)
    reg = regvar_test(W, tol=tol, omega_value=om)
    return IndexReport(
        omega_estimate=om,
        omega_stable=omega_is_stable(series, tol),
        omega_window_series=[[int(e), float(v)] for e, v in series],
        lambda_m=lam_m,
        lambda_pm=lam_pm,
        b_limit_estimate=b.value,
        b_limit_converged=b.converged,
        regvar_table=reg.to_rows(),
        regvar_all_pass=reg.all_pass,
        window=window,
    )
