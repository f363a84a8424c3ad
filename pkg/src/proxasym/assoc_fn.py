"""The associated function ``M(t) = sup_p log(t^p / M_p)`` and checks built on it.

``M`` is piecewise ``p log t - log M_p`` on ``[m_{p-1}, m_p)`` for a
log-convex sequence; evaluation is a binary search over the log-quotients.
Non-log-convex inputs are replaced by their log-convex minorant, which has
the same associated function.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, ParameterError, RangeError
from .sequences import WeightSequence, log_convex_minorant

MIN_GRID = 16


class AssociatedFunction:
    """Piecewise representation of ``M(t)`` for a weight sequence.

    Args:
        W: the weight sequence. If its quotients are not nondecreasing the
            log-convex minorant is used instead.
    """

    def __init__(self, W: WeightSequence):
        if np.any(np.diff(W.log_quots) < 0):
            W = log_convex_minorant(W)
        self.sequence = W
        self.breakpoints = W.log_quots
        self.log_terms = W.log_terms
        self.horizon = W.horizon

    @property
    def log_t_max(self) -> float:
        """``log m_{P-1}``; larger arguments need a larger horizon."""
        return float(self.breakpoints[-1])

    @property
    def t_max(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_t_max))

    def M_of_log_t(self, log_t):
        """``M`` evaluated at ``exp(log_t)``; accepts scalars or arrays."""
        log_t = np.asarray(log_t, dtype=float)
        if np.any(log_t > self.log_t_max):
            worst = float(np.max(log_t))
            raise RangeError(
                f"log t = {worst:.6g} exceeds log m_(P-1) = {self.log_t_max:.6g}; raise the horizon"
            )
        # number of quotients <= t, i.e. the p with t in [m_{p-1}, m_p)
        p = np.searchsorted(self.breakpoints, log_t, side="right")
        with np.errstate(invalid="ignore"):
            val = np.where(p > 0, p * log_t - self.log_terms[p], 0.0)
        val = np.maximum(val, 0.0)
        return float(val) if val.ndim == 0 else val

    def __call__(self, t):
        return M_of_t(self, t)


def M_of_t(A: AssociatedFunction, t):
    """Evaluate ``M(t)`` for ``t >= 0``.

    Raises:
        DomainError: for negative ``t``.
        RangeError: for ``t > m_{P-1}``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("M(t) needs t >= 0")
    with np.errstate(divide="ignore"):
        log_t = np.log(t)
    return A.M_of_log_t(log_t)


def M_of_t_bruteforce(W: WeightSequence, t, P: int | None = None):
    """Oracle: ``max_{0<=p<=P} (p log t - log M_p)`` by direct scan."""
    P = W.horizon if P is None else int(P)
    if P > W.horizon:
        raise DomainError(f"P = {P} exceeds horizon {W.horizon}")
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros(t.shape)
    p = np.arange(P + 1, dtype=float)
    lt = W.log_terms[: P + 1]
    chunk = max(1, 4_000_000 // (P + 1))
    for start in range(0, t.size, chunk):
        tt = t[start : start + chunk]
        pos = tt > 0
        vals = np.zeros(tt.shape)
        if np.any(pos):
            lg = np.log(tt[pos])
            vals[pos] = np.max(np.outer(lg, p) - lt[None, :], axis=1)
        out[start : start + chunk] = vals
    return float(out[0]) if scalar else out


def d_M(A: AssociatedFunction, t):
    """``log M(t) / log t``.

    Raises:
        DomainError: if ``t <= 1`` or ``M(t) <= 1`` anywhere on the input.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 1):
        raise DomainError("d_M needs t > 1")
    M = np.asarray(M_of_t(A, t))
    if np.any(M <= 1):
        raise DomainError("d_M needs M(t) > 1; move t further out")
    out = np.log(M) / np.log(t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ProximateOrderSpec:
    """A candidate proximate order ``rho(r)``.

    ``kind="closed_form"`` means ``rho(r) = rho + b log log r / log r`` for
    ``r > e``; ``kind="sampled"`` carries ``(r, rho(r))`` samples that are
    interpolated linearly in ``log r``.
    """

    kind: str
    rho_limit: float
    b: float = 0.0
    samples: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("closed_form", "sampled"):
            raise ParameterError(f"unknown proximate order kind {self.kind!r}")
        if not self.rho_limit >= 0:
            raise ParameterError("rho_limit must be >= 0")
        if self.kind == "sampled":
            if self.samples is None:
                raise ParameterError("sampled proximate order needs samples")
            arr = np.asarray(self.samples, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 2 or np.any(np.diff(arr[:, 0]) <= 0):
                raise ParameterError("samples must be (r, rho) pairs with increasing r")
            object.__setattr__(self, "samples", arr)

    @classmethod
    def closed_form(cls, rho: float, b: float = 0.0) -> "ProximateOrderSpec":
        return cls("closed_form", float(rho), float(b))

    @classmethod
    def sampled(cls, r, rho_values, rho_limit: float) -> "ProximateOrderSpec":
        return cls("sampled", float(rho_limit), 0.0, np.column_stack([r, rho_values]))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "closed_form":
            if self.b == 0.0:
                if np.any(r <= 0):
                    raise DomainError("rho(r) needs r > 0")
                return np.full(r.shape, self.rho_limit) if r.ndim else self.rho_limit
            if np.any(r <= np.e):
                raise DomainError("closed-form rho(r) is defined for r > e")
            lr = np.log(r)
            return self.rho_limit + self.b * np.log(lr) / lr
        rs, vs = self.samples[:, 0], self.samples[:, 1]
        if np.any(r < rs[0]) or np.any(r > rs[-1]):
            raise DomainError("r outside the sampled range of rho")
        return np.interp(np.log(r), np.log(rs), vs)


@dataclass
class ProximateOrderReport:
    A: dict
    B: dict
    C: dict
    D: dict

    @property
    def passed(self) -> bool:
        return all(part["passed"] for part in (self.A, self.B, self.C, self.D))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _check_grid(grid, name="grid"):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < MIN_GRID:
        raise DomainError(f"{name} needs at least {MIN_GRID} points")
    if np.any(np.diff(grid) <= 0):
        raise DomainError(f"{name} must be strictly increasing")
    return grid


def proximate_order_check(
    rho: ProximateOrderSpec,
    r_grid,
    tol_c: float = 1e-3,
    tol_d: float = 0.2,
    tol_jump: float = 0.05,
) -> ProximateOrderReport:
    """Grid check of the proximate-order conditions (A)-(D).

    (B) ``rho(r) >= 0``. (C) passes when the tail-half deviation from the
    limit is below ``tol_c`` or shrinks monotonically. (D) uses a central
    difference of ``rho`` in ``log r`` and passes when the tail-half maximum of
    ``|r rho'(r) log r|`` is below ``tol_d``. (A) is assumed for closed forms
    and spot-checked on the samples otherwise.

    Raises:
        DomainError: for fewer than 16 points or a non-increasing grid.
    """
    r = _check_grid(r_grid, "r_grid")
    vals = np.asarray(rho(r), dtype=float)
    tail = slice(r.size // 2, r.size)

    if rho.kind == "closed_form":
        A = {"passed": True, "checked": False, "jump_index": None, "max_jump": 0.0}
    else:
        s = rho.samples
        inside = (s[:, 0] >= r[0]) & (s[:, 0] <= r[-1])
        jumps = np.abs(np.diff(s[inside, 1]))
        bad = np.flatnonzero(jumps > tol_jump)
        offset = int(np.flatnonzero(inside)[0]) if inside.any() else 0
        A = {
            "passed": bool(bad.size == 0),
            "checked": True,
            "jump_index": int(bad[0]) + offset + 1 if bad.size else None,
            "max_jump": float(jumps.max()) if jumps.size else 0.0,
        }

    B = {"passed": bool(np.all(vals >= 0)), "min": float(vals.min())}

    dev = np.abs(vals[tail] - rho.rho_limit)
    shrinking = bool(np.all(np.diff(dev) <= 0) and dev[-1] < dev[0])
    C = {
        "passed": bool(dev.max() < tol_c or shrinking),
        "tail_deviation": float(dev[-1]),
        "tail_oscillation": float(vals[tail].max() - vals[tail].min()),
        "shrinking": shrinking,
    }

    log_r = np.log(r)
    # plain central differences: exactly zero on a constant order
    slope = np.empty_like(vals)
    slope[1:-1] = (vals[2:] - vals[:-2]) / (log_r[2:] - log_r[:-2])
    slope[0] = (vals[1] - vals[0]) / (log_r[1] - log_r[0])
    slope[-1] = (vals[-1] - vals[-2]) / (log_r[-1] - log_r[-2])
    d_quantity = slope * log_r
    d_tail = float(np.max(np.abs(d_quantity[tail])))
    D = {"passed": bool(d_tail < tol_d), "tail_max": d_tail}
    return ProximateOrderReport(A, B, C, D)


@dataclass
class AdmissibilityReport:
    A_est: float
    B_est: float
    bounded: bool
    drift: float
    t: np.ndarray
    g: np.ndarray

    def to_dict(self) -> dict:
        return {"A_est": self.A_est, "B_est": self.B_est, "bounded": self.bounded, "drift": self.drift}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "g"])
            for t, g in zip(self.t, self.g):
                w.writerow([f"{t:.12g}", f"{g:.12g}"])


def admissibility_check(
    A: AssociatedFunction, rho: ProximateOrderSpec, t_grid, tol: float = 0.5
) -> AdmissibilityReport:
    """Band of ``g(t) = log t (rho(t) - d_M(t))`` over the tail half of the grid.

    ``bounded`` is true when ``g`` moves by at most ``tol`` between the start
    and the end of the tail half, so a wrong order (which makes ``g`` grow like
    a multiple of ``log t``) is caught.
    """
    t = _check_grid(t_grid, "t_grid")
    if np.any(t <= np.e):
        raise DomainError("admissibility_check needs t > e")
    g = np.log(t) * (np.asarray(rho(t)) - d_M(A, t))
    tail = g[t.size // 2 :]
    drift = float(tail[-1] - tail[0])
    return AdmissibilityReport(
        float(tail.min()), float(tail.max()), bool(abs(drift) <= tol), drift, t, g
    )


def flat_bound(A: AssociatedFunction, c1: float, c2: float, r):
    """``log c1 - M(1 / (c2 r))``, the log of the flatness bound at radius ``r``."""
    if not c1 > 0 or not c2 > 0:
        raise ParameterError("flat_bound needs c1 > 0 and c2 > 0")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("flat_bound needs r > 0")
    return np.log(c1) - A.M_of_log_t(-np.log(c2) - np.log(r))
