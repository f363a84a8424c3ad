"""Numerical experiments on flatness and its propagation across sectors.

Test functions are traced along rays ``z = r e^{i theta}`` in log-modulus
form, flatness constants ``(c1, c2)`` with ``|f(z)| <= c1 exp(-M(1/(c2 |z|)))``
are fitted, and the fitted constants are compared with the bounds predicted
for the propagated flatness. The helpers also cover the corrected function
``F(z) = f(z) exp(V(a/z))``, a grid maximum-modulus check, the Wasow-type
function ``sin(exp(V(1/z))) exp(-V(1/z))``, and fits of directional
asymptotic expansions.

Fit contract shared by :func:`fit_flat_type` and :func:`expansion_fit`: the
smallest constant on a log-spaced bracket, at relative resolution 1e-3, for
which the sup-slack anchored at the largest radius stays within ``margin``.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import mpmath
import numpy as np
from scipy.optimize import brentq

from .assoc_fn import AssociatedFunction
from .errors import DomainError, ExperimentAborted, ParameterError, RangeError
from .gevrey_type import SectorSpec
from .maergoiz import MaergoizFunction
from .sequences import WeightSequence, gevrey

log = logging.getLogger(__name__)

RADIUS0, RATIO, N_RADII = 0.5, 0.9, 64
MIN_TRACE = 16
MARGIN = 1.0
RESOLUTION = 1e-3
# the bound at the smallest radius must demand at least exp(-DECAY_NATS)
DECAY_NATS = 10.0
# log of the largest modulus accepted as "bounded" by grid sampling
BOUND_LOG = 20.0
# a remainder below DROP_ULPS * eps * (size of the summands) has lost its digits
DROP_ULPS = 1e6
POST_HOC_TOL = 1e-9


def default_radii(r0: float = RADIUS0, q: float = RATIO, n: int = N_RADII) -> np.ndarray:
    """Geometric ray grid ``r_i = r0 q^i``, ``i = 0..n-1``."""
    return r0 * q ** np.arange(n)


# ---------------------------------------------------------------- test functions


def _re_V(V: MaergoizFunction, mod, arg):
    L = V.log_V(mod, arg)
    with np.errstate(over="ignore"):
        return np.exp(L.real) * np.cos(L.imag)


def _log_abs_sin_exp(V: MaergoizFunction, r: float, theta: float) -> tuple[float, float]:
    """``(log|sin w|, Re u)`` with ``u = V(1/z)``, ``w = e^u``, in extended precision."""
    re_u_est = float(_re_V(V, 1.0 / r, -theta))
    if not math.isfinite(re_u_est):
        return math.inf, re_u_est
    # w has about Re(u)/log 2 bits before the binary point; its phase needs them all
    prec = 96 + int(max(re_u_est, 0.0) / math.log(2)) + 32
    with mpmath.workprec(prec):
        u = V.mp_value(mpmath.mpf(1) / mpmath.mpf(r), -mpmath.mpf(theta))
        w = mpmath.exp(u)
        y = abs(w.imag)
        if y > 40:
            # |sin(x + iy)| = sinh|y| (1 + O(e^{-2|y|})), beyond double-exponential range
            las = float(y) - math.log(2) if y < mpmath.mpf(10) ** 300 else math.inf
        else:
            s = abs(mpmath.sin(w))
            las = float(mpmath.log(s)) if s != 0 else -math.inf
        return las, float(u.real)


@dataclass(frozen=True)
class TestFunction:
    """A holomorphic test function evaluated in log-modulus form.

    Construct with :meth:`exp_flat`, :meth:`wasow`, :meth:`corrected` or
    :meth:`custom`. ``half_opening`` bounds ``|arg z|`` on the sector of
    definition.
    """

    __test__ = False

    kind: str
    name: str
    half_opening: float
    V: MaergoizFunction | None = None
    base: "TestFunction | None" = None
    a_mod: float = 0.0
    a_arg: float = 0.0
    log_abs_fn: Callable | None = field(default=None, repr=False, compare=False)
    value_fn: Callable | None = field(default=None, repr=False, compare=False)

    @classmethod
    def exp_flat(cls, V: MaergoizFunction) -> "TestFunction":
        """``f(z) = exp(-V(1/z))``."""
        return cls("exp_flat", f"exp_flat({V.label})", V.half_opening, V)

    @classmethod
    def wasow(cls, V: MaergoizFunction) -> "TestFunction":
        """``f(z) = sin(exp(V(1/z))) exp(-V(1/z))``."""
        return cls("wasow", f"wasow({V.label})", V.half_opening, V)

    @classmethod
    def corrected(cls, base: "TestFunction", V: MaergoizFunction, a_mod: float, a_arg: float):
        """``F(z) = f(z) exp(V(a/z))`` with ``a = a_mod e^{i a_arg}``."""
        if not a_mod > 0:
            raise ParameterError("|a| must be > 0")
        half = min(base.half_opening, V.half_opening - abs(a_arg))
        if not half > 0:
            raise ParameterError("arg a leaves no common sector of definition")
        name = f"corrected({base.name}, {V.label}, a={a_mod:.6g}e^(i{a_arg:.6g}))"
        return cls("corrected", name, half, V, base, float(a_mod), float(a_arg))

    @classmethod
    def custom(cls, name: str, log_abs_fn, value_fn=None, half_opening: float = np.inf):
        """User-supplied ``log|f|(r, theta)`` and optional complex ``f(r, theta)``."""
        return cls("custom", name, float(half_opening), log_abs_fn=log_abs_fn, value_fn=value_fn)

    @classmethod
    def constant(cls, c: float = 1.0) -> "TestFunction":
        lc = math.log(abs(c))
        return cls.custom(
            f"constant({c:g})",
            lambda r, t: np.full(np.broadcast(r, t).shape, lc),
            lambda r, t: np.full(np.broadcast(r, t).shape, complex(c)),
        )

    @classmethod
    def identity(cls) -> "TestFunction":
        return cls.custom(
            "z",
            lambda r, t: np.log(r) + 0.0 * np.asarray(t),
            lambda r, t: r * np.exp(1j * np.asarray(t)),
        )

    @classmethod
    def exp_inverse(cls) -> "TestFunction":
        """``e^{1/z}``, unbounded near 0 inside any sector around the positive axis."""
        return cls.custom(
            "exp(1/z)",
            lambda r, t: np.cos(t) / r,
            lambda r, t: np.exp(np.exp(-1j * np.asarray(t)) / r),
        )

    @classmethod
    def geometric(cls) -> "TestFunction":
        """``1/(1 - z)``, analytic at 0 with all Taylor coefficients 1."""

        def value(r, t):
            return 1.0 / (1.0 - r * np.exp(1j * np.asarray(t)))

        return cls.custom("1/(1-z)", lambda r, t: np.log(np.abs(value(r, t))), value, np.pi)

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(np.abs(theta) >= self.half_opening):
            raise DomainError(
                f"direction outside the sector of definition |arg z| < {self.half_opening:.6g}"
            )

    def log_abs(self, r, theta):
        """``log|f(r e^{i theta})|`` without forming ``f`` in linear scale."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        self._check(theta)
        if np.any(r <= 0):
            raise DomainError("radius must be > 0")
        r, theta = np.broadcast_arrays(r, theta)
        if self.kind == "exp_flat":
            return -_re_V(self.V, 1.0 / r, -theta)
        if self.kind == "wasow":
            out = np.empty(r.shape)
            for idx in np.ndindex(r.shape):
                las, re_u = _log_abs_sin_exp(self.V, float(r[idx]), float(theta[idx]))
                out[idx] = las - re_u
            return out
        if self.kind == "corrected":
            base = self.base.log_abs(r, theta)
            return base + _re_V(self.V, self.a_mod / r, self.a_arg - theta)
        with np.errstate(over="ignore", divide="ignore"):
            return np.asarray(self.log_abs_fn(r, theta), dtype=float)

    def value(self, r, theta):
        """Complex ``f(r e^{i theta})`` (may underflow to 0 or overflow)."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        self._check(theta)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            if self.kind == "exp_flat":
                return np.exp(-np.exp(self.V.log_V(1.0 / r, -theta)))
            if self.kind == "corrected":
                return self.base.value(r, theta) * np.exp(
                    np.exp(self.V.log_V(self.a_mod / r, self.a_arg - theta))
                )
            if self.kind == "wasow":
                r, theta = np.broadcast_arrays(r, theta)
                out = np.empty(r.shape, dtype=complex)
                for idx in np.ndindex(r.shape):
                    out[idx] = _wasow_value(self.V, float(r[idx]), float(theta[idx]))
                return out
            if self.value_fn is None:
                raise ParameterError(f"{self.name} has no complex evaluator")
            return np.asarray(self.value_fn(r, theta), dtype=complex)


def _wasow_value(V, r, theta):
    las, re_u = _log_abs_sin_exp(V, r, theta)
    prec = 96 + int(max(re_u, 0.0) / math.log(2)) + 32
    with mpmath.workprec(prec):
        u = V.mp_value(mpmath.mpf(1) / mpmath.mpf(r), -mpmath.mpf(theta))
        w = mpmath.exp(u)
        if abs(w.imag) > 700:
            return complex(math.inf, math.inf)
        return complex(mpmath.sin(w) * mpmath.exp(-u))


# ---------------------------------------------------------------- ray traces and fits


@dataclass
class RayTrace:
    theta: float
    radii: np.ndarray
    log_abs: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "log_abs"])
            for r, v in zip(self.radii, self.log_abs):
                w.writerow([f"{r:.12g}", f"{v:.12g}"])


def _check_radii(radii):
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size < MIN_TRACE:
        raise DomainError(f"a ray trace needs at least {MIN_TRACE} radii")
    if np.any(radii <= 0) or np.any(np.diff(radii) >= 0):
        raise DomainError("radii must be positive and strictly decreasing")
    return radii


def trace_ray(f: TestFunction, theta: float, radii=None) -> RayTrace:
    """Sample ``log|f(r e^{i theta})|`` along a ray (default :func:`default_radii`)."""
    radii = _check_radii(default_radii() if radii is None else radii)
    return RayTrace(float(theta), radii, np.asarray(f.log_abs(radii, theta), dtype=float))


@dataclass
class FlatnessFit:
    """Constants with ``log_abs[i] <= log c1 - M(1/(c2 r_i))`` on every sample."""

    theta: float
    c1: float
    c2: float
    residual: float
    log_c1: float
    bracket: tuple
    bracket_limited: bool = False
    flat: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class NotFlat:
    """Returned when no constant in the bracket satisfies the fit contract."""

    theta: float
    reason: str
    residual: float = math.inf
    flat: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _log_t_at_level(M_log: Callable, lo: float, hi: float, level: float) -> float:
    """``s`` in ``[lo, hi]`` with ``M_log(s) = level`` for increasing ``M_log``."""
    if M_log(hi) <= level:
        return hi
    return brentq(lambda s: M_log(s) - level, lo, hi, xtol=1e-12)


def _bisect_log(pred, lo, hi, resolution):
    """Smallest feasible point of a monotone predicate on ``[lo, hi]`` (log bisection)."""
    llo, lhi = math.log(lo), math.log(hi)
    step = math.log1p(resolution)
    while lhi - llo > step:
        mid = 0.5 * (llo + lhi)
        if pred(math.exp(mid)):
            lhi = mid
        else:
            llo = mid
    return math.exp(lhi)


def flat_bracket(A: AssociatedFunction, radii, decay_nats: float = DECAY_NATS) -> tuple:
    """Default ``(c2_lo, c2_hi)``.

    ``c2_lo`` keeps ``1/(c2 r)`` inside the representable range of ``M``;
    ``c2_hi`` is where the bound at the smallest radius still demands a
    decay of ``exp(-decay_nats)``.
    """
    r_min = float(np.min(radii))
    lo = math.exp(-math.log(r_min) - A.log_t_max)
    s_d = _log_t_at_level(A.M_of_log_t, float(A.breakpoints[0]), A.log_t_max, decay_nats)
    hi = math.exp(-math.log(r_min) - s_d)
    if not hi > lo:
        raise RangeError("horizon too small for this ray grid; raise the horizon")
    return lo, hi


def fit_flat_type(
    trace: RayTrace,
    A: AssociatedFunction,
    margin: float = MARGIN,
    resolution: float = RESOLUTION,
    bracket: tuple | None = None,
) -> FlatnessFit | NotFlat:
    """Fit ``|f| <= c1 exp(-M(1/(c2 r)))`` along one ray.

    ``c2`` is the smallest bracket point (log bisection to relative width
    ``resolution``) at which ``g_i = log_abs[i] + M(1/(c2 r_i))`` satisfies
    ``max_i g_i <= g_0 + margin``, ``g_0`` being the value at the largest
    radius; then ``c1 = exp(max_i g_i)``. The predicate is monotone in ``c2``
    because ``s -> M(e^s)`` is convex. A failure at the top of the bracket
    returns :class:`NotFlat`.
    """
    la = np.asarray(trace.log_abs, dtype=float)
    log_r = np.log(trace.radii)
    if np.any(np.isnan(la)) or np.any(la == np.inf):
        return NotFlat(trace.theta, "log|f| is not finite on the ray")
    if not np.isfinite(la[0]):
        return NotFlat(trace.theta, "f vanishes at the anchor radius")
    lo, hi = flat_bracket(A, trace.radii) if bracket is None else bracket

    def g(c2):
        return la + A.M_of_log_t(-math.log(c2) - log_r)

    def pred(c2):
        gi = g(c2)
        return bool(np.max(gi) <= gi[0] + margin)

    if not pred(hi):
        gi = g(hi)
        return NotFlat(
            trace.theta,
            f"anchored slack {np.max(gi) - gi[0]:.6g} exceeds margin at c2 = {hi:.6g}",
            float(np.max(gi) - gi[0]),
        )
    limited = pred(lo)
    c2 = lo if limited else _bisect_log(pred, lo, hi, resolution)
    gi = g(c2)
    log_c1 = float(np.max(gi))
    return FlatnessFit(
        trace.theta, math.exp(log_c1), c2, float(log_c1 - gi[0]), log_c1, (lo, hi), limited
    )


def flat_fit_holds(fit: FlatnessFit, trace: RayTrace, A: AssociatedFunction, tol=POST_HOC_TOL) -> bool:
    """Re-check the fitted bound on every sample of the trace."""
    bound = fit.log_c1 - A.M_of_log_t(-math.log(fit.c2) - np.log(trace.radii))
    return bool(np.all(trace.log_abs <= bound + tol))


# ---------------------------------------------------------------- experiments


def sector_is_bounded(f: TestFunction, half_opening: float, radii=None, n_dirs: int = 17):
    """Grid sampling of ``log|f|`` over ``|arg z| <= half_opening``.

    Returns ``(bounded, max_log_abs, worst_direction)``.
    """
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    worst, worst_theta = -math.inf, None
    for theta in np.linspace(-half_opening, half_opening, n_dirs):
        m = float(np.max(f.log_abs(radii, theta)))
        if m > worst or worst_theta is None:
            worst, worst_theta = m, float(theta)
    return bool(worst <= BOUND_LOG), worst, worst_theta


@dataclass
class PropagationResult:
    rows: list
    c2_flat: float
    flat_direction: float
    sector_log_bound: float

    @property
    def all_satisfied(self) -> bool:
        return all(r["satisfied"] for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "c2_flat": self.c2_flat,
            "flat_direction": self.flat_direction,
            "sector_log_bound": self.sector_log_bound,
            "all_satisfied": self.all_satisfied,
        }


def predicted_k2_bound(delta, c2: float, A_est: float, B_est: float, omega: float):
    """``(2B/A)^omega (1 / sin(delta / (2 omega)))^omega c2``."""
    delta = np.asarray(delta, dtype=float)
    return (2 * B_est / A_est) ** omega * (1 / np.sin(delta / (2 * omega))) ** omega * c2


def propagation_experiment(
    f: TestFunction,
    A: AssociatedFunction,
    gamma: float,
    mv: dict,
    flat_direction: float | None = None,
    delta_grid=None,
    radii=None,
) -> PropagationResult:
    """Fit ``k2`` at ``-pi gamma/2 + delta`` and compare with the predicted bound.

    ``mv`` carries ``A_est``, ``B_est`` (the band of ``M/V``) and ``omega``.
    The flat direction defaults to ``+pi gamma/2``.

    Raises:
        ExperimentAborted: if ``f`` is unbounded on the sector grid or not
            flat in ``flat_direction``.
    """
    if not gamma > 0:
        raise ParameterError("gamma must be > 0")
    half = math.pi * gamma / 2
    flat_direction = half if flat_direction is None else float(flat_direction)
    if delta_grid is None:
        delta_grid = np.linspace(2 * half / 10, 2 * half, 10)
    delta_grid = np.asarray(delta_grid, dtype=float)
    if np.any(delta_grid <= 0) or np.any(delta_grid > 2 * half + 1e-12):
        raise DomainError("delta must lie in (0, pi gamma]")
    radii = default_radii() if radii is None else radii
    bounded, K, where = sector_is_bounded(f, half, radii)
    if not bounded:
        raise ExperimentAborted(
            "f is not bounded on the sector grid",
            {"max_log_abs": K, "direction": where},
        )
    fit0 = fit_flat_type(trace_ray(f, flat_direction, radii), A)
    if not fit0.flat:
        raise ExperimentAborted(
            "f is not flat in the given direction", {"direction": flat_direction, "reason": fit0.reason}
        )
    A_est, B_est, omega = float(mv["A_est"]), float(mv["B_est"]), float(mv["omega"])
    rows = []
    for delta in delta_grid:
        theta = -half + float(delta)
        fit = fit_flat_type(trace_ray(f, theta, radii), A)
        bound = float(predicted_k2_bound(delta, fit0.c2, A_est, B_est, omega))
        k2 = fit.c2 if fit.flat else math.inf
        rows.append(
            {
                "delta": float(delta),
                "theta": theta,
                "k2_fitted": k2,
                "k2_predicted_bound": bound,
                "satisfied": bool(k2 <= bound),
            }
        )
    return PropagationResult(rows, fit0.c2, flat_direction, K)


def two_direction_experiment(
    f: TestFunction, A: AssociatedFunction, gamma: float, n_dirs: int = 9, radii=None
) -> dict:
    """One pair ``(k1, k2)`` bounding ``f`` on every ray of a fan over the closed sector.

    ``k2`` is the largest per-ray ``c2``; ``k1`` is refitted at that common
    ``k2``. A ray that is not flat makes ``uniform`` false and is named.
    """
    half = math.pi * gamma / 2
    radii = default_radii() if radii is None else radii
    fans = np.linspace(-half, half, n_dirs) if n_dirs > 1 else np.array([0.0])
    traces, fits = [], []
    for theta in fans:
        tr = trace_ray(f, float(theta), radii)
        fit = fit_flat_type(tr, A)
        if not fit.flat:
            return {
                "uniform": False,
                "failing_direction": float(theta),
                "reason": fit.reason,
                "k1": None,
                "k2": None,
            }
        traces.append(tr)
        fits.append(fit)
    k2 = max(ft.c2 for ft in fits)
    log_k1 = max(
        float(np.max(tr.log_abs + A.M_of_log_t(-math.log(k2) - np.log(tr.radii)))) for tr in traces
    )
    return {
        "uniform": True,
        "failing_direction": None,
        "k1": math.exp(log_k1),
        "k2": k2,
        "per_ray": [{"theta": ft.theta, "c1": ft.c1, "c2": ft.c2} for ft in fits],
    }


@dataclass
class ProofRecipe:
    a_mod: float
    a_arg: float
    d2: float
    alpha: float
    beta: float
    eps: float
    eta: float

    def to_dict(self) -> dict:
        return asdict(self)


def proof_recipe(
    A_est: float,
    c2: float,
    omega: float,
    gamma: float,
    delta: float,
    d2_factor: float = 0.9,
    a_factor: float = 0.5,
) -> ProofRecipe:
    """Parameters of the corrected function ``F = f e^{V(a/z)}``.

    ``arg a = omega pi/2 - pi gamma/2 + delta/2`` and
    ``|a| = a_factor (A_est d2 / 2)^omega`` with ``d2 = d2_factor c2^{-1/omega}``,
    so both strict inequalities of the construction hold with room.
    ``eps = eta = -cos(beta)/2`` for ``beta = (pi omega/2 + delta/2)/omega``.
    """
    if not 0 < gamma < omega:
        raise ParameterError("the construction needs 0 < gamma < omega")
    if not 0 < delta < math.pi * gamma:
        raise ParameterError("delta must lie in (0, pi gamma)")
    if not (0 < d2_factor < 1 and 0 < a_factor < 1):
        raise ParameterError("d2_factor and a_factor must lie in (0, 1)")
    d2 = d2_factor * c2 ** (-1 / omega)
    a_mod = a_factor * (A_est * d2 / 2) ** omega
    a_arg = omega * math.pi / 2 - math.pi * gamma / 2 + delta / 2
    beta = (math.pi * omega / 2 + delta / 2) / omega
    alpha = (math.pi * omega / 2 - math.pi * gamma + delta / 2) / omega
    eps = eta = -math.cos(beta) / 2
    log.debug(
        "proof recipe: d2=%.6g |a|=%.6g arg a=%.6g alpha=%.6g beta=%.6g eps=eta=%.6g",
        d2, a_mod, a_arg, alpha, beta, eps,
    )
    return ProofRecipe(a_mod, a_arg, d2, alpha, beta, eps, eta)


def pl_numeric_check(
    f: TestFunction,
    sector: SectorSpec,
    boundary_n: int = 1000,
    interior_n: int = 10000,
    inner_ratio: float = 1e-3,
) -> dict:
    """Grid maximum-modulus check on a bounded sector.

    The boundary is the two radial segments ``[inner_ratio r, r]`` plus the
    arc ``|z| = r``. Interior points use a subset of the arc directions and
    of the segment radii, strictly inside. ``satisfied`` iff the interior
    maximum of ``|f|`` does not exceed the boundary maximum by more than a
    relative 1e-6 (compared in log form). A necessary condition only.
    """
    if sector.r is None:
        raise DomainError("pl_numeric_check needs a bounded sector")
    if boundary_n < 8 or interior_n < 4:
        raise DomainError("grids too small")
    n_arc = boundary_n // 2
    n_ray = (boundary_n - n_arc) // 2
    args = np.linspace(sector.alpha, sector.beta, n_arc)
    rads = np.geomspace(sector.r * inner_ratio, sector.r, n_ray)
    n_a = min(n_arc - 2, max(1, int(round(math.sqrt(interior_n)))))
    n_r = min(n_ray - 1, max(1, interior_n // n_a))
    ia = np.unique(np.round(np.linspace(1, n_arc - 2, n_a)).astype(int))
    ir = np.unique(np.round(np.linspace(0, n_ray - 2, n_r)).astype(int))
    try:
        bd = np.concatenate(
            [
                f.log_abs(np.full(n_arc, sector.r), args),
                f.log_abs(rads, np.full(n_ray, sector.alpha)),
                f.log_abs(rads, np.full(n_ray, sector.beta)),
            ]
        )
        RR, TT = np.meshgrid(rads[ir], args[ia])
        inner = f.log_abs(RR.ravel(), TT.ravel())
    except (DomainError, FloatingPointError, ValueError) as exc:
        raise ExperimentAborted(f"evaluation failed: {exc}", {"function": f.name}) from exc
    max_bd, max_in = float(np.max(bd)), float(np.max(inner))
    with np.errstate(over="ignore"):
        return {
            "max_boundary": float(np.exp(max_bd)),
            "max_interior": float(np.exp(max_in)),
            "log_max_boundary": max_bd,
            "log_max_interior": max_in,
            "boundary_points": int(bd.size),
            "interior_points": int(inner.size),
            "satisfied": bool(max_in <= max_bd + math.log1p(1e-6)),
        }


# ---------------------------------------------------------------- Wasow example


def wasow_derivative(V: MaergoizFunction, r) -> float:
    """``f'(r)`` on the positive axis, ``f(z) = sin(e^{V(1/z)}) e^{-V(1/z)}``.

    ``f'(z) = V'(1/z) z^{-2} (sin(w) e^{-u} - cos(w))`` with ``u = V(1/z)``,
    ``w = e^u``, evaluated at a precision that resolves the phase of ``w``.
    """
    x_est = 1.0 / float(r)
    re_u = float(V.mp_value(x_est).real)
    with mpmath.workprec(96 + int(re_u / math.log(2)) + 32):
        x = 1 / mpmath.mpf(r)
        u = V.mp_value(x).real
        w = mpmath.exp(u)
        val = V.mp_derivative(x) * x**2 * (mpmath.sin(w) * mpmath.exp(-u) - mpmath.cos(w))
        return float(val)


def _subsequence(V: MaergoizFunction, n_values, shift: float) -> list:
    """Points with ``e^{V(1/r_n)} = pi n + shift``, evaluated in extended precision."""
    rows = []
    for n in n_values:
        with mpmath.workprec(160):
            w_target = mpmath.pi * n + shift
            x = V.mp_inverse(mpmath.log(w_target))
            u = V.mp_value(x).real
            w = mpmath.exp(u)
            vp = V.mp_derivative(x)
            env = vp * x**2
            der = env * (mpmath.sin(w) * mpmath.exp(-u) - mpmath.cos(w))
            rows.append(
                {
                    "n": int(n),
                    "r": float(1 / x),
                    "derivative": float(der),
                    "envelope": float(env),
                    "ratio_to_envelope": float(abs(der) / env),
                }
            )
    return rows


@dataclass
class WasowResult:
    flat_fit_on_axis: FlatnessFit | NotFlat
    derivative_samples: list
    oscillation_detected: bool
    subsequences: dict
    vanishing_trend: bool
    unbounded_trend: bool

    def to_dict(self) -> dict:
        return {
            "flat_fit_on_axis": self.flat_fit_on_axis.to_dict(),
            "derivative_samples": self.derivative_samples,
            "oscillation_detected": self.oscillation_detected,
            "subsequences": self.subsequences,
            "vanishing_trend": self.vanishing_trend,
            "unbounded_trend": self.unbounded_trend,
        }


def wasow_demo(
    V: MaergoizFunction,
    r_grid=None,
    A: AssociatedFunction | None = None,
    n_values=None,
) -> WasowResult:
    """Flat on the axis, yet ``f'`` has no limit at 0.

    * The axis trace gets a flatness fit (default ``M`` from
      ``gevrey(1/rho)``).
    * ``f'`` is sampled on ``r_grid``; oscillation is flagged when samples
      exceed ``+max(1, 10 * flat envelope)`` and fall below its negative.
    * Along ``e^{V(1/r_n)} = pi n + pi/2`` (zeros of ``cos w``) the
      derivative tends to 0. Along ``e^{V(1/r_n)} = pi n`` (extrema of
      ``cos w``) it follows the unbounded envelope ``V'(1/r)/r^2``.
    """
    radii = _check_radii(default_radii() if r_grid is None else r_grid)
    if A is None:
        A = AssociatedFunction(gevrey(1.0 / V.rho, 10**5))
    f = TestFunction.wasow(V)
    fit = fit_flat_type(trace_ray(f, 0.0, radii), A)

    samples, hi, lo = [], False, False
    for r in radii:
        d = wasow_derivative(V, r)
        x = 1.0 / r
        flat_env = float(V.mp_derivative(x) * x**2 * mpmath.exp(-V.mp_value(x).real))
        thr = max(1.0, 10.0 * flat_env)
        hi |= d > thr
        lo |= d < -thr
        samples.append({"r": float(r), "derivative": d})

    n_values = [10**k for k in range(1, 9)] if n_values is None else list(n_values)
    vanish = _subsequence(V, n_values, mpmath.pi / 2)
    unbounded = _subsequence(V, n_values, 0)
    mags = np.array([abs(row["derivative"]) for row in vanish])
    vanishing = bool(np.all(np.diff(mags) < 0) and mags[-1] < 1e-3 * mags[0])
    envs = np.array([row["envelope"] for row in unbounded])
    ratios = np.array([row["ratio_to_envelope"] for row in unbounded])
    growing = bool(np.all(np.diff(envs) > 0) and np.all(np.abs(ratios - 1) < 1e-6))
    return WasowResult(
        fit,
        samples,
        bool(hi and lo),
        {"derivative_vanishing": vanish, "derivative_unbounded": unbounded},
        vanishing,
        growing,
    )


# ---------------------------------------------------------------- expansions


@dataclass
class ExpansionFit:
    """Constants with ``|f - sum_{n<p} a_n z^n| <= C A^p M_p |z|^p`` on every kept sample."""

    theta: float
    C: float
    A: float
    p_max: int
    log_C: float
    bracket: tuple
    bracket_limited: bool = False
    dropped: int = 0
    per_p_slack: np.ndarray = field(default=None, repr=False)
    fitted: bool = True

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "C": self.C,
            "A": self.A,
            "p_max": self.p_max,
            "bracket": list(self.bracket),
            "bracket_limited": self.bracket_limited,
            "dropped": self.dropped,
            "fitted": True,
        }


@dataclass
class NoExpansion:
    theta: float
    reason: str
    fitted: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _neumaier_remainders(values, coeffs, z, p_max):
    """``R_p = f - sum_{n<p} a_n z^n`` for ``p = 0..p_max`` with compensated sums.

    Returns ``(|R_p|, scale_p)`` arrays of shape ``(p_max + 1, len(z))``;
    ``scale_p`` is the largest summand magnitude involved.
    """
    n = z.size
    absR = np.empty((p_max + 1, n))
    scale = np.empty((p_max + 1, n))
    s = values.astype(complex).copy()
    comp = np.zeros(n, dtype=complex)
    big = np.abs(values)
    absR[0], scale[0] = np.abs(s), big
    zp = np.ones(n, dtype=complex)
    for p in range(1, p_max + 1):
        term = -coeffs[p - 1] * zp
        zp = zp * z
        for part in ("real", "imag"):
            sp, tp, cp = getattr(s, part), getattr(term, part), getattr(comp, part)
            t = sp + tp
            cp = cp + np.where(np.abs(sp) >= np.abs(tp), (sp - t) + tp, (tp - t) + sp)
            if part == "real":
                new_re, c_re = t, cp
            else:
                new_im, c_im = t, cp
        s = new_re + 1j * new_im
        comp = c_re + 1j * c_im
        big = np.maximum(big, np.abs(term))
        absR[p] = np.abs(s + comp)
        scale[p] = big
    return absR, scale


def _brute_M_log(log_terms, s):
    """``max_p (p s - log M_p)`` by direct scan, for an array of ``s``."""
    s = np.atleast_1d(s)
    p = np.arange(log_terms.size, dtype=float)
    out = np.empty(s.size)
    chunk = max(1, 2_000_000 // log_terms.size)
    for k in range(0, s.size, chunk):
        out[k : k + chunk] = np.max(np.outer(s[k : k + chunk], p) - log_terms[None, :], axis=1)
    return out


def expansion_fit(
    f: TestFunction,
    coeffs,
    W: WeightSequence,
    theta: float,
    radii=None,
    p_max: int | None = None,
    margin: float = MARGIN,
    resolution: float = RESOLUTION,
    bracket: tuple | None = None,
) -> ExpansionFit | NoExpansion:
    """Fit ``C, A`` of a directional M-asymptotic expansion along one ray.

    With ``h[p, i] = log|R_p(z_i)| - p log A - log M_p - p log r_i``, ``A`` is
    the smallest bracket point with ``max_{p,i} h <= max_p h[p, 0] + margin``
    (anchor at the largest radius) and ``C = exp(max h)``.

    An all-zero coefficient list is the null series: it constrains every
    order ``p <= horizon`` (unless ``p_max`` says otherwise), and the sup
    over ``p`` is taken by direct scan of ``log M_p``. That is an independent
    route to :func:`fit_flat_type`, and its default bracket is built the same
    way. For nonzero coefficients the default bracket is ``(1e-3, 1e3)``; an
    analytic function satisfies the contract for every ``A``, in which case
    the fit is ``bracket_limited``.

    Samples whose remainder has cancelled below ``1e6`` ulps of the summands
    are dropped with a warning.

    Raises:
        DomainError: if ``p_max`` exceeds the coefficient count or horizon,
            or if every sample is dropped.
    """
    radii = _check_radii(default_radii() if radii is None else radii)
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    null = not np.any(coeffs != 0)
    if p_max is None:
        p_max = W.horizon if null else coeffs.size
    p_max = int(p_max)
    if p_max < 0 or p_max > W.horizon:
        raise DomainError(f"p_max = {p_max} outside 0..horizon")
    if not null and p_max > coeffs.size:
        raise DomainError(f"p_max = {p_max} exceeds the {coeffs.size} coefficients supplied")
    log_r = np.log(radii)
    lt = W.log_terms[: p_max + 1]

    if null:
        la = np.asarray(f.log_abs(radii, theta), dtype=float)
        if np.any(np.isnan(la)) or np.any(la == np.inf):
            return NoExpansion(float(theta), "log|f| is not finite on the ray")
        dropped = 0

        # the sup over p is taken explicitly, so the table is already per sample
        def table(Aval):
            return la + _brute_M_log(lt, -math.log(Aval) - log_r)

        def anchor_of(h):
            return h[0]

        per_sample = table
    else:
        z = radii * np.exp(1j * theta)
        vals = np.asarray(f.value(radii, theta), dtype=complex)
        absR, scale = _neumaier_remainders(vals, coeffs, z, p_max)
        keep = absR >= DROP_ULPS * np.finfo(float).eps * scale
        dropped = int(np.size(keep) - np.count_nonzero(keep))
        if dropped:
            warnings.warn(f"expansion_fit: {dropped} (p, r) samples dropped for cancellation")
        if not np.any(keep):
            raise DomainError("every remainder sample was lost to cancellation")
        with np.errstate(divide="ignore"):
            logR = np.where(keep, np.log(absR), -np.inf)
        p = np.arange(p_max + 1, dtype=float)[:, None]
        base = logR - lt[:, None] - p * log_r[None, :]
        first = int(np.flatnonzero(np.any(keep, axis=0))[0])

        def table(Aval):
            return base - p * math.log(Aval)

        def anchor_of(h):
            return np.max(h[:, first])

        def per_sample(Aval):
            return np.max(table(Aval), axis=0)

    if bracket is None:
        if null:
            r_min = float(radii.min())
            lo = math.exp(-math.log(r_min) - float(W.log_quots[p_max - 1])) if p_max > 0 else 1.0
            s_d = _log_t_at_level(
                lambda s: float(_brute_M_log(lt, s)[0]),
                float(W.log_quots[0]),
                float(W.log_quots[max(p_max - 1, 0)]),
                DECAY_NATS,
            )
            hi = math.exp(-math.log(r_min) - s_d)
        else:
            lo, hi = 1e-3, 1e3
    else:
        lo, hi = bracket

    if p_max == 0:
        hv = per_sample(1.0)
        log_C = float(np.max(hv))
        return ExpansionFit(float(theta), math.exp(log_C), 1.0, 0, log_C, (lo, hi), False, dropped,
                            np.array([0.0]))

    def pred(Aval):
        h = table(Aval)
        return bool(np.max(h) <= anchor_of(h) + margin)

    if not pred(hi):
        return NoExpansion(float(theta), f"anchored slack exceeds margin at A = {hi:.6g}")
    limited = pred(lo)
    A_fit = lo if limited else _bisect_log(pred, lo, hi, resolution)
    log_C = float(np.max(per_sample(A_fit)))
    if null:
        per_p = None
    else:
        per_p = log_C - np.max(table(A_fit), axis=1)
    return ExpansionFit(
        float(theta), math.exp(log_C), A_fit, p_max, log_C, (lo, hi), limited, dropped, per_p
    )


def expansion_fit_holds(fit: ExpansionFit, f, coeffs, W, radii, tol=POST_HOC_TOL) -> bool:
    """Re-check ``|R_p| <= C A^p M_p r^p`` for ``p <= min(p_max, 64)`` on the kept samples."""
    radii = np.asarray(radii, dtype=float)
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    pm = min(fit.p_max, 64)
    if not np.any(coeffs != 0):
        la = f.log_abs(radii, fit.theta)
        p = np.arange(pm + 1)[:, None]
        rhs = fit.log_C + p * math.log(fit.A) + W.log_terms[: pm + 1, None] + p * np.log(radii)[None, :]
        return bool(np.all(la[None, :] <= rhs + tol))
    z = radii * np.exp(1j * fit.theta)
    absR, scale = _neumaier_remainders(f.value(radii, fit.theta), coeffs, z, pm)
    keep = absR >= DROP_ULPS * np.finfo(float).eps * scale
    p = np.arange(pm + 1)[:, None]
    with np.errstate(divide="ignore"):
        lhs = np.log(absR)
    rhs = fit.log_C + p * math.log(fit.A) + W.log_terms[: pm + 1, None] + p * np.log(radii)[None, :]
    return bool(np.all(np.where(keep, lhs <= rhs + tol, True)))


def extension_experiment(
    f: TestFunction,
    coeffs,
    W: WeightSequence,
    G: SectorSpec,
    theta0: float,
    direction_fan=None,
    radii=None,
    p_max: int | None = None,
) -> dict:
    """Fit directional expansions on a fan of directions inside ``G``.

    Raises:
        ExperimentAborted: if the grid shows ``f`` unbounded on the fan, or
            the fit at ``theta0`` fails.
    """
    half = math.pi * G.gamma / 2
    if direction_fan is None:
        direction_fan = G.d + np.linspace(-0.9 * half, 0.9 * half, 9)
    fan = np.asarray(direction_fan, dtype=float)
    if np.any(np.abs(fan - G.d) >= half):
        raise DomainError("fan directions must lie inside the sector")
    radii = default_radii() if radii is None else radii
    worst, where = -math.inf, None
    for theta in np.concatenate([[theta0], fan]):
        m = float(np.max(f.log_abs(radii, theta)))
        if m > worst:
            worst, where = m, float(theta)
    if not worst <= BOUND_LOG:
        raise ExperimentAborted(
            "f is not bounded on the sampled subsector",
            {"max_log_abs": worst, "direction": where},
        )
    base = expansion_fit(f, coeffs, W, theta0, radii, p_max)
    if not base.fitted:
        raise ExperimentAborted("no expansion fit in the seed direction", {"theta0": theta0, "reason": base.reason})
    rows = []
    for theta in fan:
        fit = expansion_fit(f, coeffs, W, float(theta), radii, p_max)
        rows.append(
            {
                "theta": float(theta),
                "C": fit.C if fit.fitted else None,
                "A": fit.A if fit.fitted else None,
                "fitted": fit.fitted,
            }
        )
    return {"theta0": theta0, "seed": base.to_dict(), "rows": rows, "success": all(r["fitted"] for r in rows)}


def large_opening_steps(
    f: TestFunction,
    A: AssociatedFunction,
    gamma: float,
    omega: float,
    eps: float | None = None,
    radii=None,
) -> list:
    """Per-step flatness fits along ``theta_j = theta_{j-1} - (pi omega/2 - eps)``.

    Starts at ``+pi gamma/2`` and stops at ``-pi gamma/2``. Only the
    per-step constants are reported; no composite factor is claimed.
    """
    half = math.pi * gamma / 2
    eps = math.pi * omega / 8 if eps is None else float(eps)
    if not 0 < eps < math.pi * omega / 4:
        raise ParameterError("eps must lie in (0, pi omega / 4)")
    step = math.pi * omega / 2 - eps
    thetas = [half]
    while thetas[-1] - step > -half:
        thetas.append(thetas[-1] - step)
    thetas.append(-half)
    out = []
    for theta in thetas:
        fit = fit_flat_type(trace_ray(f, theta, radii), A)
        out.append({"theta": theta, "c2": fit.c2 if fit.flat else None, "flat": fit.flat})
    return out
