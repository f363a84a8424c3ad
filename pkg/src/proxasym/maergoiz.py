"""Concrete Maergoiz functions and grid validation of their defining properties.

Two families are provided on a sector ``S_gamma``:

* ``power(rho)``: ``V(z) = z^rho``;
* ``power_log(rho, b)``: ``V(z) = z^rho * log(e + z)^b``.

Points are passed as ``(modulus, argument)`` with the argument kept unwrapped,
and ``V`` is handled through ``log V`` so that moduli far beyond the float
range of ``V`` itself are fine.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np

from .assoc_fn import AssociatedFunction
from .errors import DomainError, ParameterError

MIN_PROPERTY_GRID = 32


@dataclass(frozen=True)
class MaergoizFunction:
    """A sectorial function ``V`` with proximate order ``rho + b log log r / log r``.

    Attributes:
        family: ``"power"`` or ``"power_log"``.
        rho: order, ``> 0``.
        b: exponent of the ``log(e + z)`` factor (ignored by ``power``).
        gamma: opening parameter of ``S_gamma``; ``power_log`` needs ``gamma <= 2``.
        scale: positive constant multiplying ``V``.
    """

    family: str
    rho: float
    b: float = 0.0
    gamma: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        family = self.family.replace("-", "_")
        object.__setattr__(self, "family", family)
        if family not in ("power", "power_log"):
            raise ParameterError(f"unknown Maergoiz family {self.family!r}")
        if not self.rho > 0:
            raise ParameterError("rho must be > 0")
        if not self.gamma > 0:
            raise ParameterError("gamma must be > 0")
        if not self.scale > 0:
            raise ParameterError("scale must be > 0")
        if family == "power_log" and self.gamma > 2:
            # log(e + z) has no continuation past arg z = +-pi in this form
            raise ParameterError("power_log is only defined for gamma <= 2")
        if family == "power":
            object.__setattr__(self, "b", 0.0)

    @classmethod
    def power(cls, rho: float, gamma: float = 2.0) -> "MaergoizFunction":
        return cls("power", float(rho), 0.0, float(gamma))

    @classmethod
    def power_log(cls, rho: float, b: float, gamma: float = 2.0) -> "MaergoizFunction":
        return cls("power_log", float(rho), float(b), float(gamma))

    def scaled(self, c: float) -> "MaergoizFunction":
        return MaergoizFunction(self.family, self.rho, self.b, self.gamma, self.scale * c)

    @property
    def label(self) -> str:
        if self.family == "power":
            return f"power({self.rho:g})"
        return f"power_log({self.rho:g}, {self.b:g})"

    @property
    def half_opening(self) -> float:
        return np.pi * self.gamma / 2

    def _check(self, mod, arg):
        mod = np.asarray(mod, dtype=float)
        arg = np.asarray(arg, dtype=float)
        if np.any(mod <= 0) or np.any(~np.isfinite(mod)):
            raise DomainError("modulus must be positive and finite")
        if np.any(np.abs(arg) >= self.half_opening):
            raise DomainError(
                f"argument outside the sector |arg z| < {self.half_opening:.6g}"
            )
        return mod, arg

    def _log_factor(self, mod, arg):
        """``b * log(log(e + z))`` (principal branches, valid for ``|arg z| < pi``)."""
        mod, arg = np.broadcast_arrays(np.asarray(mod, float), np.asarray(arg, float))
        logz = np.log(mod) + 1j * arg
        big = mod >= 1.0
        # log(e + z) = log z + log1p(e / z) on |arg z| < pi; no overflow for huge |z|
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.where(
                big,
                logz + np.log1p(np.e * np.exp(-logz)),
                np.log(np.e + np.where(big, 0.0, mod) * np.exp(1j * arg)),
            )
        return self.b * np.log(w)

    def log_V(self, mod, arg=0.0):
        """Complex ``log V(z)`` at ``z = mod * exp(i arg)``, argument unwrapped."""
        mod, arg = self._check(mod, arg)
        out = self.rho * (np.log(mod) + 1j * arg) + np.log(self.scale)
        if self.family == "power_log" and self.b != 0.0:
            out = out + self._log_factor(mod, arg)
        return out

    def log_V_real(self, r):
        """``log V(r)`` for real ``r > 0``."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise DomainError("r must be > 0")
        out = self.rho * np.log(r) + np.log(self.scale)
        if self.family == "power_log" and self.b != 0.0:
            out = out + self.b * np.log(np.log(np.e + r))
        return out

    def log_derivative(self, mod, arg=0.0):
        """``V'(z) / V(z)`` at ``z = mod * exp(i arg)``."""
        mod, arg = self._check(mod, arg)
        z = mod * np.exp(1j * arg)
        out = self.rho / z
        if self.family == "power_log" and self.b != 0.0:
            out = out + self.b / ((np.e + z) * np.log(np.e + z))
        return out

    def mp_value(self, mod, arg=0):
        """``V(z)`` as an ``mpmath.mpc`` at the current working precision.

        ``mod`` and ``arg`` may be floats (taken as exact binary values) or
        mpmath numbers.
        """
        self._check(float(mod), float(arg))
        mod, arg = mpmath.mpf(mod), mpmath.mpf(arg)
        out = mpmath.exp(self.rho * (mpmath.log(mod) + 1j * arg)) * self.scale
        if self.family == "power_log" and self.b != 0.0:
            z = mod * mpmath.expj(arg)
            out *= mpmath.log(mpmath.e + z) ** self.b
        return out

    def mp_derivative(self, x):
        """``V'(x)`` for real ``x > 0`` as an ``mpmath.mpf``."""
        x = mpmath.mpf(x)
        v = self.mp_value(x).real
        ld = self.rho / x
        if self.family == "power_log" and self.b != 0.0:
            ld += self.b / ((mpmath.e + x) * mpmath.log(mpmath.e + x))
        return v * ld

    def mp_inverse(self, u):
        """Real ``x > 0`` with ``V(x) = u`` (``u > 0``), as an ``mpmath.mpf``."""
        u = mpmath.mpf(u)
        if u <= 0:
            raise DomainError("V takes only positive values on (0, inf)")
        guess = (u / self.scale) ** (1 / mpmath.mpf(self.rho))
        if self.family == "power" or self.b == 0.0:
            return guess
        # V is increasing on (0, inf); solve in log x for stability
        f = lambda s: mpmath.log(self.mp_value(mpmath.exp(s)).real) - mpmath.log(u)
        return mpmath.exp(mpmath.findroot(f, mpmath.log(guess)))

    def scaling_ratio(self, z_mod, z_arg, r):
        """``V(z r) / V(r)`` in closed form; for ``power`` this is exactly ``z^rho``."""
        z_mod, z_arg = self._check(z_mod, z_arg)
        base = np.exp(self.rho * (np.log(z_mod) + 1j * z_arg))
        if self.family == "power" or self.b == 0.0:
            return base
        num = self._log_factor(z_mod * r, z_arg) / self.b
        den = np.log(np.log(np.e + r))
        return base * np.exp(self.b * (num - den))


def V_eval(V: MaergoizFunction, mod, arg=0.0):
    """Complex value ``V(z)``.

    Raises:
        DomainError: for ``|arg z| >= pi gamma / 2`` or ``mod <= 0``.
    """
    out = np.exp(V.log_V(mod, arg))
    return complex(out) if np.ndim(out) == 0 else out


def default_z_grid(n: int = 9):
    """Compact test set ``1/2 <= |z| <= 2``, ``|arg z| <= pi/4``."""
    mods = np.geomspace(0.5, 2.0, n)
    args = np.linspace(-np.pi / 4, np.pi / 4, n)
    M, A = np.meshgrid(mods, args)
    return M.ravel(), A.ravel()


@dataclass
class PropertyIResult:
    deviation: float
    r: float
    decay: list
    decreasing: bool
    relative_deviation: float

    def to_dict(self) -> dict:
        return asdict(self)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "deviation"])
            for r, d in self.decay:
                w.writerow([f"{r:.12g}", f"{d:.12g}"])


def property_I_check(V: MaergoizFunction, z_grid=None, r_seq=None) -> PropertyIResult:
    """Sup over ``z_grid`` of ``|V(z r) / V(r) - z^rho|`` along ``r_seq``.

    ``z_grid`` is a ``(moduli, arguments)`` pair (default :func:`default_z_grid`),
    ``r_seq`` an increasing sequence (default ``10^2 .. 10^8``). The reported
    deviation is the one at the largest ``r``; ``decay`` holds the whole series.
    """
    z_mod, z_arg = default_z_grid() if z_grid is None else map(np.asarray, z_grid)
    r_seq = np.logspace(2, 8, 7) if r_seq is None else np.asarray(r_seq, dtype=float)
    if np.any(np.diff(r_seq) <= 0):
        raise DomainError("r_seq must be increasing")
    target = np.exp(V.rho * (np.log(z_mod) + 1j * z_arg))
    decay, rel = [], []
    for r in r_seq:
        diff = np.abs(V.scaling_ratio(z_mod, z_arg, r) - target)
        decay.append((float(r), float(np.max(diff))))
        rel.append(float(np.max(diff / np.abs(target))))
    devs = np.array([d for _, d in decay])
    return PropertyIResult(
        devs[-1], float(r_seq[-1]), decay, bool(np.all(np.diff(devs) <= 0)), rel[-1]
    )


def property_II_check(V: MaergoizFunction, z_grid=None) -> float:
    """Max ``|V(conj z) - conj V(z)|`` over the grid (0 for real-coefficient families)."""
    z_mod, z_arg = default_z_grid() if z_grid is None else map(np.asarray, z_grid)
    return float(np.max(np.abs(V_eval(V, z_mod, -z_arg) - np.conj(V_eval(V, z_mod, z_arg)))))


def _second_divided(x, y):
    """Second divided differences ``f[x_{i-1}, x_i, x_{i+1}]`` (times 2)."""
    d1 = np.diff(y) / np.diff(x)
    return 2 * np.diff(d1) / (x[2:] - x[:-2])


@dataclass
class ShapeReport:
    III: dict
    IV: dict
    V: dict

    @property
    def passed(self) -> bool:
        return bool(self.III["passed"] and self.IV["passed"] and self.V["passed"])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def property_III_to_V_check(V: MaergoizFunction, r_grid) -> ShapeReport:
    """Grid check of positivity/monotonicity (III), convexity of ``V(e^t)`` (IV)
    and concavity of ``log V(r)`` (V).

    (V) is decided on strict concavity in ``r``. Its status is ``"boundary"``
    when ``log V`` is affine in ``log r`` (the pure power family), since the
    statement is then degenerate in the logarithmic variable; both second
    difference margins are reported.

    Raises:
        DomainError: for fewer than 32 points or a grid that is not strictly
            increasing.
    """
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size < MIN_PROPERTY_GRID:
        raise DomainError(f"r_grid needs at least {MIN_PROPERTY_GRID} points")
    if np.any(np.diff(r) <= 0) or np.any(r <= 0):
        raise DomainError("r_grid must be positive and strictly increasing")
    t = np.log(r)
    logv = V.log_V_real(r)
    v = np.exp(logv)

    steps = np.diff(v)
    slope0 = float((logv[1] - logv[0]) / (t[1] - t[0]))
    III = {
        "passed": bool(np.all(v > 0) and np.all(steps > 0) and slope0 > 0),
        "positive": bool(np.all(v > 0)),
        "min_step": float(steps.min()),
        "V_at_min_r": float(v[0]),
        "small_end_log_slope": slope0,
    }

    conv = _second_divided(t, v)
    IV = {"passed": bool(np.all(conv > 0)), "worst_margin": float(conv.min())}

    conc_r = _second_divided(r, logv)
    conc_t = _second_divided(t, logv)
    affine_t = bool(np.max(np.abs(conc_t)) <= 1e-9 * max(1.0, V.rho))
    passed = bool(np.all(conc_r < 0))
    status = "boundary" if affine_t and passed else ("pass" if passed else "fail")
    V_ = {
        "passed": passed,
        "status": status,
        "worst_margin": float(conc_r.max()),
        "worst_margin_log_r": float(conc_t.max()),
    }
    return ShapeReport(III, IV, V_)


def rho_V(V: MaergoizFunction, r):
    """``log V(r) / log r`` for ``r > 1``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 1):
        raise DomainError("rho_V needs r > 1")
    out = V.log_V_real(r) / np.log(r)
    return float(out) if out.ndim == 0 else out


@dataclass
class MVBand:
    A_est: float
    B_est: float
    t0_used: float
    bounded: bool
    t: np.ndarray = field(repr=False, default=None)
    ratio: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"A_est": self.A_est, "B_est": self.B_est, "t0_used": self.t0_used, "bounded": self.bounded}


def mv_bounds(A: AssociatedFunction, V: MaergoizFunction, t_grid, t0: float | None = None) -> MVBand:
    """Band of ``M(t) / V(t)`` over the tail half of ``{t in t_grid : t > t0}``.

    ``bounded`` requires ``B_est / A_est < 2`` on that tail, which a correct
    order pairing meets and a wrong one (ratio drifting to 0 or infinity)
    does not.
    """
    t = np.asarray(t_grid, dtype=float)
    t0 = float(t[0]) if t0 is None else float(t0)
    t = t[t >= t0]
    if t.size < 2:
        raise DomainError("fewer than two grid points beyond t0")
    log_ratio = np.log(A.M_of_log_t(np.log(t))) - V.log_V_real(t)
    ratio = np.exp(log_ratio)
    tail = ratio[t.size // 2 :]
    lo, hi = float(tail.min()), float(tail.max())
    return MVBand(lo, hi, t0, bool(lo > 0 and hi / lo < 2.0), t, ratio)
