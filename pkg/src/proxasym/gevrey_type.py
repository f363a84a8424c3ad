"""Propagation of the Gevrey type of a flat function across a sector.

A function flat of Gevrey order ``1/k`` with type ``R0`` in direction
``theta0`` has, in every other direction ``theta`` of the sector, at least the
type ``R(theta)`` given by a three-branch formula: a plateau ``R0`` on
``[alpha', beta']`` and sine branches decaying to 0 at the radial boundaries.
Conventions (order ``1/k``, type as the constant inside ``exp(-R / |z|^k)``)
follow the formula verbatim; there is no universal agreement on this
terminology in the literature.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

LEFT, PLATEAU, RIGHT = "left", "plateau", "right"


@dataclass(frozen=True)
class SectorSpec:
    """Sector with bisecting direction ``d``, opening ``pi * gamma`` and optional radius."""

    d: float
    gamma: float
    r: float | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError(f"sector opening gamma must be > 0, got {self.gamma!r}")
        if self.r is not None and not self.r > 0:
            raise ParameterError(f"sector radius must be > 0, got {self.r!r}")

    @property
    def alpha(self) -> float:
        return self.d - np.pi * self.gamma / 2

    @property
    def beta(self) -> float:
        return self.d + np.pi * self.gamma / 2

    def contains_arg(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return (theta > self.alpha) & (theta < self.beta)


@dataclass
class TypeProfile:
    k: float
    theta0: float
    R0: float
    alpha: float
    beta: float
    alpha_p: float
    beta_p: float
    theta: np.ndarray = field(default_factory=lambda: np.empty(0))
    R: np.ndarray = field(default_factory=lambda: np.empty(0))
    branch: list = field(default_factory=list)

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.theta, self.R])

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "theta0": self.theta0,
            "R0": self.R0,
            "alpha": self.alpha,
            "beta": self.beta,
            "alpha_p": self.alpha_p,
            "beta_p": self.beta_p,
        }


def _branch_values(k, alpha, beta, alpha_p, beta_p, R0, theta):
    theta = np.asarray(theta, dtype=float)
    R = np.full(theta.shape, float(R0))
    labels = np.full(theta.shape, PLATEAU, dtype=object)
    left = theta < alpha_p
    right = theta > beta_p
    if np.any(left):
        ratio = np.sin(k * (theta[left] - alpha)) / np.sin(k * (alpha_p - alpha))
        R[left] = R0 * ratio ** (1.0 / k)
        labels[left] = LEFT
    if np.any(right):
        ratio = np.sin(k * (theta[right] - beta)) / np.sin(k * (beta_p - beta))
        R[right] = R0 * ratio ** (1.0 / k)
        labels[right] = RIGHT
    return R, labels


def type_profile(k: float, sector: SectorSpec, theta0: float, R0: float, theta_grid) -> TypeProfile:
    """Evaluate ``R(theta)`` on ``theta_grid``.

    Grid points equal to ``alpha'`` or ``beta'`` are assigned to the plateau,
    so the plateau value there is exactly ``R0``.

    Raises:
        ParameterError: for ``k <= 0`` or ``R0 <= 0``.
        DomainError: if ``theta0`` or any grid point is not strictly inside
            ``(alpha, beta)``.
    """
    if not k > 0:
        raise ParameterError(f"k must be > 0, got {k!r}")
    if not R0 > 0:
        raise ParameterError(f"R0 must be > 0, got {R0!r}")
    alpha, beta = sector.alpha, sector.beta
    if not alpha < theta0 < beta:
        raise DomainError(f"theta0 = {theta0} is not inside ({alpha}, {beta})")
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if theta.size and not np.all(sector.contains_arg(theta)):
        raise DomainError("every grid direction must lie strictly inside the sector")
    alpha_p = min(theta0, alpha + np.pi / (2 * k))
    beta_p = max(theta0, beta - np.pi / (2 * k))
    R, labels = _branch_values(k, alpha, beta, alpha_p, beta_p, R0, theta)
    return TypeProfile(
        float(k), float(theta0), float(R0), alpha, beta, alpha_p, beta_p, theta, R, list(labels)
    )


def profile_to_csv(P: TypeProfile, path=None) -> str:
    """Render ``theta,R,branch`` rows (12 significant digits); optionally write to ``path``."""
    if len(P.theta) == 0:
        raise DomainError("profile has no samples")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "R", "branch"])
    for t, r, b in zip(P.theta, P.R, P.branch):
        w.writerow([f"{t:.12g}", f"{r:.12g}", b])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
