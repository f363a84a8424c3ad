"""SVG figures for the CLI reports.

Figures are built on :class:`matplotlib.figure.Figure` directly, so no
GUI backend or pyplot state is involved. A fixed hash salt and an empty date
make the SVG bytes reproducible for identical inputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

STYLE = {
    "svg.hashsalt": "proxasym",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    return path


def _figure(**kw) -> Figure:
    return Figure(figsize=kw.pop("figsize", (5.0, 3.6)), layout="constrained", **kw)


def plot_type_profile(profile, path) -> Path:
    """Polar plot of ``R(theta)`` with the plateau edges marked."""
    with matplotlib.rc_context(STYLE):
        fig = _figure(figsize=(4.6, 4.6))
        ax = fig.add_subplot(projection="polar")
        ax.plot(profile.theta, profile.R, color="C0")
        for edge in (profile.alpha_p, profile.beta_p):
            ax.plot([edge, edge], [0, profile.R0], color="C1", ls="--", lw=0.8)
        ax.set_title(f"type profile, k = {profile.k:g}")
        return _save(fig, path)


def plot_ray_traces(traces, path, fits=None) -> Path:
    """``log|f|`` against ``1/r`` for each ray, with fitted bounds when given.

    ``fits`` maps ``theta`` to a callable returning the log bound on ``r``.
    """
    with matplotlib.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot()
        for i, tr in enumerate(traces):
            x = 1.0 / tr.radii
            finite = np.isfinite(tr.log_abs)
            ax.plot(x[finite], tr.log_abs[finite], color=f"C{i % 10}", label=f"theta = {tr.theta:.3g}")
            if fits and tr.theta in fits:
                ax.plot(x, fits[tr.theta](tr.radii), color=f"C{i % 10}", ls=":", lw=0.8)
        ax.set_xlabel("1/r")
        ax.set_ylabel("log|f|")
        if len(traces) <= 10:
            ax.legend(fontsize=7)
        return _save(fig, path)


def plot_propagation(rows, path) -> Path:
    """Fitted ``k2`` and the predicted bound against ``delta`` (log scale)."""
    delta = np.array([r["delta"] for r in rows])
    k2 = np.array([r["k2_fitted"] for r in rows], dtype=float)
    bound = np.array([r["k2_predicted_bound"] for r in rows])
    with matplotlib.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot()
        ax.semilogy(delta, bound, color="C1", label="predicted bound")
        ok = np.isfinite(k2)
        ax.semilogy(delta[ok], k2[ok], "o-", color="C0", ms=3, label="fitted k2")
        ax.set_xlabel("delta")
        ax.set_ylabel("k2")
        ax.legend()
        return _save(fig, path)


def plot_band(t, g, lo, hi, path, ylabel="g(t)") -> Path:
    """A sampled function of ``t`` (log axis) with its tail band shaded."""
    t = np.asarray(t, dtype=float)
    with matplotlib.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot()
        ax.semilogx(t, g, color="C0")
        ax.axhspan(lo, hi, color="C1", alpha=0.2, lw=0)
        ax.set_xlabel("t")
        ax.set_ylabel(ylabel)
        return _save(fig, path)


def plot_decay(points, path, ylabel="deviation") -> Path:
    """``(r, value)`` pairs on log-log axes."""
    arr = np.asarray(points, dtype=float)
    with matplotlib.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot()
        pos = arr[:, 1] > 0
        ax.loglog(arr[pos, 0], arr[pos, 1], "o-", ms=3)
        ax.set_xlabel("r")
        ax.set_ylabel(ylabel)
        return _save(fig, path)


def plot_series(x, y, path, xlabel="x", ylabel="y", logx=False) -> Path:
    """Plain line plot of ``y`` against ``x``."""
    with matplotlib.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot()
        (ax.semilogx if logx else ax.plot)(x, y, color="C0")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        return _save(fig, path)
