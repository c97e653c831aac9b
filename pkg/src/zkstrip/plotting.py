"""Static figures for experiment reports.

Figures are drawn on the Agg canvas through the object-oriented API, so
importing this module never touches the global pyplot state or needs a
display.  Every function writes one PNG and returns its path.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["REPORT_STYLE", "plot_series", "plot_field", "plot_histogram", "plot_convergence"]

REPORT_STYLE = {
    "figsize": (6.4, 4.0),
    "dpi": 110,
    "linewidth": 1.4,
    "fontsize": 9,
}


def _figure(nrows=1, ncols=1):
    fig = Figure(figsize=REPORT_STYLE["figsize"], dpi=REPORT_STYLE["dpi"])
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, ncols)
    return fig, axes


def _finish(fig, ax, path, title, xlabel, ylabel):
    fs = REPORT_STYLE["fontsize"]
    if title:
        ax.set_title(title, fontsize=fs + 1)
    ax.set_xlabel(xlabel, fontsize=fs)
    ax.set_ylabel(ylabel, fontsize=fs)
    ax.tick_params(labelsize=fs - 1)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    return path


def plot_series(path, t, series: dict, title="", xlabel="t", ylabel="", logy=False, reference: dict | None = None):
    """Line plot of named time series; ``reference`` curves are dashed."""
    fig, ax = _figure()
    lw = REPORT_STYLE["linewidth"]
    for name, vals in series.items():
        ax.plot(t, vals, lw=lw, label=name)
    for name, vals in (reference or {}).items():
        ax.plot(t, vals, "--", lw=lw, label=name)
    if logy:
        ax.set_yscale("log")
    if len(series) + len(reference or {}) > 1:
        ax.legend(fontsize=REPORT_STYLE["fontsize"] - 1)
    return _finish(fig, ax, path, title, xlabel, ylabel)


def plot_field(path, x, y, u, title="", clabel="u"):
    """Colour map of a field ``u[x, y]`` on the half-strip (x horizontal)."""
    fig, ax = _figure()
    u = np.asarray(u)
    lim = float(np.max(np.abs(u))) or 1.0
    mesh = ax.pcolormesh(x, y, u.T, shading="nearest", cmap="RdBu_r", vmin=-lim, vmax=lim)
    cb = fig.colorbar(mesh, ax=ax)
    cb.set_label(clabel, fontsize=REPORT_STYLE["fontsize"])
    return _finish(fig, ax, path, title, "x", "y")


def plot_histogram(path, values, threshold: float | None = None, title="", xlabel="ratio"):
    fig, ax = _figure()
    ax.hist(np.asarray(values, dtype=float), bins=40, color="0.4")
    if threshold is not None:
        ax.axvline(threshold, color="C3", ls="--", lw=REPORT_STYLE["linewidth"])
    return _finish(fig, ax, path, title, xlabel, "count")


def plot_convergence(path, h, errors: dict, order: float = 2.0, title="", xlabel="h"):
    """Log-log error plot with a reference slope ``order``."""
    fig, ax = _figure()
    h = np.asarray(h, dtype=float)
    for name, e in errors.items():
        ax.loglog(h, e, "o-", lw=REPORT_STYLE["linewidth"], label=name)
    first = next(iter(errors.values()), None)
    if first is not None and len(h):
        ref = first[0] * (h / h[0]) ** order
        ax.loglog(h, ref, "k:", label=f"slope {order:g}")
    ax.legend(fontsize=REPORT_STYLE["fontsize"] - 1)
    return _finish(fig, ax, path, title, xlabel, "error")
