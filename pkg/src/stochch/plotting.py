"""Figures written next to the CSV output of a run."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PARAMS = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
}

# PNG metadata would otherwise carry the matplotlib version
_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def plot_series(times, series: dict, path, title: str = "") -> Path:
    """Energy, norms and the integral-equation residual against time."""
    with plt.rc_context(PARAMS):
        fig, axes = plt.subplots(1, 3, figsize=(10, 3))
        ax = axes[0]
        ax.plot(times, series["energy"], label=r"$F_\lambda(u)$")
        ax.plot(times, series["j_integral"], label=r"$\int j_\lambda(u)$")
        ax.set_xlabel("t")
        ax.legend()
        ax = axes[1]
        for key, lab in (("H_norm", r"$\|u\|_H$"), ("V1_semi", r"$\|\nabla u\|_H$"), ("dual_star", r"$\|u\|_*$")):
            ax.plot(times, series[key], label=lab)
        ax.set_xlabel("t")
        ax.legend()
        ax = axes[2]
        ax.semilogy(times, np.maximum(series["residual"], 1e-300), label="residual")
        ax.set_xlabel("t")
        ax.legend()
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_field(domain, values: np.ndarray, path, title: str = "") -> Path:
    with plt.rc_context(PARAMS):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if domain.ndim == 1:
            ax.plot(domain.nodes[0], values)
            ax.set_xlabel("x")
            ax.set_ylabel("u")
        else:
            lx, ly = domain.extents
            im = ax.imshow(values.T, origin="lower", extent=(0, lx, 0, ly), cmap="RdBu_r", aspect="equal")
            fig.colorbar(im, ax=ax)
            ax.grid(False)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_table(table, path) -> Path:
    """Log-log view of a study table's main column against its schedule."""
    cols = table.columns
    x = table.column(cols[0])
    ycol = cols[2] if table.name in ("lambda_refinement", "self_convergence") else cols[1]
    y = table.column(ycol)
    with plt.rc_context(PARAMS):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ok = (x > 0) & (y > 0) & np.isfinite(y)
        if np.any(ok):
            ax.loglog(x[ok], y[ok], "o-", label=ycol)
        else:
            ax.plot(x, y, "o-", label=ycol)
        ax.set_xlabel(cols[0])
        ax.set_ylabel(ycol)
        ax.set_title(table.name)
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)
