"""Matplotlib renderings written next to the delimited outputs.

Figures are a convenience view of the CSV/JSON data; they are not part
of the byte-reproducibility contract (the data files are).
"""

from __future__ import annotations

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .field import FieldSpec, eval_b
from .mesh import FineMesh

_RATIO_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple")


def _streamlines(ax, spec: FieldSpec, density=1.2):
    xs = np.linspace(0.0, 1.0, 48)
    X, Y = np.meshgrid(xs, xs)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    b = eval_b(spec, pts)
    U = b[:, 0].reshape(X.shape)
    V = b[:, 1].reshape(X.shape)
    ax.streamplot(X, Y, U, V, color="white", density=density, linewidth=0.6,
                  arrowsize=0.6)


def solution_figure(path, fm: FineMesh, values: np.ndarray, spec: FieldSpec,
                    title: str = "temperature") -> None:
    """Final-time temperature with field lines overlaid in white."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    tpc = ax.tripcolor(fm.vertices[:, 0], fm.vertices[:, 1], fm.triangles,
                       values[:fm.n_vertices], shading="gouraud", cmap="inferno")
    _streamlines(ax, spec)
    fig.colorbar(tpc, ax=ax)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def error_vs_dofh_figure(path, rows: list[dict]) -> None:
    """log-log relative error against coarse system size, one line per ratio."""
    fig, ax = plt.subplots(figsize=(4.8, 3.8))
    ratios = sorted({row["ratio"] for row in rows})
    for color, ratio in zip(_RATIO_COLORS, ratios):
        pts = [(row["dof_h"], row["err"]) for row in rows
               if row["ratio"] == ratio and np.isfinite(row["err"])]
        if not pts:
            continue
        pts.sort()
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-",
                  color=color, label=f"ratio {ratio:.0e}")
    ax.set_xlabel("coarse dofs")
    ax.set_ylabel("relative L2 error")
    ax.grid(True, which="both", alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def iterations_figure(path, rows: list[dict]) -> None:
    """Average PCG iterations per step against J, per (smoother, ratio)."""
    fig, ax = plt.subplots(figsize=(4.8, 3.8))
    combos = sorted({(row["smoother"], row["ratio"]) for row in rows})
    for i, (smoother, ratio) in enumerate(combos):
        pts = [(row["J"], row["nbar"]) for row in rows
               if row["smoother"] == smoother and row["ratio"] == ratio
               and np.isfinite(row["nbar"])]
        if not pts:
            continue
        pts.sort()
        style = "o-" if smoother == "sgs" else "s--"
        ax.semilogy([p[0] for p in pts], [p[1] for p in pts], style,
                    color=_RATIO_COLORS[i % len(_RATIO_COLORS)],
                    label=f"{smoother}, ratio {ratio:.0e}")
    ax.set_xlabel("local basis functions J")
    ax.set_ylabel("avg PCG iterations per step")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def eigenvector_figure(path, fm: FineMesh, sub, vectors: np.ndarray,
                       n_show: int = 6) -> None:
    """Gallery of leading local eigenvectors on the subdomain."""
    n_show = min(n_show, vectors.shape[1])
    fig, axes = plt.subplots(1, n_show, figsize=(2.0 * n_show, 2.2))
    if n_show == 1:
        axes = [axes]
    for j, ax in enumerate(axes):
        full = np.zeros(fm.n_vertices)
        mask = sub.dofs < fm.n_vertices
        full[sub.dofs[mask]] = vectors[mask, j]
        ax.tripcolor(fm.vertices[:, 0], fm.vertices[:, 1], fm.triangles,
                     full, shading="gouraud", cmap="coolwarm")
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_title(f"mode {j + 1}", fontsize=8)
        ax.set_aspect("equal")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
