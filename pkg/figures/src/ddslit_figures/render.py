"""Render paper-style panels from ddslit artifacts.

All randomness (scatter subsampling) flows from the spec's seed; images
carry no timestamps, so identical inputs give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .spec import (COLOR_SEMICLASSICAL, COLOR_WITH_COLLAPSE,
                   COLOR_WITHOUT_COLLAPSE, FigureSpec, manifest_footer,
                   read_events, read_survival, read_trajectories)

_SAVEFIG = dict(dpi=150, metadata={"Software": None})


def render(spec: FigureSpec) -> Path:
    """Draw the spec into its output image; returns the written path."""
    spec.validate()
    if spec.kind == "joint_grid":
        fig = _joint_grid(spec)
    elif spec.kind == "semi_compare":
        fig = _semi_compare(spec)
    elif spec.kind == "survival":
        fig = _survival(spec)
    else:
        fig = _trajectories(spec)
    fig.text(0.99, 0.005, manifest_footer(spec), ha="right", va="bottom",
             fontsize=6, color="0.4")
    out = spec.base_dir / spec.out
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, **_SAVEFIG)
    plt.close(fig)
    return out


def _kept_pairs(path: Path):
    ev = read_events(path)
    keep = (ev["lost"] == "") & np.isfinite(ev["t_left"]) & np.isfinite(ev["t_right"])
    return ev["t_left"][keep], ev["t_right"][keep], ev


def subsample(n_total: int, n_keep: int, seed: int) -> np.ndarray:
    """Seeded choice of exactly min(n_keep, n_total) scatter indices."""
    if n_total <= n_keep:
        return np.arange(n_total)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_total, size=n_keep, replace=False))


def _scatter_with_marginals(ax, ax_top, ax_right, tl, tr, color, spec,
                            label=None):
    idx = subsample(len(tl), spec.scatter_points, spec.seed)
    ax.scatter(tl[idx], tr[idx], s=0.7, c=color, alpha=0.45, linewidths=0,
               label=label, rasterized=True)
    if ax_top is not None:
        ax_top.hist(tl, bins=120, histtype="step", color=color, density=True)
    if ax_right is not None:
        ax_right.hist(tr, bins=120, histtype="step", color=color,
                      density=True, orientation="horizontal")


def _panel_axes(fig, outer):
    gs = outer.subgridspec(2, 2, width_ratios=(4, 1.2), height_ratios=(1.2, 4),
                           hspace=0.04, wspace=0.04)
    ax = fig.add_subplot(gs[1, 0])
    ax_top = fig.add_subplot(gs[0, 0], sharex=ax)
    ax_right = fig.add_subplot(gs[1, 1], sharey=ax)
    ax_top.axis("off")
    ax_right.axis("off")
    return ax, ax_top, ax_right


def _joint_grid(spec: FigureSpec):
    n = len(spec.panels)
    fig = plt.figure(figsize=(3.4 * n, 4.0))
    outer = fig.add_gridspec(1, n, wspace=0.32, left=0.07, right=0.98,
                             top=0.92, bottom=0.13)
    for i, panel in enumerate(spec.panels):
        ax, ax_top, ax_right = _panel_axes(fig, outer[0, i])
        if panel.without_collapse:
            tl, tr, _ = _kept_pairs(spec.base_dir / panel.without_collapse)
            _scatter_with_marginals(ax, ax_top, ax_right, tl, tr,
                                    COLOR_WITHOUT_COLLAPSE, spec)
        if panel.with_collapse:
            tl, tr, _ = _kept_pairs(spec.base_dir / panel.with_collapse)
            _scatter_with_marginals(ax, ax_top, ax_right, tl, tr,
                                    COLOR_WITH_COLLAPSE, spec)
        if panel.t_left_range:
            ax.set_xlim(*panel.t_left_range)
        if panel.t_right_range:
            ax.set_ylim(*panel.t_right_range)
        ax.set_xlabel("$t_L$ (ms)")
        if i == 0:
            ax.set_ylabel("$t_R$ (ms)")
        ax_top.set_title(panel.title, fontsize=10)
    return fig


def _semi_compare(spec: FigureSpec):
    n = len(spec.panels)
    fig = plt.figure(figsize=(6.4 * n, 3.8))
    outer = fig.add_gridspec(1, 2 * n, wspace=0.3, left=0.06, right=0.98,
                             top=0.9, bottom=0.14)
    for i, panel in enumerate(spec.panels):
        for j, (src, color) in enumerate(
            (("with_collapse", COLOR_WITH_COLLAPSE),
             ("semiclassical", COLOR_SEMICLASSICAL))):
            path = getattr(panel, src)
            ax = fig.add_subplot(outer[0, 2 * i + j])
            if path:
                tl, tr, _ = _kept_pairs(spec.base_dir / path)
                idx = subsample(len(tl), spec.scatter_points, spec.seed)
                ax.scatter(tl[idx], tr[idx], s=0.7, c=color, alpha=0.45,
                           linewidths=0, rasterized=True)
            if panel.t_left_range:
                ax.set_xlim(*panel.t_left_range)
            if panel.t_right_range:
                ax.set_ylim(*panel.t_right_range)
            ax.set_xlabel("$t_L$ (ms)")
            if 2 * i + j == 0:
                ax.set_ylabel("$t_R$ (ms)")
            kind = "Bohmian" if src == "with_collapse" else "semiclassical"
            ax.set_title(f"{panel.title} {kind}".strip(), fontsize=9)
    return fig


def _survival(spec: FigureSpec):
    data = read_survival(spec.base_dir / spec.survival)
    fig, ax = plt.subplots(figsize=(5.2, 3.6), constrained_layout=True)
    for ratio in sorted(set(np.round(data["kappa"], 9))):
        sel = np.isclose(data["kappa"], ratio)
        ax.plot(data["t_s"][sel] * 1e3, data["survival"][sel],
                label=rf"$\kappa = {ratio:g}\,\kappa_0$")
    ax.set_xlabel("t (ms)")
    ax.set_ylabel("survival fraction")
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8)
    return fig


def _trajectories(spec: FigureSpec):
    trajs = read_trajectories(spec.base_dir / spec.trajectory_file)
    fig, ax = plt.subplots(figsize=(5.6, 3.8), constrained_layout=True)
    color = (COLOR_WITH_COLLAPSE if any(p.with_collapse for p in spec.panels)
             else COLOR_WITHOUT_COLLAPSE) if spec.panels else COLOR_WITH_COLLAPSE
    for knots in trajs.values():
        ax.plot(knots[:, 0], knots[:, 2], color=color, lw=0.5, alpha=0.6)
        ax.plot(knots[:, 0], knots[:, 4], color=color, lw=0.5, alpha=0.6)
    ax.set_xlabel("t (ms)")
    ax.set_ylabel("y (um)")
    return fig
