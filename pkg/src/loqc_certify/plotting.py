"""Figure rendering for the scenario runners.

Figures are companions to the CSV output, not the primary record: every
number plotted here is also in the delimited files.  Rendering uses the Agg
backend so the runners work headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_WITNESS_COLORS = {
    "fourier": "#1f77b4",
    "cyclic": "#d62728",
    "hom": "#2ca02c",
    "twomode": "#9467bd",
}
_WITNESS_LABELS = {
    "fourier": "Fourier suppression",
    "cyclic": "cyclic fringe",
    "hom": "superposed pairwise",
    "twomode": "two-mode correlator",
}


def _style(ax, xlabel: str, ylabel: str, title: str) -> None:
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3, linewidth=0.5)


def plot_witness_compare(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    xs = [r["cyclic_overlap"] for r in rows]
    ax.plot(xs, [r["true_c3"] for r in rows], "k--", lw=1.2, label="true c3")
    for method in _WITNESS_COLORS:
        ax.plot(
            xs,
            [r[f"{method}_raw"] for r in rows],
            color=_WITNESS_COLORS[method],
            lw=1.3,
            label=_WITNESS_LABELS[method],
        )
    _style(ax, "cyclic overlap x12 x13 x23", "estimated c3", "witness comparison (n=3)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_perturbation_study(rows: list[dict], true_c: float, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for method in _WITNESS_COLORS:
        pts = [r for r in rows if r["witness"] == method]
        ax.scatter(
            [r["eps_perturb"] for r in pts],
            [r["raw"] for r in pts],
            s=4,
            alpha=0.25,
            color=_WITNESS_COLORS[method],
            label=_WITNESS_LABELS[method],
        )
    ax.axhline(true_c, color="k", ls="--", lw=1.0, label="true c3")
    _style(ax, "interferometer perturbation strength", "raw estimate", "robustness to device error")
    ax.legend(fontsize=8, markerscale=3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_partition_study(rows: list[dict], path: Path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.0))
    taus = [r["tau"] for r in rows]
    weight_keys = [k for k in rows[0] if k.startswith("weight_")]
    for key in weight_keys:
        ax1.plot(taus, [r[key] for r in rows], lw=1.3, label=key.removeprefix("weight_"))
    ax1.axhline(0.0, color="k", lw=0.7)
    _style(ax1, "time delay tau", "partition weight", "partition weights (n=3)")
    ax1.legend(fontsize=8)
    ax2.plot(taus, [r["true_c3"] for r in rows], "k--", lw=1.2, label="true c3")
    for method in _WITNESS_COLORS:
        ax2.plot(
            taus,
            [r[f"{method}_raw"] for r in rows],
            color=_WITNESS_COLORS[method],
            lw=1.3,
            label=_WITNESS_LABELS[method],
        )
    _style(ax2, "time delay tau", "estimated c3", "witness readings on the delay family")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_fidelity_demo(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    refs = [r["reference_fidelity"] for r in rows]
    ts = [r["threshold"] for r in rows]
    ax.scatter(refs, ts, s=14, color="#1f77b4", alpha=0.8)
    lo = min(refs + ts + [0.0])
    hi = max(refs + ts + [1.0])
    ax.plot([lo, hi], [lo, hi], "k--", lw=1.0, label="threshold = reference")
    _style(ax, "reference fidelity", "certified threshold", "certified vs reference fidelity")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
