"""Matplotlib figure rendering for the CLI report path. All figures are
written to files; no interactive backends."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .clustering import InertiaCurve, PCAProjection


def plot_inertia_curve(curve: InertiaCurve, path: str | Path, chosen_k: int | None = None) -> None:
    ks = [k for k, _ in curve.points]
    inertias = [v for _, v in curve.points]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(ks, inertias, marker="o")
    if chosen_k is not None:
        ax.axvline(chosen_k, color="tab:red", linestyle="--", label=f"k = {chosen_k}")
        ax.legend()
    ax.set_xlabel("number of clusters k")
    ax.set_ylabel("inertia")
    ax.set_title("Elbow curve")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_pca_scatter(
    projection: PCAProjection,
    assignment: dict[str, int],
    path: str | Path,
) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    clusters = sorted(set(assignment.values()))
    for cluster in clusters:
        xs = [projection.coordinates[i][0] for i in assignment if assignment[i] == cluster]
        ys = [projection.coordinates[i][1] for i in assignment if assignment[i] == cluster]
        ax.scatter(xs, ys, s=18, label=f"cluster {cluster}")
    r1, r2 = projection.variance_ratios
    ax.set_xlabel(f"PC1 ({r1:.1%} var)")
    ax.set_ylabel(f"PC2 ({r2:.1%} var)")
    ax.set_title("Question embeddings (PCA)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ablation(accuracies: dict[str, float], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    names = list(accuracies)
    values = [accuracies[n] for n in names]
    ax.bar(names, values, color="tab:blue")
    ax.set_ylim(0, 1)
    ax.set_ylabel("accuracy")
    ax.set_title("Prompt-mode comparison")
    for i, v in enumerate(values):
        ax.text(i, v + 0.01, f"{v:.3f}", ha="center", fontsize=8)
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
