"""Matplotlib renderers for the report path; every figure lands next to its CSV."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_sweep_figure",
    "save_history_figure",
    "save_confusion_figure",
    "save_comparison_figure",
]

_DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_sweep_figure(rows, path, title="Interpretation-width sweep"):
    """Bar chart of cross-validated accuracy per head width."""
    widths = [str(w) for w, _, _ in rows]
    accs = [100.0 * acc for _, acc, _ in rows]
    errs = [100.0 * std for _, _, std in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(widths, accs, yerr=errs, capsize=3, color="#4878b0")
    ax.set_xlabel("Interpretation neurons")
    ax.set_ylabel("Classification accuracy (%)")
    ax.set_ylim(0, 100)
    ax.set_title(title)
    ax.grid(axis="y", linestyle="--", alpha=0.4)
    _finish(fig, path)


def save_history_figure(history, path):
    """Best/mean fitness per generation, one line pair per search run."""
    history = list(history)
    runs = sorted({row[0] for row in history})
    fig, ax = plt.subplots(figsize=(7, 4))
    cmap = plt.get_cmap("tab10")
    for run in runs:
        rows = [r for r in history if r[0] == run]
        gens = [r[1] for r in rows]
        ax.plot(gens, [100 * r[2] for r in rows], color=cmap(run % 10), label=f"run {run} best")
        ax.plot(
            gens,
            [100 * r[3] for r in rows],
            color=cmap(run % 10),
            linestyle="--",
            alpha=0.5,
        )
    ax.set_xlabel("Generation")
    ax.set_ylabel("Fitness (accuracy %)")
    ax.set_title("Topology search (solid: best, dashed: population mean)")
    ax.legend(fontsize=8)
    ax.grid(linestyle="--", alpha=0.4)
    _finish(fig, path)


def save_confusion_figure(confusion, class_names, path, title="Confusion matrix"):
    confusion = np.asarray(confusion)
    names = list(class_names) or [str(i) for i in range(len(confusion))]
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(confusion, cmap="Blues")
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right")
    ax.set_yticks(range(len(names)), names)
    ax.set_xlabel("Predicted")
    ax.set_ylabel("True")
    ax.set_title(title)
    threshold = confusion.max() / 2 if confusion.max() else 0.5
    for i in range(len(names)):
        for j in range(len(names)):
            ax.text(
                j,
                i,
                str(int(confusion[i, j])),
                ha="center",
                va="center",
                color="white" if confusion[i, j] > threshold else "black",
                fontsize=8,
            )
    fig.colorbar(im, ax=ax, fraction=0.046)
    _finish(fig, path)


def save_comparison_figure(accuracies, path, title="Model comparison"):
    """Accuracy bar per model name (dict name -> accuracy in [0, 1])."""
    names = list(accuracies)
    values = [100.0 * accuracies[n] for n in names]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(names, values, color="#4878b0")
    ax.set_ylabel("Classification accuracy (%)")
    ax.set_ylim(0, 100)
    ax.set_title(title)
    ax.grid(axis="y", linestyle="--", alpha=0.4)
    for i, v in enumerate(values):
        ax.text(i, v + 1, f"{v:.1f}", ha="center", fontsize=8)
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    _finish(fig, path)
