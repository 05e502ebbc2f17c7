"""Static SVG emission for study summaries. No display loop."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

matplotlib.rcParams["svg.hashsalt"] = "flowbench"

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def plot_correlation_traces(
    path: str | Path,
    curves: list[tuple[str, object, object]],
    title: str = "",
) -> None:
    """Per-step consecutive cosines: noise (top) and edit velocity (bottom)."""
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for label, noise_corr, velocity_corr in curves:
        axes[0].plot(noise_corr, alpha=0.8, label=label)
        axes[1].plot(velocity_corr, alpha=0.8, label=label)
    axes[0].set_ylabel("noise cosine (consecutive)")
    axes[1].set_ylabel("velocity cosine (consecutive)")
    axes[1].set_xlabel("executed step")
    axes[0].set_title(title)
    axes[0].legend(fontsize=8, loc="lower right")
    for ax in axes:
        ax.set_ylim(-1.05, 1.05)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_metric_distributions(
    path: str | Path, values: dict[str, list[float]], title: str = ""
) -> None:
    """One histogram panel per metric/arm."""
    populated = {k: v for k, v in values.items() if len(v)}
    n = max(len(populated), 1)
    fig, axes = plt.subplots(1, n, figsize=(4 * n, 3.2))
    if n == 1:
        axes = [axes]
    for ax, (name, vals) in zip(axes, populated.items() or {"empty": []}.items()):
        ax.hist(vals, bins=min(20, max(5, len(vals) // 3)), alpha=0.8)
        ax.set_title(name, fontsize=9)
        ax.grid(alpha=0.3)
    fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
