"""Figure rendering for the report paths (PNG next to the .dat/CSV files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def save_line_plot(path, series, xlabel: str, ylabel: str, title: str = "",
                   logy: bool = False) -> Path:
    """series: iterable of (xs, ys, label); label None -> no legend entry."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    any_label = False
    for xs, ys, label in series:
        ax.plot(xs, ys, label=label)
        any_label = any_label or label is not None
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if any_label:
        ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
