"""Standalone SVG figures (matplotlib, Agg backend, deterministic output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import ConfigError  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "alexot"
matplotlib.rcParams["svg.fonttype"] = "none"


def emit_plot(series, kind: str, path, title: str = "", xlabel: str = "x",
              ylabel: str = "y") -> Path:
    """Write ``series`` ({label: (xs, ys)}) as an SVG scatter or line plot."""
    if kind not in ("scatter", "line"):
        raise ConfigError(f"unknown plot kind {kind!r}")
    if not series or all(len(xs) == 0 for xs, _ in series.values()):
        raise ConfigError("empty series")
    fig, ax = plt.subplots(figsize=(5, 4))
    try:
        for label, (xs, ys) in series.items():
            if len(xs) != len(ys):
                raise ConfigError(f"series {label!r}: x and y lengths differ")
            if kind == "scatter":
                ax.scatter(xs, ys, s=14, label=label)
            else:
                ax.plot(xs, ys, marker="o", label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        path = Path(path)
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path
