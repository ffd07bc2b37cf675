"""Quick-look SVG line plots; the CSV files remain the authoritative output."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "gendyn"  # stable element ids between runs


def line_plot(path, x, series: dict, xlabel: str = "", ylabel: str = "", logx: bool = False,
              title: str = "", styles: dict | None = None):
    styles = styles or {}
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, y in series.items():
        ax.plot(x, y, styles.get(name, "-"), label=name, lw=1.4, ms=3)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=10)
    if len(series) > 1:
        ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return str(path)
