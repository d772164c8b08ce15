"""Series output: plain (x, y) data files, plus optional PNG rendering.

Data files never need a graphics library.  :func:`render` imports
matplotlib lazily and is only reached through ``--plot``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np


def write_xy(path, x, y, header: Sequence[str] = ("x", "y")) -> Path:
    path = Path(path)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for a, b in zip(x, y):
            fh.write(f"{a!r} {b!r}\n")
    return path


def render(path, series: dict[str, tuple[np.ndarray, np.ndarray]], xlabel: str, ylabel: str, loglog: bool = True) -> Path:
    """Draw each named series on one axis and save a PNG."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # optional extra
        raise RuntimeError("plotting needs the 'plot' extra (matplotlib)") from exc
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if loglog:
            keep &= (x > 0) & (y > 0)
        ax.plot(x[keep], y[keep], label=label)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(path, bbox_inches="tight", dpi=120)
    plt.close(fig)
    return Path(path)
