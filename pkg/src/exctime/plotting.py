"""SVG plots of experiment CSVs: ECDF overlays and log-log tails.

Output is a pure function of the input CSVs: figures carry no timestamps
and use a fixed hash salt, so repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
from pathlib import Path as FsPath

import matplotlib

matplotlib.use("svg")
matplotlib.rcParams["svg.hashsalt"] = "exctime"

import matplotlib.pyplot as plt
import numpy as np


def _read_columns(path: FsPath) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows) < 2:
        raise ValueError(f"{path}: empty CSV, nothing to plot")
    header = rows[0]
    data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    return header, data


def _save(fig, out: FsPath):
    fig.savefig(out, metadata={"Date": None})
    plt.close(fig)


def plot_csvs(csv_paths, out_dir) -> list[FsPath]:
    """For each CSV, write an ECDF overlay and a log-log survival plot.

    Every numeric column becomes one curve; legend order follows input
    order (files, then columns).
    """
    out_dir = FsPath(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path in map(FsPath, csv_paths):
        header, data = _read_columns(path)

        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for j, name in enumerate(header):
            x = np.sort(data[:, j])
            ax.step(x, np.arange(1, x.size + 1) / x.size, where="post", label=name)
        ax.set_xlabel("value")
        ax.set_ylabel("ECDF")
        ax.legend(loc="lower right", fontsize=8)
        target = out_dir / f"{path.stem}_ecdf.svg"
        _save(fig, target)
        written.append(target)

        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        any_curve = False
        for j, name in enumerate(header):
            x = np.sort(data[:, j])
            pos = x > 0
            if pos.sum() < 2:
                continue
            surv = 1.0 - np.arange(1, x.size + 1) / (x.size + 1.0)
            ax.loglog(x[pos], surv[pos], label=name)
            any_curve = True
        ax.set_xlabel("value")
        ax.set_ylabel("empirical survival")
        if any_curve:
            ax.legend(loc="lower left", fontsize=8)
        target = out_dir / f"{path.stem}_tail.svg"
        _save(fig, target)
        written.append(target)
    return written
