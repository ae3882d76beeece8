"""CSV, SVG and JSON emission for experiment artifacts.

CSV files carry a header row, comma separators, LF line endings and
full double precision (17 significant digits), so re-parsing reproduces
the in-memory doubles bitwise.  SVG plots are rendered with matplotlib:
line plots for error curves and decomposition profiles, color-mapped
heat plots (with printed min/max) for solution snapshots.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def emit_csv(header, rows, path) -> Path:
    """Write rows (iterable of tuples) under a header line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with path.open("w", newline="\n") as fh:
            fh.write(",".join(str(h) for h in header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as err:
        raise OSError(f"failed writing CSV {path}: {err}") from err
    return path


def emit_matrix_csv(grid: np.ndarray, path, coords=None) -> Path:
    """Grid snapshot as CSV: one row per x2 line, first column is x2,
    header names the x1 coordinates."""
    grid = np.asarray(grid)
    n_rows, n_cols = grid.shape
    if coords is None:
        coords = np.linspace(0.0, 1.0, n_cols)
    header = ["x2"] + [_fmt(c) for c in coords]
    rows = ([coords[i], *grid[i]] for i in range(n_rows))
    return emit_csv(header, rows, path)


def emit_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
    return path


def emit_line_svg(x, curves: dict[str, np.ndarray], path, title="",
                  xlabel="t", ylabel="") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, y in curves.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if curves:
        ax.legend()
    ax.grid(True, linewidth=0.4, alpha=0.6)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def emit_heat_svg(grid: np.ndarray, path, title="") -> Path:
    """Color-mapped snapshot on [0,1]^2 with a linear scale; the data
    range is printed alongside the title."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = np.asarray(grid)
    vmin, vmax = float(grid.min()), float(grid.max())
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    im = ax.imshow(grid, origin="lower", extent=(0.0, 1.0, 0.0, 1.0),
                   cmap="RdBu_r", vmin=vmin, vmax=vmax)
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"{title}\nmin={vmin:.6g}  max={vmax:.6g}")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def dump_trajectory(trajectory, path) -> Path:
    """Trajectory matrix (rows = time levels, columns = interior
    unknowns); .npy suffix selects binary, anything else CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".npy":
        np.save(path, trajectory.states)
    else:
        np.savetxt(path, trajectory.states, fmt="%.17g", delimiter=",",
                   newline="\n")
    return path
