"""Optional figure rendering; matplotlib is imported only when plots are requested."""

from __future__ import annotations

import csv
from pathlib import Path


def available() -> bool:
    try:
        import matplotlib  # noqa: F401
    except ImportError:
        return False
    return True


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def plot_columns(csv_path: Path, png_path: Path, x_col: int = 0, title: str = "") -> Path:
    """Line plot of every numeric column against ``x_col``."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, rows = _read(csv_path)
    x = [float(r[x_col]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for j, name in enumerate(header):
        if j == x_col:
            continue
        try:
            y = [float(r[j]) for r in rows]
        except ValueError:
            continue
        ax.plot(x, y, lw=1.2, label=name)
    ax.set_xlabel(header[x_col])
    if len(header) <= 8:
        ax.legend(fontsize=7)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path


def plot_grouped(csv_path: Path, png_path: Path, x: str, y: str, group: str,
                 logx: bool = False, logy: bool = False, title: str = "") -> Path:
    """One curve per distinct value of column ``group``."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, rows = _read(csv_path)
    ix, iy, ig = header.index(x), header.index(y), header.index(group)
    curves = {}
    for r in rows:
        curves.setdefault(r[ig], ([], []))
        curves[r[ig]][0].append(float(r[ix]))
        curves[r[ig]][1].append(float(r[iy]))
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, (xs, ys) in curves.items():
        ax.plot(xs, ys, lw=1.2, label=name)
    ax.set_xscale("log" if logx else "linear")
    ax.set_yscale("log" if logy else "linear")
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    if len(curves) <= 12:
        ax.legend(fontsize=7)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path


def plot_map(csv_path: Path, png_path: Path, title: str = "") -> Path:
    """Colour map from a long-format ``(x, y, value)`` CSV on a regular grid."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    header, rows = _read(csv_path)
    a = np.array(rows, dtype=float)
    xs = np.unique(a[:, 0])
    ys = np.unique(a[:, 1])
    Z = a[:, 2].reshape(xs.size, ys.size)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.pcolormesh(xs, ys, Z.T, shading="auto", cmap="Greys")
    ax.set_xlabel(header[0])
    ax.set_ylabel(header[1])
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path
