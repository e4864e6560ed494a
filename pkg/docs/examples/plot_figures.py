"""Plot the CSV files written by ``mechsqueeze fig2`` and ``mechsqueeze fig3``.

Usage: python3 plot_figures.py FIG2_DIR FIG3_DIR OUT_DIR   (needs matplotlib)
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mechsqueeze.sweep import read_csv


def plot_fig2(src: Path, out: Path) -> None:
    fig, (ax_v, ax_d) = plt.subplots(1, 2, figsize=(10, 4))
    _, cols, ref = read_csv(src / "fig2_reference.csv")
    cp = ref[:, cols.index("chi_prime")]
    for name, style in (("no_measurement", "k-"), ("analytic", "k--")):
        ax_v.plot(cp, ref[:, cols.index(f"v_ratio_{name}")], style, label=name)
        ax_d.plot(cp, ref[:, cols.index(f"delta_offset_{name}")], style)
    for path in sorted(src.glob("fig2_N*.csv"), key=lambda p: float(p.stem[6:])):
        _, cols, data = read_csv(path)
        x = data[:, cols.index("chi_prime")]
        ax_v.plot(x, data[:, cols.index("v_ratio")], ":", label=path.stem[5:])
        ax_d.plot(x, data[:, cols.index("delta_offset_prime")], ":")
    for ax in (ax_v, ax_d):
        ax.set_xscale("log")
        ax.set_xlabel("chi'")
    ax_v.set_ylabel("V_X,opt / V0")
    ax_d.set_ylabel("delta'_opt - chi'")
    ax_v.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out / "fig2.png", dpi=150)


def plot_fig3(src: Path, out: Path) -> None:
    fig, axes = plt.subplots(2, 2, figsize=(9, 8))
    for ax, panel in zip(axes.flat, "abcd"):
        path = src / f"fig3{panel}.csv"
        if not path.exists():
            ax.set_visible(False)
            continue
        _, cols, data = read_csv(path)
        x_name, y_name = cols[0], cols[1]
        xs, ys = np.unique(data[:, 0]), np.unique(data[:, 1])
        db = data[:, cols.index("v_db")].reshape(len(xs), len(ys)).T
        mesh = ax.pcolormesh(xs, ys, db, shading="auto", cmap="viridis")
        ax.contour(xs, ys, db, levels=[0.0, 3.0103], colors=["w", "r"])
        ax.set_xscale("log")
        if y_name == "n_thermal":
            ax.set_yscale("log")
        ax.set_xlabel(x_name)
        ax.set_ylabel(y_name)
        ax.set_title(f"({panel})")
        fig.colorbar(mesh, ax=ax, label="squeezing dB, positive = below zero-point")
    fig.tight_layout()
    fig.savefig(out / "fig3.png", dpi=150)


if __name__ == "__main__":
    fig2_dir, fig3_dir, out_dir = map(Path, sys.argv[1:4])
    out_dir.mkdir(parents=True, exist_ok=True)
    plot_fig2(fig2_dir, out_dir)
    plot_fig3(fig3_dir, out_dir)
