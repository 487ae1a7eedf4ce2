#!/usr/bin/env python3
"""Quick-look plots of the CSVs written by reproduce_figures.py (needs matplotlib)."""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _value(text):
    try:
        return float(text)
    except ValueError:
        return text


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [_value(r[k]) for r in rows] for k in rows[0]}


def plot_fig2(folder, ax):
    for s2 in (1, 2, 3):
        pnr = load(folder / f"fig2_pnr_sigma2_{s2}.csv")
        hd = load(folder / f"fig2_hd_sigma2_{s2}.csv")
        line, = ax.plot(pnr["beta"], pnr["mi_bits"], label=f"PNR, $\\Sigma^2$={s2}")
        ax.plot(hd["beta"], hd["mi_bits"], "--", color=line.get_color())
    ax.set_xlabel(r"$\beta$")
    ax.set_ylabel("I(A;B) [bits]")


def plot_fig3(folder, ax):
    d = load(folder / "fig3_threshold.csv")
    ax.plot(d["sigma2"], d["beta_th"], "o-")
    ax.set_xlabel(r"$\Sigma^2$")
    ax.set_ylabel(r"$\beta_{th}$")


def plot_rates(folder, fig, ax):
    for scheme, color in (("hd", "tab:green"), ("pnr", "tab:red")):
        for direction, style in (("dr", "-"), ("rr", "--")):
            d = load(folder / f"fig{fig}_{scheme}_{direction}.csv")
            ax.plot(d["eta"], d["delta_i_bits"], style, color=color, label=f"{scheme.upper()} {direction.upper()}")
    ax.axhline(0, color="k", lw=0.5)
    ax.set_ylim(bottom=-0.05)
    ax.set_xlabel(r"$\eta$")
    ax.set_ylabel(r"$\Delta I$ [bits]")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("results", type=Path, nargs="?", default=Path("results"))
    ap.add_argument("--out", type=Path, default=Path("results/figures.png"))
    args = ap.parse_args()
    fig, axes = plt.subplots(2, 2, figsize=(10, 8))
    plot_fig2(args.results / "figure2", axes[0, 0])
    plot_fig3(args.results / "figure3", axes[0, 1])
    plot_rates(args.results / "figure4", 4, axes[1, 0])
    plot_rates(args.results / "figure5", 5, axes[1, 1])
    for ax, title in zip(axes.flat, ("mutual information", "LO threshold", "individual", "collective")):
        ax.set_title(title)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=7)
    fig.tight_layout()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
