"""Per-state density heatmap from a density CSV."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import FileContractError, read_density_csv

__all__ = ["plot_heatmap", "main"]


def plot_heatmap(csv_path, state: int, out_path):
    """Render one state's density layer; returns the drawn value range."""
    values, meta = read_density_csv(csv_path)
    if values.ndim != 2:
        raise FileContractError(
            f"heatmaps need a 2-d grid, got {values.ndim}-d"
        )
    if int(meta["state"]) != state:
        raise FileContractError(
            f"file holds state {meta['state']}, requested {state}"
        )
    if not np.any(values > 0):
        raise FileContractError("density grid is empty (all zeros)")
    box = meta["box_parsed"]
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    im = ax.imshow(
        values.T,
        origin="lower",
        extent=(box[0][0], box[0][1], box[1][0], box[1][1]),
        aspect="equal",
        cmap="magma",
    )
    fig.colorbar(im, ax=ax, label="stationary density")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"density, state {state}")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return float(values.min()), float(values.max())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Heatmap of one state's stationary-density CSV."
    )
    parser.add_argument("csv", help="density_state<i>.csv")
    parser.add_argument("state", type=int, help="1-based state label")
    parser.add_argument("out", help="output image (png/svg)")
    args = parser.parse_args(argv)
    try:
        plot_heatmap(args.csv, args.state, args.out)
    except FileContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
