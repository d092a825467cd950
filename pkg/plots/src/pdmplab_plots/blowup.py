"""Log-log mass-ratio plot from a blow-up report JSON.

The fitted line and the slope annotation reuse the report's own slope
and intercept; nothing is re-fitted here.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import FileContractError, read_json_report

__all__ = ["plot_blowup", "main"]


def plot_blowup(report_path, out_path):
    """Returns the annotation string (slope exactly as stored)."""
    rep = read_json_report(report_path)
    for key in ("radii", "mass_ratio", "verdict"):
        if key not in rep:
            raise FileContractError(f"blow-up report missing key '{key}'")
    radii = np.asarray(rep["radii"], dtype=float)
    ratios = np.asarray(rep["mass_ratio"], dtype=float)
    if len(radii) < 4:
        raise FileContractError("blow-up report needs at least 4 radii")

    slope = rep.get("slope")
    annotation = f"slope = {slope!r}" if slope is not None else "slope = n/a"

    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    pos = ratios > 0
    if np.any(pos):
        ax.loglog(radii[pos], ratios[pos], "o", color="tab:blue",
                  label="mass ratio m(r)")
    if np.any(~pos):
        ax.plot(radii[~pos], np.full((~pos).sum(), np.nan), "x")
    if slope is not None and rep.get("intercept") is not None and np.any(pos):
        line = np.exp(rep["intercept"]) * radii[pos] ** slope
        ax.loglog(radii[pos], line, "-", color="tab:red",
                  label=annotation)
    else:
        ax.plot([], [], " ", label=annotation)
    ax.set_xlabel("radius r")
    ax.set_ylabel("m(r) = mass(B_r x {i}) / Leb(B_r)")
    ax.set_title(f"local mass ratios, verdict: {rep['verdict']}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return annotation


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Log-log mass-ratio figure from a blow-up report."
    )
    parser.add_argument("report", help="blowup_report.json")
    parser.add_argument("out", help="output image (png/svg)")
    args = parser.parse_args(argv)
    try:
        annotation = plot_blowup(args.report, args.out)
    except FileContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(annotation)
    return 0


if __name__ == "__main__":
    sys.exit(main())
