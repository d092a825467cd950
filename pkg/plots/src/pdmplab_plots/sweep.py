"""Rate-scaling sweep summary: sup density and blow-up slope versus the
scaling factor, from a directory of per-lambda output directories."""

from __future__ import annotations

import argparse
import os
import re
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import FileContractError, read_json_report

__all__ = ["collect_sweep", "plot_sweep", "main"]

_LAMBDA_DIR = re.compile(r"^lambda_([0-9.eE+-]+)$")


def collect_sweep(sweep_dir):
    """Scan lambda_* subdirectories; returns a list of per-lambda records
    sorted by the scaling factor."""
    entries = []
    try:
        names = sorted(os.listdir(sweep_dir))
    except OSError as exc:
        raise FileContractError(f"cannot list sweep directory: {exc}") from exc
    for name in names:
        m = _LAMBDA_DIR.match(name)
        sub = os.path.join(sweep_dir, name)
        if not m or not os.path.isdir(sub):
            continue
        summary_path = os.path.join(sub, "density_summary.json")
        if not os.path.exists(summary_path):
            raise FileContractError(f"{name}: missing density_summary.json")
        summary = read_json_report(summary_path)
        record = {
            "lambda": float(m.group(1)),
            "sup_density": max(summary["sup_density"]),
            "dimension": summary.get("dimension"),
            "slope": None,
        }
        blowup_path = os.path.join(sub, "blowup_report.json")
        if os.path.exists(blowup_path):
            record["slope"] = read_json_report(blowup_path).get("slope")
        entries.append(record)
    if not entries:
        raise FileContractError("no lambda_* directories found")
    dims = {e["dimension"] for e in entries}
    if len(dims) > 1:
        raise FileContractError(f"mixed dimensions in sweep: {sorted(dims)}")
    entries.sort(key=lambda e: e["lambda"])
    return entries


def plot_sweep(sweep_dir, out_path):
    """Returns the collected records (values drawn exactly as stored)."""
    entries = collect_sweep(sweep_dir)
    lams = [e["lambda"] for e in entries]
    sups = [e["sup_density"] for e in entries]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    ax1.plot(lams, sups, "o-", color="tab:blue")
    ax1.set_xscale("log")
    ax1.set_xlabel("rate scaling")
    ax1.set_ylabel("sup density over the grid")
    ax1.set_title("concentration vs switching speed")

    with_slope = [e for e in entries if e["slope"] is not None]
    if with_slope:
        ax2.plot([e["lambda"] for e in with_slope],
                 [e["slope"] for e in with_slope], "s-", color="tab:red")
    for e in entries:
        if e["slope"] is None:
            ax2.annotate("n/a", (e["lambda"], 0.0), ha="center",
                         color="tab:gray")
    ax2.axhline(0.0, color="black", lw=0.8)
    ax2.set_xscale("log")
    ax2.set_xlabel("rate scaling")
    ax2.set_ylabel("log-log mass-ratio slope at the center")
    ax2.set_title("blow-up slope vs switching speed")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return entries


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Sweep figure from per-lambda output directories."
    )
    parser.add_argument("sweep_dir", help="directory containing lambda_*/")
    parser.add_argument("out", help="output image (png/svg)")
    args = parser.parse_args(argv)
    try:
        entries = plot_sweep(args.sweep_dir, args.out)
    except FileContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for e in entries:
        print(f"lambda={e['lambda']:g} sup={e['sup_density']:g} "
              f"slope={e['slope']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
