import json

import numpy as np
import pytest

from pdmplab_plots import (
    FileContractError,
    collect_sweep,
    plot_blowup,
    plot_heatmap,
    plot_sweep,
)


def write_density_csv(path, values, state=1, box=((-1, 1), (-1, 1)),
                      drop_keys=()):
    lines = []
    meta = {
        "version": "0.1.0",
        "config_hash": "feedbeef",
        "seed": "1",
        "box": json.dumps([list(b) for b in box]),
        "cells": json.dumps(list(values.shape)),
        "state": str(state),
        "total_time": "100.0",
        "normalized": "true",
    }
    for k in drop_keys:
        meta.pop(k)
    for k, v in meta.items():
        lines.append(f"# {k}={v}")
    lines.append("cell_index_1,cell_index_2,value")
    for idx in np.ndindex(*values.shape):
        lines.append(f"{idx[0]},{idx[1]},{float(values[idx])!r}")
    path.write_text("\n".join(lines) + "\n")


def blowup_doc(slope=-0.5, verdict="diverging", n_radii=4):
    radii = [0.2, 0.1, 0.05, 0.025][:n_radii]
    intercept = 1.0
    ratios = [float(np.exp(intercept) * r**slope) for r in radii]
    return {
        "center": [0.0, 0.0], "state": 1, "radii": radii,
        "mass_ratio": ratios, "slope": slope, "intercept": intercept,
        "r_squared": 0.99, "verdict": verdict, "weighted_hits": 50000,
        "total_time": 1e5, "note": "",
        "meta": {"version": "0.1.0", "config_hash": "feedbeef", "seed": "1"},
    }


def summary_doc(lam, sup, dim=2):
    return {
        "lambda": lam, "dimension": dim, "cells": 8,
        "sup_density": [sup, sup / 2], "state_marginal": [0.57, 0.43],
        "integral": 1.0, "total_time": 1e4, "subsamples": 1000000,
        "meta": {"version": "0.1.0", "config_hash": "feedbeef", "seed": "1"},
    }


# ---------------------------------------------------------------------------


def test_heatmap_renders(tmp_path):
    vals = np.random.default_rng(0).random((16, 16)) + 0.1
    csv = tmp_path / "density_state1.csv"
    write_density_csv(csv, vals)
    out = tmp_path / "heat.png"
    lo, hi = plot_heatmap(csv, 1, out)
    assert out.exists() and out.stat().st_size > 1000
    assert hi == vals.max()


def test_heatmap_missing_metadata_names_key(tmp_path):
    vals = np.ones((4, 4))
    csv = tmp_path / "broken.csv"
    write_density_csv(csv, vals, drop_keys=("box",))
    with pytest.raises(FileContractError, match="'box'"):
        plot_heatmap(csv, 1, tmp_path / "x.png")


def test_heatmap_empty_grid(tmp_path):
    csv = tmp_path / "empty.csv"
    write_density_csv(csv, np.zeros((4, 4)))
    with pytest.raises(FileContractError, match="empty"):
        plot_heatmap(csv, 1, tmp_path / "x.png")


def test_heatmap_state_mismatch(tmp_path):
    csv = tmp_path / "density_state2.csv"
    write_density_csv(csv, np.ones((4, 4)), state=2)
    with pytest.raises(FileContractError, match="state"):
        plot_heatmap(csv, 1, tmp_path / "x.png")


def test_blowup_diverging_annotation_exact(tmp_path):
    doc = blowup_doc(slope=-0.4321)
    path = tmp_path / "report.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "blowup.png"
    annotation = plot_blowup(path, out)
    assert out.exists()
    # the annotation carries the JSON value exactly, not a re-fit
    assert annotation == f"slope = {json.loads(path.read_text())['slope']!r}"


def test_blowup_bounded_flat(tmp_path):
    doc = blowup_doc(slope=0.01, verdict="bounded")
    path = tmp_path / "report.json"
    path.write_text(json.dumps(doc))
    annotation = plot_blowup(path, tmp_path / "b.png")
    assert "0.01" in annotation


def test_blowup_null_slope(tmp_path):
    doc = blowup_doc(verdict="bounded")
    doc["slope"] = None
    doc["intercept"] = None
    doc["mass_ratio"] = [0.0, 0.0, 0.0, 0.0]
    path = tmp_path / "report.json"
    path.write_text(json.dumps(doc))
    assert plot_blowup(path, tmp_path / "b.png") == "slope = n/a"


def test_blowup_needs_four_radii(tmp_path):
    doc = blowup_doc(n_radii=3)
    path = tmp_path / "report.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(FileContractError, match="4 radii"):
        plot_blowup(path, tmp_path / "b.png")


def _make_sweep(tmp_path, lams=(1.0, 100.0), dims=None, with_blowup=True):
    sweep = tmp_path / "sweep"
    for k, lam in enumerate(lams):
        sub = sweep / f"lambda_{lam:g}"
        sub.mkdir(parents=True)
        dim = 2 if dims is None else dims[k]
        (sub / "density_summary.json").write_text(
            json.dumps(summary_doc(lam, sup=10.0 / lam, dim=dim))
        )
        if with_blowup:
            (sub / "blowup_report.json").write_text(
                json.dumps(blowup_doc(slope=-0.5 if lam < 10 else -0.01))
            )
    return sweep


def test_sweep_two_lambdas(tmp_path):
    sweep = _make_sweep(tmp_path)
    out = tmp_path / "sweep.png"
    entries = plot_sweep(sweep, out)
    assert out.exists()
    assert [e["lambda"] for e in entries] == [1.0, 100.0]
    assert entries[0]["slope"] == -0.5
    assert entries[1]["slope"] == -0.01
    # slope heads toward 0 as the rates speed up
    assert abs(entries[1]["slope"]) < abs(entries[0]["slope"])


def test_sweep_single_lambda(tmp_path):
    sweep = _make_sweep(tmp_path, lams=(5.0,))
    entries = plot_sweep(sweep, tmp_path / "one.png")
    assert len(entries) == 1


def test_sweep_mixed_dimensions(tmp_path):
    sweep = _make_sweep(tmp_path, dims=(2, 3))
    with pytest.raises(FileContractError, match="mixed dimensions"):
        collect_sweep(sweep)


def test_sweep_empty_dir(tmp_path):
    (tmp_path / "sweep").mkdir()
    with pytest.raises(FileContractError, match="no lambda"):
        collect_sweep(tmp_path / "sweep")


def test_cli_entry_points(tmp_path):
    from pdmplab_plots.blowup import main as blowup_main
    from pdmplab_plots.heatmap import main as heatmap_main
    from pdmplab_plots.sweep import main as sweep_main

    vals = np.random.default_rng(1).random((8, 8)) + 0.2
    csv = tmp_path / "density_state1.csv"
    write_density_csv(csv, vals)
    assert heatmap_main([str(csv), "1", str(tmp_path / "h.png")]) == 0
    assert heatmap_main([str(csv), "2", str(tmp_path / "h2.png")]) == 1

    rep = tmp_path / "report.json"
    rep.write_text(json.dumps(blowup_doc()))
    assert blowup_main([str(rep), str(tmp_path / "b.png")]) == 0

    sweep = _make_sweep(tmp_path)
    assert sweep_main([str(sweep), str(tmp_path / "s.png")]) == 0
