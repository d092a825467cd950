"""Command-line entry point.

Subcommands:

* ``simulate``   one trajectory, dense CSV output
* ``density``    stationary-density histograms (optionally a lambda sweep)
* ``hormander``  bracket-rank reports at chosen points or on a grid
* ``singularity`` candidate-set verdict, blow-up diagnostic, exponent curve
* ``example-rotcontract`` the built-in rotate/contract system end to end

Exit codes: 0 success, 2 configuration problem, 3 runtime failure
(box exit, numerics, insufficient samples).  All outputs are
deterministic given (config, seed, flags) no matter the worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .averaged import attractor_estimate, q0_membership
from .config import ConfigError, ExperimentConfig, config_hash, load_config, SEED_ENV_VAR
from .density import (
    InsufficientSamplesError,
    blowup_report_from_masses,
    ball_volume,
    smoothness_probe,
    write_density_csv,
    DensityGrid,
)
from .exprparse import ExprDomainError
from .flow import FlowError
from .liealg import hormander_rank, submersion_search
from .pdmp import (
    BallMassSink,
    Box,
    GridSink,
    PdmpConfig,
    SimulationError,
    StateOccupationSink,
    run_batch,
    simulate,
)
from .rotcontract import make_config
from .singularity import GammaCandidate, blowup_exponent, full_verdict
from .switching import RateMatrixError


def _meta_lines(meta: dict) -> str:
    return "".join(f"# {k}={v}\n" for k, v in meta.items())


def _write_json(path, payload, meta):
    payload = dict(payload)
    payload["meta"] = {k: str(v) for k, v in meta.items()}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _base_meta(cfg_hash, seed):
    return {"version": __version__, "config_hash": cfg_hash, "seed": seed}


# ---------------------------------------------------------------------------
# pipelines shared by subcommands


def _density_pipeline(pdmp: PdmpConfig, out_dir, cfg_hash, cells,
                      trajectories, workers, ball_spec=None, zoom_spec=None):
    """One batch run feeding the whole-box grid, state occupation, and
    optionally ball masses and zoomed probe grids; writes the density
    CSVs and summary JSON into out_dir.

    Returns (grid, zoom_grids, occ, summary, report)."""
    sinks = [GridSink(pdmp.box, int(cells)), StateOccupationSink()]
    if ball_spec is not None:
        center, radii, state = ball_spec
        sinks.append(BallMassSink(center, radii, state))
    if zoom_spec is not None:
        zoom_box, zoom_cells = zoom_spec
        zoom_finest = max(zoom_cells)
        sinks.append(GridSink(zoom_box, zoom_finest, clip=False))
    merged, _ = run_batch(pdmp, trajectories, workers, sinks=tuple(sinks),
                          need_summaries=False)
    raw_grid, occ = merged[0], merged[1]
    ball = merged[2] if ball_spec is not None else None

    fine = DensityGrid(values=raw_grid, box=pdmp.box, cells=int(cells),
                       total_time=occ["total_time"], normalized=False).normalize()

    zoom_grids = {}
    if zoom_spec is not None:
        zoom_box, zoom_cells = zoom_spec
        zraw = merged[-1]
        zfine = DensityGrid(
            values=zraw / (occ["total_time"]
                           * (zoom_box.volume / zoom_finest**zoom_box.dim)),
            box=zoom_box, cells=zoom_finest,
            total_time=occ["total_time"], normalized=True,
        )
        for c in sorted(zoom_cells):
            if zoom_finest % c:
                raise ConfigError("probe cell counts must be nested")
            zoom_grids[c] = zfine if c == zoom_finest \
                else zfine.coarsen(zoom_finest // c)

    os.makedirs(out_dir, exist_ok=True)
    meta = _base_meta(cfg_hash, pdmp.seed)
    for state_idx in range(pdmp.Q.n):
        write_density_csv(
            os.path.join(out_dir, f"density_state{state_idx + 1}.csv"),
            fine, state_idx, meta=dict(meta),
        )
    summary = {
        "lambda": None,  # filled by caller when known
        "dimension": fine.dim,
        "cells": int(cells),
        "sup_density": [float(fine.values[i].max()) for i in range(pdmp.Q.n)],
        "state_marginal": [float(v) for v in fine.state_marginal()],
        "integral": fine.integral(),
        "total_time": occ["total_time"],
        "subsamples": occ["count"],
    }
    report = None
    if ball_spec is not None:
        center, radii, state = ball_spec
        bench = (occ["count"] * ball_volume(max(radii), pdmp.box.dim)
                 / (pdmp.box.volume * pdmp.Q.n))
        report = blowup_report_from_masses(
            ball["mass"], ball["hits"], occ["total_time"], center, state,
            radii, d=pdmp.box.dim, benchmark_hits=bench,
        )
    return fine, zoom_grids, occ, summary, report


def _write_summary(out_dir, summary, lam, cfg_hash, seed):
    summary = dict(summary)
    summary["lambda"] = lam
    _write_json(os.path.join(out_dir, "density_summary.json"), summary,
                _base_meta(cfg_hash, seed))


def _singularity_outputs(pdmp, gamma, out_dir, cfg_hash, workers, report):
    """Verdict JSON, blow-up JSON, exponent CSV for a gamma block."""
    cand = GammaCandidate(
        points=gamma["points"], state=gamma["state"],
        neighborhood_radius=float(gamma.get("neighborhood_radius", 0.2)),
    )
    verdict = full_verdict(
        cand, pdmp.fields, pdmp.Q, pdmp.box,
        depth=int(gamma.get("depth", 1)),
        accessibility_trials=int(gamma.get("accessibility_trials", 200)),
        accessibility_horizon=float(gamma.get("accessibility_horizon", 50.0)),
        backward_t_max=float(gamma.get("backward_t_max", 5.0)),
        backward_tol=float(gamma.get("backward_tol", 1e-3)),
        step=pdmp.step, seed=pdmp.seed, workers=workers,
    )
    meta = _base_meta(cfg_hash, pdmp.seed)
    _write_json(os.path.join(out_dir, "singularity_verdict.json"),
                verdict.to_dict(), meta)
    if report is not None:
        _write_json(os.path.join(out_dir, "blowup_report.json"),
                    report.to_dict(), meta)
    s_max = float(gamma.get("exponent_s_max", 5.0))
    samples = blowup_exponent(cand.points[0], pdmp.fields[cand.state], pdmp.Q,
                              cand.state, s_max, step=pdmp.step)
    with open(os.path.join(out_dir, "blowup_exponent.csv"), "w") as fh:
        fh.write(_meta_lines(meta))
        fh.write("s,exponent\n")
        for s, val in samples:
            fh.write(f"{float(s)!r},{float(val)!r}\n")
    return verdict


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    exp = load_config(args.config)
    pdmp = exp.pdmp
    sample_dt = args.sample_dt or max(pdmp.step, pdmp.horizon / 1000.0)
    traj = simulate(pdmp, sample_dt=sample_dt)
    meta = _base_meta(exp.hash, pdmp.seed)
    with open(args.out, "w") as fh:
        fh.write(_meta_lines(meta))
        d = pdmp.box.dim
        fh.write("t,state," + ",".join(f"x{j + 1}" for j in range(d)) + "\n")
        for k in range(len(traj.sample_times)):
            coords = ",".join(repr(float(v)) for v in traj.sample_positions[k])
            fh.write(f"{float(traj.sample_times[k])!r},{traj.sample_states[k] + 1},{coords}\n")
    if traj.box_exit:
        print(f"box exit at t={traj.exit_time}", file=sys.stderr)
        return 3
    return 0


def _density_args(exp: ExperimentConfig, args):
    block = exp.density_block
    cells = args.cells or int(block.get("cells", 64))
    trajectories = args.trajectories or int(block.get("trajectories", 100))
    return cells, trajectories


def cmd_density(args) -> int:
    exp = load_config(args.config)
    cells, trajectories = _density_args(exp, args)
    lams = [float(v) for v in args.lambda_list.split(",")] if args.lambda_list \
        else (list(exp.lambda_list) or [exp.lam])
    multi = len(lams) > 1
    for lam in lams:
        sub = exp.scaled(lam)
        out_dir = os.path.join(args.out, f"lambda_{lam:g}") if multi else args.out
        _, _, _, summary, _ = _density_pipeline(
            sub.pdmp, out_dir, exp.hash, cells, trajectories, args.workers,
        )
        _write_summary(out_dir, summary, lam, exp.hash, sub.pdmp.seed)
    return 0


def cmd_hormander(args) -> int:
    exp = load_config(args.config)
    pdmp = exp.pdmp
    box = pdmp.box
    if args.points:
        pts = np.loadtxt(args.points, delimiter=",", ndmin=2)
    elif args.grid:
        axes = [box.lo[j] + (np.arange(args.grid) + 0.5)
                * (box.hi[j] - box.lo[j]) / args.grid for j in range(box.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    elif exp.hormander_block is not None:
        pts = exp.hormander_block["points"]
    else:
        raise ConfigError("no points given: use --points/--grid or a "
                          "'hormander' config block")
    depth = args.depth or int((exp.hormander_block or {}).get("depth", 1))
    tol = float((exp.hormander_block or {}).get("rank_tol", 1e-8))
    reports = [hormander_rank(pdmp.fields, p, depth, tol).to_dict() for p in pts]
    payload = {"reports": reports}
    if exp.submersion_block is not None:
        xi = exp.submersion_block["xi"]
        times = exp.submersion_block.get("times")
        if times:
            best, best_t = submersion_search(pdmp.fields, xi, pdmp.x0, times,
                                             step=pdmp.step)
            payload["submersion"] = {"report": best.to_dict(), "times": best_t}
    _write_json(args.out, payload, _base_meta(exp.hash, pdmp.seed))
    return 0


def cmd_singularity(args) -> int:
    exp = load_config(args.config)
    if exp.gamma_block is None:
        raise ConfigError("singularity command requires a 'gamma' config block")
    pdmp = exp.pdmp
    gamma = exp.gamma_block
    trajectories = args.trajectories or int(gamma.get("trajectories", 200))
    os.makedirs(args.out, exist_ok=True)
    center = gamma["points"][0]
    _, _, _, summary, report = _density_pipeline(
        pdmp, args.out, exp.hash, int(exp.density_block.get("cells", 64)),
        trajectories, args.workers,
        ball_spec=(center, gamma["radii"], gamma["state"]),
    )
    _write_summary(args.out, summary, exp.lam, exp.hash, pdmp.seed)
    _singularity_outputs(pdmp, gamma, args.out, exp.hash, args.workers, report)
    return 0


def rotcontract_doc(q1, q2, lam, horizon, burn_in, step, seed, trajectories,
                    cells, probe_cells="128,256") -> dict:
    """Canonical config document of the built-in system (hashed into the
    output metadata, so runs are identifiable by their parameters)."""
    return {
        "system": "rotcontract", "q1": q1, "q2": q2,
        "lambda": lam, "horizon": horizon, "burn_in": burn_in,
        "step": step, "seed": seed, "trajectories": trajectories,
        "cells": cells, "probe_cells": probe_cells,
    }


def cmd_example_rotcontract(args) -> int:
    lams = [float(v) for v in args.lambda_list.split(",")] if args.lambda_list \
        else [args.lam]
    multi = len(lams) > 1
    probe_cells = [int(c) for c in args.probe_cells.split(",")]
    radii = [float(r) for r in args.radii.split(",")]
    for lam in lams:
        doc = rotcontract_doc(args.q1, args.q2, lam, args.horizon,
                              args.burn_in, args.step, args.seed,
                              args.trajectories, args.cells,
                              args.probe_cells)
        cfg_hash = config_hash(doc)
        out_dir = os.path.join(args.out, f"lambda_{lam:g}") if multi else args.out
        os.makedirs(out_dir, exist_ok=True)
        pdmp = make_config(q1=args.q1, q2=args.q2, lam=lam,
                           horizon=args.horizon, burn_in=args.burn_in,
                           step=args.step, seed=args.seed)
        meta = _base_meta(cfg_hash, args.seed)

        # the averaged-flow attractor is cheap; its location centers the
        # zoomed refinement-probe grids at B(point, probe_radius)
        probe_center = _attractor_point(pdmp, out_dir, meta, np.zeros(2))
        probe_radius = 0.3
        zoom_box = Box.make([[probe_center[j] - probe_radius,
                              probe_center[j] + probe_radius]
                             for j in range(2)])
        _, zoom_grids, occ, summary, report = _density_pipeline(
            pdmp, out_dir, cfg_hash, args.cells, args.trajectories,
            args.workers, ball_spec=(np.zeros(2), radii, 0),
            zoom_spec=(zoom_box, probe_cells),
        )
        _write_summary(out_dir, summary, lam, cfg_hash, args.seed)

        probe = smoothness_probe(list(zoom_grids.values()),
                                 center=probe_center, radius=probe_radius)
        _write_json(os.path.join(out_dir, "smoothness_probe.json"),
                    probe.to_dict(), meta)

        reports = [
            hormander_rank(pdmp.fields, np.array([1.0, 0.0]), 1).to_dict(),
            hormander_rank(pdmp.fields, np.zeros(2), 1).to_dict(),
        ]
        _write_json(os.path.join(out_dir, "hormander_reports.json"),
                    {"reports": reports}, meta)

        gamma = {
            "points": np.zeros((1, 2)), "state": 0,
            "neighborhood_radius": 0.2, "radii": radii,
            "accessibility_trials": args.accessibility_trials,
            "accessibility_horizon": 50.0,
        }
        _singularity_outputs(pdmp, gamma, out_dir, cfg_hash, args.workers,
                             report)
    return 0


def _attractor_point(pdmp, out_dir, meta, fallback):
    """Estimate the averaged-flow attractor, write the cloud CSV and the
    membership JSON, and return the cloud mean (probe region center)."""
    try:
        est = attractor_estimate(pdmp.fields, pdmp.Q, pdmp.box,
                                 sample_count=128, T_step=2.0, tol=1e-5,
                                 step=pdmp.step, seed=pdmp.seed)
    except RuntimeError:
        return fallback
    member, _ = q0_membership(pdmp.fields, pdmp.Q, est, box=pdmp.box)
    with open(os.path.join(out_dir, "attractor.csv"), "w") as fh:
        fh.write(_meta_lines(meta))
        fh.write(",".join(f"x{j + 1}" for j in range(pdmp.box.dim)) + "\n")
        for p in est.points:
            fh.write(",".join(repr(float(v)) for v in p) + "\n")
    _write_json(os.path.join(out_dir, "attractor.json"), {
        "mean": [float(v) for v in est.points.mean(axis=0)],
        "diameter": est.diameter,
        "iterations": est.iterations,
        "converged": est.converged,
        "q0_member": bool(member),
    }, meta)
    return est.points.mean(axis=0)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pdmplab",
        description="Simulation and regularity diagnostics for randomly "
                    "switched ODE systems.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    fmt = dict(formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    sp = sub.add_parser("simulate", help="one trajectory to CSV", **fmt)
    sp.add_argument("config")
    sp.add_argument("--out", required=True)
    sp.add_argument("--sample-dt", type=float, default=None)
    sp.set_defaults(fn=cmd_simulate)

    dp = sub.add_parser("density", help="stationary-density histograms", **fmt)
    dp.add_argument("config")
    dp.add_argument("--out", required=True)
    dp.add_argument("--cells", type=int, default=None)
    dp.add_argument("--trajectories", type=int, default=None)
    dp.add_argument("--workers", type=int, default=1)
    dp.add_argument("--lambda-list", default=None,
                    help="comma-separated rate scalings; one output dir per value")
    dp.set_defaults(fn=cmd_density)

    hp = sub.add_parser("hormander", help="bracket-rank reports", **fmt)
    hp.add_argument("config")
    hp.add_argument("--out", required=True)
    hp.add_argument("--points", default=None, help="CSV file of points")
    hp.add_argument("--grid", type=int, default=None,
                    help="scan an NxN.. lattice of cell centers")
    hp.add_argument("--depth", type=int, default=None)
    hp.set_defaults(fn=cmd_hormander)

    gp = sub.add_parser("singularity", help="candidate-set blow-up verdict", **fmt)
    gp.add_argument("config")
    gp.add_argument("--out", required=True)
    gp.add_argument("--trajectories", type=int, default=None)
    gp.add_argument("--workers", type=int, default=1)
    gp.set_defaults(fn=cmd_singularity)

    ep = sub.add_parser("example-rotcontract",
                        help="built-in rotate/contract system, full pipeline",
                        **fmt)
    ep.add_argument("--out", required=True)
    ep.add_argument("--q1", type=float, default=1.5,
                    help="rate out of the rotating state")
    ep.add_argument("--q2", type=float, default=2.0,
                    help="rate out of the contracting state")
    ep.add_argument("--lambda", dest="lam", type=float, default=1.0,
                    help="overall rate scaling")
    ep.add_argument("--lambda-list", default=None)
    ep.add_argument("--seed", type=int,
                    default=int(os.environ.get(SEED_ENV_VAR, "1")))
    ep.add_argument("--trajectories", type=int, default=5000)
    ep.add_argument("--horizon", type=float, default=1000.0)
    ep.add_argument("--burn-in", type=float, default=100.0)
    ep.add_argument("--step", type=float, default=0.01)
    ep.add_argument("--cells", type=int, default=128)
    ep.add_argument("--probe-cells", default="128,256",
                help="nested grid resolutions of the zoomed refinement probe")
    ep.add_argument("--radii", default="0.2,0.1,0.05,0.025")
    ep.add_argument("--accessibility-trials", type=int, default=100)
    ep.add_argument("--workers", type=int, default=1)
    ep.set_defaults(fn=cmd_example_rotcontract)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, FlowError, ExprDomainError,
            InsufficientSamplesError, RateMatrixError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
