"""Stationary-density estimation and its regularity diagnostics.

The long-run time-weighted histogram of (X_t, I_t) estimates the
stationary density.  Local blow-up is probed through mass ratios
m(r) = mass(B_r x {i}) / Leb(B_r) at shrinking radii, fitted on log-log
axes; smoothness is probed by the stability of sup-density and
sup-gradient across nested grid refinements.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .pdmp import (
    BallMassSink,
    Box,
    GridSink,
    PdmpConfig,
    StateOccupationSink,
    run_batch,
)

__all__ = [
    "DensityGrid",
    "BlowupReport",
    "SmoothnessReport",
    "InsufficientSamplesError",
    "estimate_density",
    "estimate_density_multi",
    "blowup_diagnostic",
    "blowup_report_from_masses",
    "ball_volume",
    "smoothness_probe",
    "write_density_csv",
    "read_density_csv",
    "MIN_BALL_HITS",
]

MIN_BALL_HITS = 1000
SLOPE_DIVERGING = -0.1
R2_DIVERGING = 0.8
SLOPE_FLAT = 0.05


class InsufficientSamplesError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Per-state histogram over the box; after normalization the values
    integrate (sum times cell volume) to one across all states."""

    values: np.ndarray           # (n_states, cells, ..., cells)
    box: Box
    cells: int
    total_time: float
    normalized: bool

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.ndim - 1

    @property
    def cell_volume(self) -> float:
        return self.box.volume / self.cells**self.dim

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def state_marginal(self) -> np.ndarray:
        axes = tuple(range(1, self.values.ndim))
        if self.normalized:
            return self.values.sum(axis=axes) * self.cell_volume
        return self.values.sum(axis=axes) / max(self.total_time, 1e-300)

    def normalize(self) -> "DensityGrid":
        if self.normalized:
            return self
        total = float(self.values.sum())
        if total <= 0:
            raise ValueError("cannot normalize an empty grid")
        return DensityGrid(
            values=self.values / (total * self.cell_volume),
            box=self.box,
            cells=self.cells,
            total_time=self.total_time,
            normalized=True,
        )

    def coarsen(self, factor: int) -> "DensityGrid":
        """Exact rebinning onto cells coarser by ``factor`` per axis."""
        if self.cells % factor:
            raise ValueError("factor must divide the cell count")
        c2 = self.cells // factor
        vals = self.values
        n = vals.shape[0]
        shape = [n]
        for _ in range(self.dim):
            shape += [c2, factor]
        resh = vals.reshape(shape)
        axes = tuple(2 + 2 * k for k in range(self.dim))
        summed = resh.sum(axis=axes)
        if self.normalized:
            summed = summed / factor**self.dim  # mean of densities
        return DensityGrid(
            values=summed, box=self.box, cells=c2,
            total_time=self.total_time, normalized=self.normalized,
        )


def estimate_density(cfg: PdmpConfig, cells_per_axis: int, trajectories: int,
                     workers: int = 1) -> DensityGrid:
    """Time-weighted histogram of (X_t, I_t) over [burn_in, horizon],
    accumulated at midpoints of every integrator step, then normalized."""
    if cells_per_axis < 2:
        raise ValueError("cells_per_axis must be at least 2")
    grid_sink = GridSink(cfg.box, cells_per_axis)
    occ_sink = StateOccupationSink()
    (grid, occ), _ = run_batch(cfg, trajectories, workers,
                               sinks=(grid_sink, occ_sink),
                               need_summaries=False)
    raw = DensityGrid(values=grid, box=cfg.box, cells=cells_per_axis,
                      total_time=occ["total_time"], normalized=False)
    return raw.normalize()


def estimate_density_multi(cfg: PdmpConfig, cells_list, trajectories: int,
                           workers: int = 1):
    """Nested-resolution grids from a single run: accumulate at the finest
    resolution and rebin exactly."""
    cells_list = sorted(int(c) for c in cells_list)
    finest = cells_list[-1]
    for c in cells_list:
        if finest % c:
            raise ValueError("cell counts must be nested (each divides the finest)")
    fine = estimate_density(cfg, finest, trajectories, workers)
    return {c: (fine if c == finest else fine.coarsen(finest // c))
            for c in cells_list}


# ---------------------------------------------------------------------------
# blow-up diagnostic


def ball_volume(r: float, d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r**d


@dataclass(frozen=True, eq=False)
class BlowupReport:
    center: np.ndarray
    state: int                    # 0-based
    radii: np.ndarray             # descending
    mass_ratio: np.ndarray        # m(r), same order as radii
    slope: float | None
    intercept: float | None
    r_squared: float | None
    verdict: str                  # diverging | bounded | inconclusive
    weighted_hits: int
    total_time: float
    note: str = ""

    def to_dict(self):
        return {
            "center": [float(v) for v in self.center],
            "state": int(self.state) + 1,
            "radii": [float(r) for r in self.radii],
            "mass_ratio": [float(m) for m in self.mass_ratio],
            "slope": None if self.slope is None else float(self.slope),
            "intercept": None if self.intercept is None else float(self.intercept),
            "r_squared": None if self.r_squared is None else float(self.r_squared),
            "verdict": self.verdict,
            "weighted_hits": int(self.weighted_hits),
            "total_time": float(self.total_time),
            "note": self.note,
        }


def _fit_loglog(radii, ratios):
    x = np.log(radii)
    y = np.log(ratios)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


def blowup_report_from_masses(masses, hits, total_time, center, state, radii,
                              d: int, min_hits: int = MIN_BALL_HITS,
                              benchmark_hits: float | None = None) -> BlowupReport:
    """Verdict from streamed per-radius occupation masses.

    ``benchmark_hits`` is the sub-sample count the largest ball would have
    received from a uniform-level density at the realized budget; a
    well-powered run (benchmark >= 10x min_hits) that still finds almost
    nothing is decisive evidence against local blow-up.
    """
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    if len(radii) < 4:
        raise ValueError("need at least 4 radii")
    masses = np.asarray(masses, dtype=float)
    if total_time <= 0:
        raise InsufficientSamplesError("no recorded occupation time")
    ratios = (masses / total_time) / np.array([ball_volume(r, d) for r in radii])
    center = np.asarray(center, dtype=float)

    if hits < min_hits:
        if benchmark_hits is not None and benchmark_hits >= 10 * min_hits:
            return BlowupReport(
                center=center, state=state, radii=radii, mass_ratio=ratios,
                slope=None, intercept=None, r_squared=None, verdict="bounded",
                weighted_hits=hits, total_time=total_time,
                note="near-zero local mass at a well-powered budget",
            )
        raise InsufficientSamplesError(
            f"only {hits} weighted hits in the largest ball (need {min_hits})"
        )

    positive = ratios > 0
    if positive.sum() < 3:
        raise InsufficientSamplesError(
            "fewer than 3 radii carry positive mass; cannot fit a slope"
        )
    slope, intercept, r2 = _fit_loglog(radii[positive], ratios[positive])
    if slope <= SLOPE_DIVERGING and r2 >= R2_DIVERGING:
        verdict = "diverging"
    elif abs(slope) <= SLOPE_FLAT:
        verdict = "bounded"
    else:
        verdict = "inconclusive"
    return BlowupReport(
        center=center, state=state, radii=radii, mass_ratio=ratios,
        slope=slope, intercept=intercept, r_squared=r2, verdict=verdict,
        weighted_hits=int(hits), total_time=float(total_time),
    )


def blowup_diagnostic(positions, weights, states, center, state, radii,
                      total_time: float | None = None,
                      min_hits: int = MIN_BALL_HITS,
                      benchmark_hits: float | None = None) -> BlowupReport:
    """Verdict from raw occupation sub-samples (positions, weights and
    states of every recorded midpoint).  The mass ratios use the exact
    sample-to-center distances, never a gridded histogram."""
    positions = np.asarray(positions, dtype=float)
    weights = np.asarray(weights, dtype=float)
    states = np.asarray(states)
    center = np.asarray(center, dtype=float)
    radii_desc = np.asarray(sorted(radii, reverse=True), dtype=float)
    if total_time is None:
        total_time = float(weights.sum())
    sel = states == state
    dist2 = ((positions[sel] - center) ** 2).sum(axis=1)
    w = weights[sel]
    masses = np.array([w[dist2 <= r * r].sum() for r in radii_desc])
    hits = int(np.count_nonzero(dist2 <= radii_desc[0] ** 2))
    return blowup_report_from_masses(
        masses, hits, total_time, center, state, radii_desc,
        d=positions.shape[1], min_hits=min_hits, benchmark_hits=benchmark_hits,
    )


def blowup_from_simulation(cfg: PdmpConfig, center, state, radii,
                           trajectories: int, workers: int = 1,
                           min_hits: int = MIN_BALL_HITS):
    """Run the PDMP and stream the ball masses (identical sums to keeping
    every raw sub-sample).  Returns (report, grid-free occupation stats)."""
    ball = BallMassSink(center, radii, state)
    occ = StateOccupationSink()
    (masses, occs), _ = run_batch(cfg, trajectories, workers, sinks=(ball, occ),
                                  need_summaries=False)
    bench = (
        occs["count"]
        * ball_volume(max(radii), cfg.box.dim)
        / (cfg.box.volume * cfg.Q.n)
    )
    report = blowup_report_from_masses(
        masses["mass"], masses["hits"], occs["total_time"], center, state,
        radii, d=cfg.box.dim, min_hits=min_hits, benchmark_hits=bench,
    )
    return report, occs


# ---------------------------------------------------------------------------
# smoothness probe


@dataclass(frozen=True, eq=False)
class SmoothnessReport:
    cells: tuple[int, ...]
    sup_density: tuple[float, ...]
    sup_gradient: tuple[float, ...]
    density_ratios: tuple[float, ...]
    gradient_ratios: tuple[float, ...]
    stable: bool
    threshold: float

    def to_dict(self):
        return {
            "cells": list(self.cells),
            "sup_density": list(self.sup_density),
            "sup_gradient": list(self.sup_gradient),
            "density_ratios": list(self.density_ratios),
            "gradient_ratios": list(self.gradient_ratios),
            "stable": bool(self.stable),
            "threshold": float(self.threshold),
        }


def _region_mask(grid: DensityGrid, center, radius):
    c = grid.cells
    h = (grid.box.hi - grid.box.lo) / c
    idx = np.indices((c,) * grid.dim, dtype=float)
    dist2 = np.zeros(idx.shape[1:])
    for j in range(grid.dim):
        centers_j = grid.box.lo[j] + (idx[j] + 0.5) * h[j]
        dist2 += (centers_j - center[j]) ** 2
    return dist2 <= radius**2


def smoothness_probe(grids, center, radius, threshold: float = 1.2) -> SmoothnessReport:
    """Necessary-condition probe of local boundedness/C1-likeness: the
    cell-max density and discrete-gradient magnitude inside the region
    must stabilize (growth ratio <= threshold) across refinements.
    ``grids`` are nested-resolution normalized DensityGrids."""
    grids = sorted(grids, key=lambda g: g.cells)
    if len(grids) < 2:
        raise ValueError("need at least two resolutions")
    center = np.asarray(center, dtype=float)
    sup_d, sup_g = [], []
    for g in grids:
        mask = _region_mask(g, center, radius)
        if not np.any(mask):
            raise ValueError("region contains no cells at the coarsest grid")
        h = float((g.box.hi[0] - g.box.lo[0]) / g.cells)
        best_d = 0.0
        best_g = 0.0
        for s in range(g.n_states):
            vals = g.values[s]
            best_d = max(best_d, float(vals[mask].max()))
            grads = np.gradient(vals, h)
            if g.dim == 1:
                grads = [grads]
            mag = np.sqrt(sum(gr**2 for gr in grads))
            best_g = max(best_g, float(mag[mask].max()))
        sup_d.append(best_d)
        sup_g.append(best_g)
    eps = 1e-300
    d_ratios = [sup_d[k + 1] / max(sup_d[k], eps) for k in range(len(sup_d) - 1)]
    g_ratios = [sup_g[k + 1] / max(sup_g[k], eps) for k in range(len(sup_g) - 1)]
    stable = all(r <= threshold for r in d_ratios + g_ratios)
    return SmoothnessReport(
        cells=tuple(g.cells for g in grids),
        sup_density=tuple(sup_d),
        sup_gradient=tuple(sup_g),
        density_ratios=tuple(d_ratios),
        gradient_ratios=tuple(g_ratios),
        stable=stable,
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# CSV round trip (the file contract consumed by the plotting package)


def write_density_csv(path, grid: DensityGrid, state: int, meta=None):
    """One state layer as CSV with '#' metadata lines; indices are cell
    coordinates, ``state`` is written 1-based."""
    lines = []
    meta = dict(meta or {})
    meta.setdefault("box", json.dumps([[float(a), float(b)] for a, b in
                                       zip(grid.box.lo, grid.box.hi)]))
    meta.setdefault("cells", json.dumps([grid.cells] * grid.dim))
    meta["state"] = str(state + 1)
    meta.setdefault("total_time", repr(grid.total_time))
    meta.setdefault("normalized", "true" if grid.normalized else "false")
    for key, val in meta.items():
        lines.append(f"# {key}={val}")
    header = ",".join(f"cell_index_{j + 1}" for j in range(grid.dim)) + ",value"
    lines.append(header)
    vals = grid.values[state]
    for index in np.ndindex(*vals.shape):
        idx_txt = ",".join(str(i) for i in index)
        lines.append(f"{idx_txt},{float(vals[index])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_density_csv(path):
    """Parse a density CSV back into (values array, metadata dict)."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val
                continue
            if line.startswith("cell_index"):
                continue
            rows.append(line.split(","))
    for key in ("box", "cells", "state"):
        if key not in meta:
            raise ValueError(f"density CSV missing metadata key '{key}'")
    cells = json.loads(meta["cells"])
    values = np.zeros(cells)
    for parts in rows:
        idx = tuple(int(p) for p in parts[:-1])
        values[idx] = float(parts[-1])
    return values, meta
