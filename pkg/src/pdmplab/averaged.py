"""Averaged dynamics: the stationary-weighted mean field, its global
attractor on the box, and the first-level rank condition on that
attractor (fast-switching regularity regime membership)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .flow import flow_rows
from .liealg import DEFAULT_RANK_TOL, hormander_rank
from .pdmp import Box
from .switching import RateMatrix, stationary_law
from .vecfield import affine_field

__all__ = [
    "AveragedField",
    "AttractorEstimate",
    "averaged_field",
    "attractor_estimate",
    "q0_membership",
]


@dataclass(frozen=True, eq=False)
class AveragedField:
    """Stationary-weighted mean of the switchable fields.  Scale-invariant
    in the jump rates: lambda*Q has the same weights, hence the same
    averaged field."""

    fields: tuple
    weights: np.ndarray
    dim: int
    label: int = 0

    @property
    def is_affine(self) -> bool:
        return False

    def eval_generic(self, xs):
        total = None
        for w, f in zip(self.weights, self.fields):
            vals = f.eval_generic(xs)
            if total is None:
                total = [w * v for v in vals]
            else:
                total = [acc + w * v for acc, v in zip(total, vals)]
        return total

    def eval_rows(self, rows: np.ndarray) -> np.ndarray:
        out = self.weights[0] * self.fields[0].eval_rows(rows)
        for w, f in zip(self.weights[1:], self.fields[1:]):
            out = out + w * f.eval_rows(rows)
        return out


def averaged_field(fields, Q: RateMatrix):
    """The mean field weighted by the chain's stationary law.  If every
    component field is affine the result is returned as an exact affine
    field (weighted A and b)."""
    law = stationary_law(Q)
    fields = tuple(fields)
    if all(getattr(f, "is_affine", False) for f in fields):
        A = sum(w * f.matrix for w, f in zip(law.pi, fields))
        b = sum(w * f.offset for w, f in zip(law.pi, fields))
        return affine_field(A, b, label=0)
    return AveragedField(
        fields=fields, weights=law.pi.copy(), dim=fields[0].dim
    )


@dataclass(frozen=True, eq=False)
class AttractorEstimate:
    points: np.ndarray            # final cloud
    iterations: int
    total_time: float             # iterations * T_step
    diameter: float
    decrements: np.ndarray        # directed Hausdorff(old cloud -> new cloud)
    converged: bool               # decrement fell below tol (otherwise this
                                  # is only the finite-time outer estimate)


def _directed_hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    tree = cKDTree(B)
    dist, _ = tree.query(A, k=1)
    return float(np.max(dist))


def attractor_estimate(fields, Q: RateMatrix, box: Box, sample_count: int = 256,
                       T_step: float = 2.0, max_iters: int = 60,
                       tol: float = 1e-4, step: float = 1e-2,
                       seed: int = 0) -> AttractorEstimate:
    """Iterate the averaged flow on a uniform cloud until the cloud stops
    moving as a set (directed Hausdorff decrement below tol)."""
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    vbar = averaged_field(fields, Q)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed),))))
    cloud = box.lo + rng.random((sample_count, box.dim)) * (box.hi - box.lo)
    decrements = []
    converged = False
    iters = 0
    for iters in range(1, max_iters + 1):
        new_cloud = flow_rows(vbar, cloud, T_step, step)
        if np.any(new_cloud < box.lo) or np.any(new_cloud > box.hi):
            raise RuntimeError(
                "averaged-flow cloud left the box; M is not invariant as declared"
            )
        dec = _directed_hausdorff(cloud, new_cloud)
        decrements.append(dec)
        cloud = new_cloud
        if dec < tol:
            converged = True
            break
    diam = 0.0
    if len(cloud) > 1:
        diffs = cloud[None, :, :] - cloud[:, None, :]
        diam = float(np.sqrt((diffs**2).sum(axis=2)).max())
    return AttractorEstimate(
        points=cloud,
        iterations=iters,
        total_time=iters * T_step,
        diameter=diam,
        decrements=np.array(decrements),
        converged=converged,
    )


def q0_membership(fields, Q: RateMatrix, attractor: AttractorEstimate,
                  depth: int = 1, rank_tol: float = DEFAULT_RANK_TOL,
                  dilation: float | None = None, box: Box | None = None):
    """First-level rank condition at every attractor point plus a dilated
    shell around each (safety margin for the finite cloud).  Returns
    (verdict: bool, list of RankReport)."""
    pts = attractor.points
    if len(pts) == 0:
        raise ValueError("attractor cloud is empty")
    d = pts.shape[1]
    if dilation is None:
        dilation = 0.05 * (box.diagonal if box is not None else 1.0)
    probes = [pts]
    if dilation > 0:
        for j in range(d):
            e = np.zeros(d)
            e[j] = dilation
            probes.append(pts + e)
            probes.append(pts - e)
    all_pts = np.unique(np.round(np.vstack(probes), 12), axis=0)
    reports = [hormander_rank(fields, p, depth, rank_tol) for p in all_pts]
    member = all(r.verdict == "full" for r in reports)
    return member, reports
