"""Slow-switching blow-up machinery for a candidate pair (Gamma, i).

A candidate set with its state must pass five pointwise/flow checks
(interior, backward invariance under the state's field, sampled
neighborhood accessibility, bracket rank, uniformly negative divergence);
the contraction budget R = inf(-div) against the exit rate -Q_ii then
decides whether unbounded stationary density is predicted at Gamma.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flow import flow
from .liealg import DEFAULT_RANK_TOL, accessibility_sample, hormander_rank
from .pdmp import Box
from .switching import RateMatrix
from .vecfield import divergence, eval_field, jacobian

__all__ = [
    "GammaCandidate",
    "SingularityVerdict",
    "check_backward_invariance",
    "compute_R",
    "full_verdict",
    "blowup_exponent",
]


@dataclass(frozen=True, eq=False)
class GammaCandidate:
    """Finite discretization of a closed candidate set, with the state
    whose field is supposed to contract along it."""

    points: np.ndarray            # (m, d)
    state: int                    # 0-based
    neighborhood_radius: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "points",
                           np.atleast_2d(np.asarray(self.points, dtype=float)))
        if self.points.size == 0:
            raise ValueError("candidate needs at least one point")


def check_backward_invariance(candidate: GammaCandidate, fld, t_max: float,
                              tol: float, step: float = 1e-3,
                              n_times: int = 8):
    """Flow every sample point backward over a time grid up to t_max; pass
    if each image stays within tol of the discretized set (the tolerance
    absorbs discretization gaps)."""
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    pts = candidate.points
    worst = 0.0
    for p in pts:
        for tau in np.linspace(t_max / n_times, t_max, n_times):
            img = flow(fld, p, -tau, step).endpoint
            dist = float(np.sqrt(((pts - img) ** 2).sum(axis=1)).min())
            worst = max(worst, dist)
    return worst <= tol, worst


def compute_R(points, fld) -> float:
    """inf over the sample points of -tr(Dv(x)); positive exactly when the
    divergence is uniformly negative on the samples (clause 5)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("empty candidate set")
    return float(min(-divergence(fld, p) for p in pts))


@dataclass(frozen=True, eq=False)
class SingularityVerdict:
    clauses: dict
    R: float
    minus_Q_ii: float
    inequality_holds: bool
    prediction: str               # "blow-up expected" | "no prediction"
    accessibility_fraction: float
    accessibility_note: str
    backward_deviation: float
    state: int                    # 0-based
    rank_reports: tuple = field(default=())

    def to_dict(self):
        return {
            "clauses": {k: bool(v) for k, v in self.clauses.items()},
            "R": float(self.R),
            "minus_Q_ii": float(self.minus_Q_ii),
            "inequality_holds": bool(self.inequality_holds),
            "prediction": self.prediction,
            "accessibility_fraction": float(self.accessibility_fraction),
            "accessibility_note": self.accessibility_note,
            "backward_deviation": float(self.backward_deviation),
            "state": int(self.state) + 1,
        }


def _interior(points, box: Box) -> bool:
    return bool(np.all(points > box.lo) and np.all(points < box.hi))


def full_verdict(candidate: GammaCandidate, fields, Q: RateMatrix, box: Box,
                 depth: int = 1, rank_tol: float = DEFAULT_RANK_TOL,
                 accessibility_trials: int = 200,
                 accessibility_horizon: float = 50.0,
                 backward_t_max: float = 5.0, backward_tol: float = 1e-3,
                 step: float = 1e-2, seed: int = 0,
                 workers: int = 1) -> SingularityVerdict:
    """Evaluate all five clauses and the rate inequality.

    Clause 3 (neighborhood accessibility) is only sampled: a zero hit
    fraction is recorded as "not witnessed", never as a disproof.
    """
    i = candidate.state
    fld = fields[i]
    pts = candidate.points

    interior_ok = _interior(pts, box)
    backward_ok, worst = check_backward_invariance(
        candidate, fld, backward_t_max, backward_tol, step
    )

    # sampled accessibility of a neighborhood of Gamma from spread-out starts
    starts = [0.5 * (box.lo + box.hi)]
    for corner in range(2**box.dim):
        offs = np.array([(corner >> j) & 1 for j in range(box.dim)], dtype=float)
        starts.append(box.lo + 0.1 * (box.hi - box.lo)
                      + 0.8 * offs * (box.hi - box.lo))
    targets = pts if len(pts) <= 4 else pts[np.linspace(0, len(pts) - 1, 4).astype(int)]
    fractions = []
    probe = 0
    for target in targets:
        for s0 in starts:
            fractions.append(accessibility_sample(
                fields, Q, s0, target, candidate.neighborhood_radius,
                accessibility_trials, accessibility_horizon,
                seed=seed + probe, box=box, step=step, workers=workers,
            ))
            probe += 1
    frac_min = float(min(fractions))
    access_ok = frac_min > 0.0
    access_note = "witnessed" if access_ok else "not witnessed"

    reports = tuple(hormander_rank(fields, p, depth, rank_tol) for p in pts)
    hormander_ok = all(r.verdict == "full" for r in reports)

    R = compute_R(pts, fld)
    divergence_ok = R > 0.0
    minus_q_ii = float(-Q.Q[i, i])
    inequality = minus_q_ii <= R

    clauses = {
        "interior": interior_ok,
        "backward_invariant": backward_ok,
        "accessible_witnessed": access_ok,
        "hormander": hormander_ok,
        "negative_divergence": divergence_ok,
    }
    predicted = all(clauses.values()) and inequality
    return SingularityVerdict(
        clauses=clauses,
        R=R,
        minus_Q_ii=minus_q_ii,
        inequality_holds=inequality,
        prediction="blow-up expected" if predicted else "no prediction",
        accessibility_fraction=frac_min,
        accessibility_note=access_note,
        backward_deviation=worst,
        state=i,
        rank_reports=reports,
    )


def blowup_exponent(y, fld, Q: RateMatrix, state: int, s_max: float,
                    n_samples: int = 64, step: float = 1e-3) -> np.ndarray:
    """Samples of s -> Q_ii s + log det(D phi^i_{-s}(y)) along the backward
    orbit of y, i.e. Q_ii s - int_0^s tr(Dv^i(phi^i_{-r}(y))) dr with the
    trace integral accumulated by the same RK4 stepper that moves the
    orbit.  Nonnegativity up to s_max is the engine of the slow-switching
    blow-up bound.  Returns an (n_samples + 1, 2) array of (s, exponent).
    """
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    q_ii = float(Q.Q[state, state])
    y = np.asarray(y, dtype=float).copy()
    a = 0.0  # int_0^s tr(Dv(phi_{-r}(y))) dr
    out = [(0.0, 0.0)]
    ds = s_max / n_samples
    for k in range(1, n_samples + 1):
        remaining = ds
        while remaining > 1e-15 * s_max:
            h = min(step, remaining)
            # augmented backward system: y' = -v(y), a' = tr(Dv(y))
            k1y = -eval_field(fld, y)
            k1a = float(np.trace(jacobian(fld, y)))
            y2 = y + 0.5 * h * k1y
            k2y = -eval_field(fld, y2)
            k2a = float(np.trace(jacobian(fld, y2)))
            y3 = y + 0.5 * h * k2y
            k3y = -eval_field(fld, y3)
            k3a = float(np.trace(jacobian(fld, y3)))
            y4 = y + h * k3y
            k4y = -eval_field(fld, y4)
            k4a = float(np.trace(jacobian(fld, y4)))
            y = y + (h / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y)
            a = a + (h / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
            remaining -= h
        s = k * ds
        out.append((s, q_ii * s - a))
    return np.array(out)
