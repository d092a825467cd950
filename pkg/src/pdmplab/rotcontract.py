"""Built-in two-field planar system: a rotate-and-contract linear field
switched against a straight contraction toward a boundary point.

State 1 flows v(x) = A x with A = [[-1, 1], [-1, -1]] (spiral into the
origin), state 2 flows w(x) = -(x - e0) with e0 = (1, 0) (straight pull
toward e0).  The closed unit disc is forward invariant under both, so the
bounding square [-1, 1]^2 never sees an exit.  The first-level bracket
test succeeds everywhere except at e0, and the origin with state 1 is a
backward-invariant contraction point: slow switching out of state 1
(-Q_11 <= 2) piles up unbounded density there, fast switching smooths it.
"""

from __future__ import annotations

import numpy as np

from .pdmp import Box, PdmpConfig
from .switching import RateMatrix, scale, validate_rate_matrix
from .vecfield import affine_field

__all__ = [
    "ROTATION_MATRIX",
    "E0",
    "make_fields",
    "make_rate_matrix",
    "make_box",
    "make_config",
]

ROTATION_MATRIX = np.array([[-1.0, 1.0], [-1.0, -1.0]])
E0 = np.array([1.0, 0.0])


def make_fields():
    v = affine_field(ROTATION_MATRIX, np.zeros(2), label=1)
    # w(x) = -(x - e0) = -I x + e0
    w = affine_field(-np.eye(2), E0.copy(), label=2)
    return (v, w)


def make_rate_matrix(q1: float = 1.5, q2: float = 2.0,
                     lam: float = 1.0) -> RateMatrix:
    Q = validate_rate_matrix([[-q1, q1], [q2, -q2]])
    return scale(Q, lam) if lam != 1.0 else Q


def make_box() -> Box:
    return Box.make([[-1.0, 1.0], [-1.0, 1.0]])


def make_config(q1: float = 1.5, q2: float = 2.0, lam: float = 1.0,
                horizon: float = 1000.0, burn_in: float | None = 100.0,
                step: float = 0.01, seed: int = 0,
                x0=(0.5, 0.0), i0: int = 0) -> PdmpConfig:
    return PdmpConfig(
        fields=make_fields(),
        Q=make_rate_matrix(q1, q2, lam),
        box=make_box(),
        x0=np.asarray(x0, dtype=float),
        i0=i0,
        horizon=horizon,
        burn_in=burn_in,
        step=step,
        seed=seed,
    )
