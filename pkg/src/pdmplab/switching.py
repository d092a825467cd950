"""Continuous-time Markov chains on the finite state set E = {1..n}.

Rate matrices, their stationary laws, lambda-scaling and seeded jump
sampling.  States are 1-based in user-facing data (matching labels used
in configs and output files) and 0-based in the arrays here; the
SwitchingRecord stores 0-based indices.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "RateMatrixError",
    "ReducibleChainError",
    "RateMatrix",
    "ChainStationaryLaw",
    "SwitchingRecord",
    "validate_rate_matrix",
    "stationary_law",
    "scale",
    "sample_chain",
    "chain_rng",
]

ROW_SUM_INPUT_TOL = 1e-9


class RateMatrixError(ValueError):
    pass


class ReducibleChainError(RateMatrixError):
    pass


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Generator Q with nonnegative off-diagonals and zero row sums."""

    Q: np.ndarray
    strictly_positive: bool  # all off-diagonal entries > 0

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def rates(self) -> np.ndarray:
        """Total jump rates -Q_ii."""
        return -np.diag(self.Q)


@dataclass(frozen=True, eq=False)
class ChainStationaryLaw:
    pi: np.ndarray

    def __post_init__(self):
        if np.any(self.pi < 0) or abs(self.pi.sum() - 1.0) > 1e-10:
            raise RateMatrixError("stationary law must be a probability vector")


@dataclass(frozen=True, eq=False)
class SwitchingRecord:
    """Realized jump chain over a window: visited states and holding times."""

    states: np.ndarray  # int, 0-based
    holds: np.ndarray   # positive durations, same length
    start_state: int

    def __post_init__(self):
        if len(self.states) != len(self.holds):
            raise ValueError("states and holds must have equal length")
        if np.any(np.diff(self.states) == 0):
            raise ValueError("consecutive states must differ")

    @property
    def total_time(self) -> float:
        return float(self.holds.sum())

    def occupation_fractions(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        np.add.at(out, self.states, self.holds)
        return out / out.sum()


def validate_rate_matrix(Q) -> RateMatrix:
    """Check the generator constraints and normalize the diagonal.

    Off-diagonals must be nonnegative and each row must sum to zero
    within a small input tolerance; the diagonal is then recomputed as
    minus the off-diagonal row sum so stored rows sum to zero exactly
    (well below 1e-12).  Vanishing off-diagonals only produce a warning:
    merely irreducible generators are accepted.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise RateMatrixError("Q must be a square matrix")
    problems = []
    off = Q.copy()
    np.fill_diagonal(off, 0.0)
    if np.any(off < 0):
        bad = np.argwhere(off < 0)[0]
        problems.append(f"negative off-diagonal entry at ({bad[0]},{bad[1]})")
    scale_ = max(1.0, float(np.abs(Q).max()))
    row_sums = Q.sum(axis=1)
    bad_rows = np.where(np.abs(row_sums) > ROW_SUM_INPUT_TOL * scale_)[0]
    if bad_rows.size:
        problems.append(
            f"row {bad_rows[0]} sums to {row_sums[bad_rows[0]]:g}, expected 0"
        )
    if problems:
        raise RateMatrixError("invalid rate matrix: " + "; ".join(problems))
    norm = off.copy()
    np.fill_diagonal(norm, -off.sum(axis=1))
    norm.flags.writeable = False
    n = Q.shape[0]
    strictly_positive = bool(np.all(off[~np.eye(n, dtype=bool)] > 0)) if n > 1 else True
    if not strictly_positive:
        warnings.warn(
            "rate matrix has vanishing off-diagonal entries; results assume "
            "irreducibility only",
            stacklevel=2,
        )
    return RateMatrix(Q=norm, strictly_positive=strictly_positive)


def _check_irreducible(Q: np.ndarray):
    n_comp, _ = connected_components(
        csr_matrix(Q > 0), directed=True, connection="strong"
    )
    if n_comp != 1:
        raise ReducibleChainError("rate matrix is reducible")


def stationary_law(Q: RateMatrix) -> ChainStationaryLaw:
    """Solve pi Q = 0, sum(pi) = 1 by a dense solve (the normalization
    condition replaces one of the redundant balance equations)."""
    _check_irreducible(Q.Q)
    n = Q.n
    # pi Q = 0  <=>  Q^T pi^T = 0; replace the last equation by sum = 1.
    M = Q.Q.T.copy()
    M[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(M, rhs)
    residual = float(np.abs(pi @ Q.Q).max())
    if residual > 1e-10:
        raise RateMatrixError(f"stationary solve residual too large: {residual:g}")
    return ChainStationaryLaw(pi=pi)


def scale(Q: RateMatrix, lam: float) -> RateMatrix:
    """lambda * Q: faster jumps, same transition probabilities and
    therefore the same stationary law."""
    if not lam > 0:
        raise RateMatrixError("scaling factor must be positive")
    return RateMatrix(Q=Q.Q * lam, strictly_positive=Q.strictly_positive)


def chain_rng(seed, stream=None) -> np.random.Generator:
    """Counter-based generator; ``stream`` derives an independent
    per-trajectory stream from the same base seed."""
    entropy = (int(seed),) if stream is None else (int(seed), int(stream))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def sample_next(rng, Q: np.ndarray, i: int) -> tuple[float, int]:
    """Draw (holding time in state i, next state)."""
    rate = -Q[i, i]
    if rate <= 0:
        raise RateMatrixError(f"state {i} is absorbing")
    hold = rng.standard_exponential() / rate
    probs = Q[i].copy()
    probs[i] = 0.0
    cum = np.cumsum(probs / rate)
    nxt = int(np.searchsorted(cum, rng.random(), side="right"))
    return hold, min(nxt, len(cum) - 1)


def sample_chain(Q: RateMatrix, i0: int, horizon: float, seed) -> SwitchingRecord:
    """Simulate the jump chain on [0, horizon); the last holding time is
    truncated at the horizon.  Deterministic given the seed."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if not 0 <= i0 < Q.n:
        raise ValueError("start state out of range")
    rng = chain_rng(seed)
    states = [i0]
    holds = []
    t = 0.0
    i = i0
    while True:
        hold, nxt = sample_next(rng, Q.Q, i)
        if t + hold >= horizon:
            holds.append(horizon - t)
            break
        holds.append(hold)
        states.append(nxt)
        t += hold
        i = nxt
    return SwitchingRecord(
        states=np.array(states, dtype=np.int64),
        holds=np.array(holds, dtype=float),
        start_state=i0,
    )
