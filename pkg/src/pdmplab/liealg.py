"""Lie brackets of the switchable fields and the rank tests built on them.

The bracket hierarchy is the nested family starting from the generators,
where each new level adds brackets of a generator with an existing word.
Bracket fields evaluate through nested dual-number passes, so they can be
differentiated again (brackets of brackets) without symbolic algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import flow
from .vecfield import Dual, eval_field, directional_derivative

__all__ = [
    "BracketField",
    "RankReport",
    "BracketCapError",
    "lie_bracket",
    "bracket_family",
    "hormander_rank",
    "submersion_rank",
    "submersion_search",
    "accessibility_sample",
    "DEFAULT_RANK_TOL",
    "DEFAULT_WORD_CAP",
]

DEFAULT_RANK_TOL = 1e-8
DEFAULT_WORD_CAP = 512


class BracketCapError(RuntimeError):
    pass


def _primal(x):
    while isinstance(x, Dual):
        x = x.value
    return x


def _deriv_part(o):
    return o.deriv if isinstance(o, Dual) else 0.0


def _directional_generic(f, xs, u):
    """Directional derivative of f at xs along u, at whatever dual level
    the inputs carry."""
    dual_x = [Dual(xv, uv) for xv, uv in zip(xs, u)]
    out = f.eval_generic(dual_x)
    return [_deriv_part(o) for o in out]


@dataclass(frozen=True, eq=False)
class BracketField:
    """A word over the generators: either one generator or [v, w] with v a
    generator and w another word (matching how each bracket level is
    built from the previous one)."""

    dim: int
    word: str
    depth: int
    generator: object = None      # VectorFieldSpec when depth-0 word
    left: object = None           # generator side of [v, w]
    right: object = None          # inner word of [v, w]

    @classmethod
    def from_generator(cls, f) -> "BracketField":
        return cls(dim=f.dim, word=str(f.label), depth=0, generator=f)

    @classmethod
    def bracket(cls, gen_word: "BracketField", inner: "BracketField") -> "BracketField":
        return cls(
            dim=inner.dim,
            word=f"[{gen_word.word},{inner.word}]",
            depth=inner.depth + 1,
            left=gen_word,
            right=inner,
        )

    def eval_generic(self, xs):
        if self.generator is not None:
            return self.generator.eval_generic(xs)
        vx = self.left.eval_generic(xs)
        wx = self.right.eval_generic(xs)
        dwv = _directional_generic(self.right, xs, vx)
        dvw = _directional_generic(self.left, xs, wx)
        return [a - b for a, b in zip(dwv, dvw)]


@dataclass(frozen=True, eq=False)
class RankReport:
    point: np.ndarray
    depth: int
    singular_values: np.ndarray
    rank: int
    verdict: str                 # "full" | "deficient"
    rank_tol: float
    words: tuple[str, ...] = ()

    def to_dict(self):
        return {
            "point": [float(v) for v in self.point],
            "depth": int(self.depth),
            "singular_values": [float(s) for s in self.singular_values],
            "rank": int(self.rank),
            "verdict": self.verdict,
            "rank_tol": float(self.rank_tol),
            "words": list(self.words),
        }


def lie_bracket(v, w, x) -> np.ndarray:
    """[v, w](x) = Dw(x) v(x) - Dv(x) w(x), exact via dual passes."""
    x = np.asarray(x, dtype=float)
    vx = eval_field(v, x)
    wx = eval_field(w, x)
    dwv = directional_derivative(w, x, vx).derivative
    dvw = directional_derivative(v, x, wx).derivative
    return dwv - dvw


def bracket_family(fields, depth: int, cap: int = DEFAULT_WORD_CAP):
    """All bracket words up to the given level, without duplicate words.

    With n generators the word count follows W_0 = n, W_1 = n^2,
    W_{k+1} = W_k + n (W_k - W_{k-1}): only brackets with the previous
    level's new words add anything, and [v, v] of a bare generator is
    skipped as identically zero.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    gens = [BracketField.from_generator(f) for f in fields]
    words = {g.word: g for g in gens}
    fresh = list(gens)
    for _ in range(depth):
        new = []
        for g in gens:
            for w in fresh:
                if w.word == g.word:
                    continue  # [v, v] = 0
                cand = f"[{g.word},{w.word}]"
                if cand in words:
                    continue
                bf = BracketField.bracket(g, w)
                words[cand] = bf
                new.append(bf)
                if len(words) > cap:
                    raise BracketCapError(
                        f"bracket family exceeds the cap of {cap} words"
                    )
        fresh = new
        if not fresh:
            break
    return list(words.values())


def _rank_from_matrix(M: np.ndarray, d: int, rank_tol: float):
    if M.size == 0:
        return np.zeros(0), 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0:
        return sv, 0
    rank = int(np.sum(sv > rank_tol * sv[0]))
    return sv, rank


def hormander_rank(fields, x, depth: int, rank_tol: float = DEFAULT_RANK_TOL,
                   cap: int = DEFAULT_WORD_CAP) -> RankReport:
    """Numerical rank of the span of all bracket words up to ``depth`` at
    x.  depth=1 is the first-level bracket test; larger depths
    approximate the full hierarchy."""
    x = np.asarray(x, dtype=float)
    fam = bracket_family(fields, depth, cap)
    M = np.array([[_primal(v) for v in bf.eval_generic(list(x))] for bf in fam])
    sv, rank = _rank_from_matrix(M, len(x), rank_tol)
    return RankReport(
        point=x,
        depth=depth,
        singular_values=sv,
        rank=rank,
        verdict="full" if rank == len(x) else "deficient",
        rank_tol=rank_tol,
        words=tuple(bf.word for bf in fam),
    )


def submersion_time_jacobian(fields, xi, x, times, step: float = 1e-3) -> np.ndarray:
    """d x L Jacobian of the composite map with respect to the segment
    durations: column k is the chain of remaining segment Jacobians
    applied to the running field at the k-th intermediate point."""
    if len(xi) != len(times):
        raise ValueError("state word and durations must have equal length")
    x = np.asarray(x, dtype=float)
    L = len(xi)
    pts = [x]
    segJ = []
    for i, tk in zip(xi, times):
        res = flow(fields[i], pts[-1], tk, step, with_jacobian=True)
        pts.append(res.endpoint)
        segJ.append(res.jacobian)
    d = len(x)
    cols = np.empty((d, L))
    suffix = np.eye(d)
    for k in range(L - 1, -1, -1):
        cols[:, k] = suffix @ eval_field(fields[xi[k]], pts[k + 1])
        suffix = suffix @ segJ[k]
    return cols


def submersion_rank(fields, xi, x, times, step: float = 1e-3,
                    rank_tol: float = DEFAULT_RANK_TOL) -> RankReport:
    """Rank of the duration-Jacobian of the composite map: full rank means
    the map t -> Phi^xi(x, t) is a submersion at these durations."""
    J = submersion_time_jacobian(fields, xi, x, times, step)
    x = np.asarray(x, dtype=float)
    sv, rank = _rank_from_matrix(J.T, len(x), rank_tol)
    return RankReport(
        point=x,
        depth=len(xi),
        singular_values=sv,
        rank=rank,
        verdict="full" if rank == len(x) else "deficient",
        rank_tol=rank_tol,
        words=(",".join(str(i + 1) for i in xi),),
    )


def submersion_search(fields, xi, x, time_grid, step: float = 1e-3,
                      rank_tol: float = DEFAULT_RANK_TOL):
    """Scan candidate duration vectors and keep the best-conditioned one
    (largest smallest singular value).  Returns (best report, best times)."""
    best = None
    best_times = None
    for times in time_grid:
        rep = submersion_rank(fields, xi, x, times, step, rank_tol)
        score = rep.singular_values[-1] if rep.singular_values.size else 0.0
        if best is None or score > (best.singular_values[-1] if best.singular_values.size else 0.0):
            best = rep
            best_times = list(times)
    if best is None:
        raise ValueError("empty time grid")
    return best, best_times


def accessibility_sample(fields, Q, x, target, radius: float, trials: int,
                         horizon: float, seed, box=None, step: float = 1e-2,
                         workers: int = 1) -> float:
    """Fraction of switched trajectories from x entering B(target, radius)
    before the horizon.  A positive fraction witnesses reachability;
    zero proves nothing (strictly one-sided evidence)."""
    from .pdmp import Box, HitSink, PdmpConfig, run_batch

    if radius <= 0:
        raise ValueError("radius must be positive")
    if trials <= 0:
        return 0.0
    x = np.asarray(x, dtype=float)
    if box is None:
        lo = np.minimum(x, np.asarray(target, dtype=float)) - 10.0
        hi = np.maximum(x, np.asarray(target, dtype=float)) + 10.0
        box = Box(lo=lo, hi=hi)
    if horizon <= 0:
        return float(np.linalg.norm(x - np.asarray(target)) <= radius)
    cfg = PdmpConfig(
        fields=tuple(fields), Q=Q, box=box, x0=x, i0=0,
        horizon=horizon, burn_in=0.0, step=step, seed=int(seed),
    )
    sink = HitSink(target, radius)
    (hits,), _ = run_batch(cfg, trials, workers, sinks=(sink,),
                           tolerate_exit=True, need_summaries=False)
    return len(hits) / trials
