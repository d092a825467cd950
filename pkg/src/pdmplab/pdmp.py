"""Coupled simulation of (X_t, I_t): ODE motion with random state switches.

The Monte Carlo core integrates whole chunks of trajectories at once with
numpy (fixed-step RK4, every switch landed exactly, never stepping across
a jump).  Each trajectory draws from its own counter-based stream keyed
by (seed, index), chunk boundaries are fixed regardless of the worker
count, and chunk results merge in index order, so every estimate is
bitwise-identical for 1 or N workers.

Occupation statistics are gathered by "sinks": objects that see every
integration step (midpoint, duration, burn-in-clipped weight) and every
jump event, and whose per-chunk states merge commutatively.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .switching import RateMatrix, SwitchingRecord, chain_rng, stationary_law
from .vecfield import VectorFieldSpec

__all__ = [
    "Box",
    "PdmpConfig",
    "Trajectory",
    "TrajectorySummary",
    "BoxExitError",
    "SimulationError",
    "simulate",
    "simulate_batch",
    "run_batch",
    "regeneration_samples",
    "StateOccupationSink",
    "GridSink",
    "BallMassSink",
    "HitSink",
    "PathDeviationSink",
    "RegenerationSink",
    "CHUNK_SIZE",
    "DEFAULT_SIM_STEP",
]

CHUNK_SIZE = 2048
DEFAULT_SIM_STEP = 1e-3


class SimulationError(RuntimeError):
    pass


class BoxExitError(SimulationError):
    """A trajectory left the declared bounding box of M."""

    def __init__(self, exits):
        self.exits = exits  # list of (trajectory index, time, 0-based state)
        idx, t, s = exits[0]
        more = f" (+{len(exits) - 1} more)" if len(exits) > 1 else ""
        super().__init__(
            f"trajectory {idx} left the box at t={t:.6g} in state {s + 1}{more}"
        )


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def make(cls, bounds) -> "Box":
        arr = np.asarray(bounds, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("box must be a list of (lo, hi) pairs")
        lo, hi = arr[:, 0].copy(), arr[:, 1].copy()
        if np.any(lo >= hi):
            raise ValueError("box bounds must satisfy lo < hi on every axis")
        lo.flags.writeable = False
        hi.flags.writeable = False
        return cls(lo=lo, hi=hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass(frozen=True, eq=False)
class PdmpConfig:
    """Everything needed to run the switched system."""

    fields: tuple[VectorFieldSpec, ...]
    Q: RateMatrix
    box: Box
    x0: np.ndarray
    i0: int                    # 0-based start state
    horizon: float
    burn_in: float | None = None
    step: float = DEFAULT_SIM_STEP
    seed: int = 0

    def __post_init__(self):
        if len(self.fields) != self.Q.n:
            raise ValueError("need one vector field per chain state")
        if not 0 <= self.i0 < self.Q.n:
            raise ValueError("start state out of range")
        if not self.box.contains(self.x0):
            raise ValueError("x0 must lie inside the box")
        if not self.horizon > 0 or not self.step > 0:
            raise ValueError("horizon and step must be positive")

    def effective_burn_in(self) -> float:
        if self.burn_in is not None:
            return self.burn_in
        lam_min = float(self.Q.rates().min())
        return max(100.0, 10.0 / lam_min)

    def with_seed(self, seed: int) -> "PdmpConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True, eq=False)
class Trajectory:
    record: SwitchingRecord
    jump_times: np.ndarray
    jump_positions: np.ndarray       # position at each jump time
    sample_times: np.ndarray         # dense output grid (may be empty)
    sample_states: np.ndarray        # 0-based
    sample_positions: np.ndarray
    box_exit: bool
    exit_time: float | None = None


@dataclass(frozen=True, eq=False)
class TrajectorySummary:
    index: int
    final_position: np.ndarray
    final_state: int
    n_jumps: int
    occupation: np.ndarray           # time per state over [burn_in, horizon]
    box_exit: bool


# ---------------------------------------------------------------------------
# sinks
#
# Protocol: new_state(d, n) -> chunk state;
#   add_steps(state, t_mid, dt, w, mid, states, idx)   (rows with dt > 0)
#   on_jumps(state, t, new_states, pos, idx)           (optional)
#   check_positions(state, t, pos, states, idx)        (optional, includes t=0)
#   merge(list of chunk states in index order) -> merged state


class StateOccupationSink:
    """Time per state over the recording window, plus sample counters."""

    def new_state(self, d, n):
        return {"time": np.zeros(n), "count": 0, "total_time": 0.0}

    def add_steps(self, st, t_mid, dt, w, mid, states, idx):
        np.add.at(st["time"], states, w)
        st["count"] += int(np.count_nonzero(w))
        st["total_time"] += float(w.sum())

    def merge(self, chunks):
        return {
            "time": np.sum([c["time"] for c in chunks], axis=0),
            "count": int(sum(c["count"] for c in chunks)),
            "total_time": float(sum(c["total_time"] for c in chunks)),
        }


class GridSink:
    """Per-state d-dimensional time-weighted histogram over a box.

    With ``clip=True`` (the default, for grids covering the whole
    simulation box) boundary roundoff lands in the edge cells; with
    ``clip=False`` the grid may be a zoomed sub-box and samples outside
    it are dropped.
    """

    def __init__(self, box: Box, cells_per_axis: int, clip: bool = True):
        self.box = box
        self.cells = int(cells_per_axis)
        self.scale = self.cells / (box.hi - box.lo)
        self.clip = clip

    def new_state(self, d, n):
        return np.zeros((n,) + (self.cells,) * d)

    def add_steps(self, st, t_mid, dt, w, mid, states, idx):
        c = self.cells
        raw = (mid - self.box.lo) * self.scale
        if not self.clip:
            inside = np.all((raw >= 0.0) & (raw < c), axis=1) & (w > 0)
            if not np.any(inside):
                return
            raw = raw[inside]
            states = states[inside]
            w = w[inside]
        cell = np.clip(raw.astype(np.int64), 0, c - 1)
        flat = states
        for j in range(cell.shape[1]):
            flat = flat * c + cell[:, j]
        st.reshape(-1)[:] += np.bincount(flat, weights=w, minlength=st.size)

    def merge(self, chunks):
        return np.sum(chunks, axis=0)


class BallMassSink:
    """Occupation time of the balls B(center, r) x {state}, streamed.

    Mathematically identical to filtering the raw midpoint sub-samples
    and summing their weights per radius.
    """

    def __init__(self, center, radii, state: int):
        self.center = np.asarray(center, dtype=float)
        self.radii = np.asarray(sorted(radii, reverse=True), dtype=float)
        self.state = int(state)

    def new_state(self, d, n):
        return {"mass": np.zeros(len(self.radii)), "hits": 0}

    def add_steps(self, st, t_mid, dt, w, mid, states, idx):
        sel = (states == self.state) & (w > 0)
        if not np.any(sel):
            return
        dist2 = ((mid[sel] - self.center) ** 2).sum(axis=1)
        wsel = w[sel]
        r_max = self.radii[0]
        near = dist2 <= r_max * r_max
        if not np.any(near):
            return
        dist2 = dist2[near]
        wsel = wsel[near]
        st["hits"] += int(dist2.size)
        for j, r in enumerate(self.radii):
            st["mass"][j] += float(wsel[dist2 <= r * r].sum())

    def merge(self, chunks):
        return {
            "mass": np.sum([c["mass"] for c in chunks], axis=0),
            "hits": int(sum(c["hits"] for c in chunks)),
        }


class HitSink:
    """Whether each trajectory ever enters B(target, radius)."""

    def __init__(self, target, radius: float):
        self.target = np.asarray(target, dtype=float)
        self.radius = float(radius)

    def new_state(self, d, n):
        return set()

    def add_steps(self, st, t_mid, dt, w, mid, states, idx):
        d2 = ((mid - self.target) ** 2).sum(axis=1)
        st.update(int(k) for k in idx[d2 <= self.radius**2])

    def check_positions(self, st, t, pos, states, idx):
        d2 = ((pos - self.target) ** 2).sum(axis=1)
        st.update(int(k) for k in idx[d2 <= self.radius**2])

    def merge(self, chunks):
        out = set()
        for c in chunks:
            out |= c
        return out


class PathDeviationSink:
    """Sup distance of each trajectory from a reference path (piecewise
    linear in time); used for averaged-flow shadowing checks."""

    def __init__(self, ref_times, ref_path):
        self.ref_times = np.asarray(ref_times, dtype=float)
        self.ref_path = np.asarray(ref_path, dtype=float)

    def new_state(self, d, n):
        return {}

    def add_steps(self, st, t_mid, dt, w, mid, states, idx):
        ref = np.empty_like(mid)
        for j in range(mid.shape[1]):
            ref[:, j] = np.interp(t_mid, self.ref_times, self.ref_path[:, j])
        dist = np.sqrt(((mid - ref) ** 2).sum(axis=1))
        for k, dv in zip(idx, dist):
            key = int(k)
            if dv > st.get(key, 0.0):
                st[key] = float(dv)

    def merge(self, chunks):
        out = {}
        for c in chunks:
            for k, v in c.items():
                if v > out.get(k, 0.0):
                    out[k] = v
        return out


class RegenerationSink:
    """Cycle decomposition at entries into a marked state.

    A cycle starts at a (post burn-in) jump into ``mark``; until the next
    entry every step's occupation goes into that cycle's coarse
    histogram.  Jumps land exactly on step boundaries, so cycles split
    cleanly.  Finished cycles carry (trajectory, start, duration, entry
    position, histogram of shape (n, cells, .., cells)).
    """

    def __init__(self, box: Box, cells_per_axis: int, mark: int, burn_in: float):
        self.box = box
        self.cells = int(cells_per_axis)
        self.mark = int(mark)
        self.burn_in = float(burn_in)

    def new_state(self, d, n):
        return {"arrays": None, "done": [], "shape": (n,) + (self.cells,) * d}

    def _ensure(self, st, K, d):
        if st["arrays"] is None:
            st["arrays"] = {
                "in": np.zeros(K, dtype=bool),
                "start": np.zeros(K),
                "entry": np.zeros((K, d)),
                "hist": np.zeros((K, int(np.prod(st["shape"])))),
            }

    def add_steps(self, st, t_mid, dt, w, mid, states, idx):
        self._ensure(st, len(states), mid.shape[1])
        a = st["arrays"]
        sel = a["in"] & (dt > 0)
        if not np.any(sel):
            return
        lo, hi = self.box.lo, self.box.hi
        frac = (mid[sel] - lo) / (hi - lo)
        cell = np.clip((frac * self.cells).astype(np.int64), 0, self.cells - 1)
        flat = np.ravel_multi_index(
            (states[sel],) + tuple(cell[:, j] for j in range(cell.shape[1])),
            st["shape"],
        )
        np.add.at(a["hist"], (np.flatnonzero(sel), flat), dt[sel])

    def on_jumps(self, st, t, new_states, pos, idx, rows):
        self._ensure(st, len(idx), pos.shape[1])
        a = st["arrays"]
        for j in np.flatnonzero((new_states == self.mark) & (t >= self.burn_in)):
            r = int(rows[j])
            if a["in"][r]:
                st["done"].append((
                    int(idx[r]),
                    float(a["start"][r]),
                    float(t[j]) - float(a["start"][r]),
                    a["entry"][r].copy(),
                    a["hist"][r].reshape(st["shape"]).copy(),
                ))
            a["in"][r] = True
            a["start"][r] = t[j]
            a["entry"][r] = pos[j]
            a["hist"][r] = 0.0

    def merge(self, chunks):
        out = [cyc for c in chunks for cyc in c["done"]]
        out.sort(key=lambda c: (c[0], c[1]))
        return out


# ---------------------------------------------------------------------------
# chunk engine


def _eval_states(fields, X, masks):
    """Evaluate field[i] on the rows whose state is i."""
    if len(fields) == 2:
        return np.where(
            masks[0][:, None], fields[0].eval_rows(X), fields[1].eval_rows(X)
        )
    out = np.empty_like(X)
    for i, f in enumerate(fields):
        m = masks[i]
        if m.any():
            out[m] = f.eval_rows(X[m])
    return out


class _JumpStreams:
    """Per-trajectory buffered (Exp(1), U[0,1)) draws.

    Each trajectory consumes only its own stream, so results do not
    depend on how trajectories are grouped into chunks.
    """

    def __init__(self, seed, start_idx, K, expected_jumps):
        self.gens = [chain_rng(seed, start_idx + k) for k in range(K)]
        self.B = int(np.clip(expected_jumps / 4.0, 64, 4096))
        self.ebuf = np.empty((K, self.B))
        self.ubuf = np.empty((K, self.B))
        self.ptr = np.full(K, self.B, dtype=np.int64)

    def draw(self, rows):
        need = rows[self.ptr[rows] >= self.B]
        for k in need:
            g = self.gens[k]
            self.ebuf[k] = g.standard_exponential(self.B)
            self.ubuf[k] = g.random(self.B)
            self.ptr[k] = 0
        p = self.ptr[rows]
        e = self.ebuf[rows, p]
        u = self.ubuf[rows, p]
        self.ptr[rows] = p + 1
        return e, u


def _next_states(u, states, cum):
    nxt = (cum[states] <= u[:, None]).sum(axis=1)
    return np.minimum(nxt, cum.shape[1] - 1)


@dataclass
class _ChunkTask:
    cfg: PdmpConfig
    start_idx: int
    count: int
    sinks: tuple
    sample_dt: float | None
    record: bool
    tolerate_exit: bool
    need_summaries: bool = True


def _run_chunk(task: _ChunkTask):
    cfg = task.cfg
    fields, Qm = cfg.fields, cfg.Q.Q
    n = len(fields)
    d = cfg.box.dim
    K = task.count
    rates = cfg.Q.rates()
    # zero-rate states never jump (degenerate no-switching dynamics)
    safe_rates = np.where(rates > 0, rates, 1.0)
    P = Qm.copy()
    np.fill_diagonal(P, 0.0)
    cum = np.cumsum(P / safe_rates[:, None], axis=1)

    streams = _JumpStreams(cfg.seed, task.start_idx, K,
                           expected_jumps=cfg.horizon * float(rates.max()))
    horizon, step, burn_in = cfg.horizon, cfg.step, cfg.effective_burn_in()

    pos = np.tile(np.asarray(cfg.x0, dtype=float), (K, 1))
    state = np.full(K, cfg.i0, dtype=np.int64)
    t = np.zeros(K)
    rows_all = np.arange(K)
    idx = np.arange(task.start_idx, task.start_idx + K, dtype=np.int64)
    e0, u0 = streams.draw(rows_all)
    next_jump = np.where(rates[state] > 0, e0 / safe_rates[state], np.inf)
    pending_next = _next_states(u0, state, cum)
    n_jumps = np.zeros(K, dtype=np.int64)
    occ_traj = np.zeros((K, n)) if task.need_summaries else None
    exited = np.zeros(K, dtype=bool)
    exit_info = []

    # all-affine systems: gather each row's (A, b) once per jump instead of
    # masking per stage (the switching state is piecewise constant)
    all_affine = all(getattr(f, "is_affine", False) for f in fields)
    if all_affine:
        As = np.stack([f.matrix for f in fields])
        bs = np.stack([f.offset for f in fields])
        Arow = As[state]
        brow = bs[state]

    sink_states = [s.new_state(d, n) for s in task.sinks]
    step_sinks = list(zip(task.sinks, sink_states))
    pos_sinks = [(s, st) for s, st in step_sinks if hasattr(s, "check_positions")]
    jump_sinks = [(s, st) for s, st in step_sinks if hasattr(s, "on_jumps")]
    for s, st in pos_sinks:
        s.check_positions(st, t, pos, state, idx)

    recorder = None
    if task.record:
        if K != 1:
            raise ValueError("recording requires a single-trajectory chunk")
        recorder = {
            "jump_times": [], "jump_positions": [], "jump_states": [],
            "samples": [(0.0, int(state[0]), pos[0].copy())],
        }
    next_sample = np.full(K, task.sample_dt) if task.sample_dt else None

    lo, hi = cfg.box.lo, cfg.box.hi
    # events land within this slack of their exact time; it is far below any
    # physical scale but above accumulated ulp error, which rules out the
    # freeze where t sits just short of an event with a zero-length step
    snap = 1e-9 * step
    active = np.ones(K, dtype=bool)
    while active.any():
        live = active & ~exited
        dt_jump = next_jump - t
        dt_end = horizon - t
        dt = np.minimum(step, np.minimum(dt_jump, dt_end))
        if next_sample is not None:
            dt_sample = next_sample - t
            dt = np.minimum(dt, dt_sample)
        dt = np.maximum(np.where(live, dt, 0.0), 0.0)
        stepped = dt > 0

        half = 0.5 * dt[:, None]
        if all_affine:
            k1 = np.einsum("kij,kj->ki", Arow, pos) + brow
            k2 = np.einsum("kij,kj->ki", Arow, pos + half * k1) + brow
            k3 = np.einsum("kij,kj->ki", Arow, pos + half * k2) + brow
            k4 = np.einsum("kij,kj->ki", Arow, pos + dt[:, None] * k3) + brow
        else:
            masks = [state == i for i in range(n)]
            k1 = _eval_states(fields, pos, masks)
            k2 = _eval_states(fields, pos + half * k1, masks)
            k3 = _eval_states(fields, pos + half * k2, masks)
            k4 = _eval_states(fields, pos + dt[:, None] * k3, masks)
        new_pos = pos + (dt[:, None] / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        # a NaN coordinate fails both box comparisons, so this single mask
        # catches box exits and non-finite states together
        inside = np.all((new_pos >= lo) & (new_pos <= hi), axis=1)
        if not inside.all():
            out = stepped & ~inside
            if np.any(out):
                for k in np.flatnonzero(out):
                    if not np.all(np.isfinite(new_pos[k])):
                        raise SimulationError(
                            f"non-finite state in trajectory {int(idx[k])}"
                        )
                    exit_info.append((int(idx[k]), float(t[k] + dt[k]), int(state[k])))
                if not task.tolerate_exit:
                    raise BoxExitError(exit_info)
                exited |= out
                live = live & ~out
                stepped = stepped & ~out
                new_pos = np.where(out[:, None], pos, new_pos)
                dt = np.where(out, 0.0, dt)

        t1 = t + dt
        w = np.maximum(0.0, np.minimum(t1, horizon) - np.maximum(t, burn_in))
        w = np.where(stepped, w, 0.0)
        mid = 0.5 * (pos + new_pos)
        if bool(w.max() > 0.0):  # inside the recording window
            t_mid = t + 0.5 * dt
            if occ_traj is not None:
                np.add.at(occ_traj, (rows_all, state), w)
            for s, st in step_sinks:
                s.add_steps(st, t_mid, dt, w, mid, state, idx)

        landed = live & (next_jump - t1 <= snap)
        finished = live & ~landed & (horizon - t1 <= snap)
        pos = new_pos
        t = t1
        t[landed] = next_jump[landed]
        t[finished] = horizon

        if next_sample is not None:
            sampled = live & (next_sample - t1 <= snap)
            if np.any(sampled):
                pure = sampled & ~landed & ~finished
                t[pure] = np.maximum(t[pure], next_sample[pure])
                if recorder is not None and sampled[0]:
                    recorder["samples"].append(
                        (float(t[0]), int(state[0]), pos[0].copy())
                    )
                next_sample[sampled] += task.sample_dt

        if pos_sinks and np.any(stepped):
            for s, st in pos_sinks:
                s.check_positions(st, t[stepped], pos[stepped], state[stepped],
                                  idx[stepped])

        if np.any(landed):
            rows = np.flatnonzero(landed)
            state[rows] = pending_next[rows]
            n_jumps[rows] += 1
            if all_affine:
                Arow[rows] = As[state[rows]]
                brow[rows] = bs[state[rows]]
            if recorder is not None:
                recorder["jump_times"].append(float(t[0]))
                recorder["jump_positions"].append(pos[0].copy())
                recorder["jump_states"].append(int(state[0]))
            for s, st in jump_sinks:
                s.on_jumps(st, t[rows], state[rows], pos[rows], idx, rows)
            e, u = streams.draw(rows)
            new_rates = rates[state[rows]]
            next_jump[rows] = np.where(
                new_rates > 0, t[rows] + e / safe_rates[state[rows]], np.inf
            )
            pending_next[rows] = _next_states(u, state[rows], cum)

        active = active & ~exited & (t < horizon)

    if not task.need_summaries:
        return sink_states, [], exit_info, recorder
    summaries = [
        TrajectorySummary(
            index=int(idx[k]),
            final_position=pos[k].copy(),
            final_state=int(state[k]),
            n_jumps=int(n_jumps[k]),
            occupation=occ_traj[k].copy(),
            box_exit=bool(exited[k]),
        )
        for k in range(K)
    ]
    return sink_states, summaries, exit_info, recorder


def run_batch(cfg: PdmpConfig, count: int, workers: int = 1, sinks=(),
              tolerate_exit: bool = False, need_summaries: bool = True):
    """Run ``count`` trajectories; returns (merged sink states, summaries).

    The chunk partition depends only on ``count``; workers only change
    how chunks are executed, never the arithmetic or the merge order.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    sinks = tuple(sinks)
    if count == 0:
        return [s.merge([s.new_state(cfg.box.dim, cfg.Q.n)]) for s in sinks], []
    tasks = [
        _ChunkTask(cfg, start, min(CHUNK_SIZE, count - start), sinks, None,
                   False, tolerate_exit, need_summaries)
        for start in range(0, count, CHUNK_SIZE)
    ]
    if workers <= 1 or len(tasks) == 1:
        results = [_run_chunk(tk) for tk in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, tasks))
    merged = [s.merge([res[0][j] for res in results]) for j, s in enumerate(sinks)]
    summaries = [sm for res in results for sm in res[1]]
    exits = [e for res in results for e in res[2]]
    if exits and not tolerate_exit:
        raise BoxExitError(exits)
    return merged, summaries


def simulate(cfg: PdmpConfig, sample_dt: float | None = None) -> Trajectory:
    """One trajectory with its switching record; dense output every
    ``sample_dt`` if given.  Deterministic given cfg.seed."""
    task = _ChunkTask(cfg, 0, 1, (), sample_dt, True, True)
    _, _, exit_info, rec = _run_chunk(task)
    jump_times = np.array(rec["jump_times"])
    states = np.array([cfg.i0] + rec["jump_states"], dtype=np.int64)
    end = exit_info[0][1] if exit_info else cfg.horizon
    bounds = np.concatenate([[0.0], jump_times, [end]])
    holds = np.diff(bounds)
    if len(holds) > len(states):  # jump landed exactly at the end time
        holds = holds[: len(states)]
    record = SwitchingRecord(states=states, holds=holds, start_state=cfg.i0)
    samples = rec["samples"]
    return Trajectory(
        record=record,
        jump_times=jump_times,
        jump_positions=np.array(rec["jump_positions"]).reshape(-1, cfg.box.dim),
        sample_times=np.array([s[0] for s in samples]),
        sample_states=np.array([s[1] for s in samples], dtype=np.int64),
        sample_positions=np.array([s[2] for s in samples]),
        box_exit=bool(exit_info),
        exit_time=exit_info[0][1] if exit_info else None,
    )


def simulate_batch(cfg: PdmpConfig, count: int, workers: int = 1):
    """Per-trajectory summaries in index order (embarrassingly parallel;
    per-trajectory seed is derived from (cfg.seed, index))."""
    _, summaries = run_batch(cfg, count, workers, sinks=())
    return summaries


def regeneration_samples(cfg: PdmpConfig, mark_state: int, count: int,
                         cells_per_axis: int = 8, workers: int = 1):
    """Entry positions into ``mark_state`` and per-cycle occupation
    histograms between consecutive entries.

    Returns (positions (count, d), histograms (count, n, c, .., c),
    durations (count,)).  Cycles start at post-burn-in jumps into the
    marked state; pooled histograms divided by pooled duration estimate
    the stationary density (stopping-time cycle identity).
    """
    if not 0 <= mark_state < cfg.Q.n:
        raise ValueError("mark state out of range")
    law = stationary_law(cfg.Q)  # raises ReducibleChainError if unreachable
    entry_rate = float(
        sum(law.pi[j] * cfg.Q.Q[j, mark_state]
            for j in range(cfg.Q.n) if j != mark_state)
    )
    window = cfg.horizon - cfg.effective_burn_in()
    if window <= 0:
        raise ValueError("horizon must exceed burn-in")
    per_traj = max(1.0, window * entry_rate - 3.0)
    n_traj = int(np.ceil(count / per_traj * 1.15)) + 1
    sink = RegenerationSink(cfg.box, cells_per_axis, mark_state,
                            cfg.effective_burn_in())
    (cycles,), _ = run_batch(cfg, n_traj, workers, sinks=(sink,),
                             need_summaries=False)
    if len(cycles) < count:
        raise SimulationError(
            f"collected only {len(cycles)} regeneration cycles, wanted {count}"
        )
    cycles = cycles[:count]
    positions = np.array([c[3] for c in cycles])
    hists = np.array([c[4] for c in cycles])
    durations = np.array([c[2] for c in cycles])
    return positions, hists, durations
