"""Simulating the switched process itself.

One densely sampled trajectory, a reproducibility check, and a batch of
trajectories whose occupation fractions converge to the chain law.
"""

import numpy as np

from pdmplab import simulate, simulate_batch, stationary_law
from pdmplab.rotcontract import make_config

cfg = make_config(q1=1.5, q2=2.0, horizon=50.0, burn_in=10.0, step=0.01,
                  seed=7)

traj = simulate(cfg, sample_dt=5.0)
print(f"one trajectory: {len(traj.jump_times)} switches, "
      f"box exit: {traj.box_exit}")
print("t      state  position")
for t, s, x in zip(traj.sample_times, traj.sample_states,
                   traj.sample_positions):
    print(f"{t:6.1f}  {s + 1}      ({x[0]: .4f}, {x[1]: .4f})")

again = simulate(cfg, sample_dt=5.0)
print("\nsame seed reproduces the path bit for bit:",
      np.array_equal(traj.sample_positions, again.sample_positions))

summaries = simulate_batch(cfg, count=512)
occ = np.sum([s.occupation for s in summaries], axis=0)
law = stationary_law(cfg.Q).pi
print(f"\n512 trajectories, occupation fractions {occ / occ.sum()}")
print(f"chain stationary law              {law}")
print("max |final position| over the batch:",
      max(np.linalg.norm(s.final_position) for s in summaries),
      "(the closed unit disc is invariant)")
