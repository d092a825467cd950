"""Stationary density and the slow-switching singularity at the origin.

With exit rate 1.5 out of the rotating state (below the contraction
budget R = 2), occupation mass piles up near the origin in state 1: the
mass ratio m(r) grows as r shrinks, with a clearly negative log-log
slope.  Scaling the rates up (here by 30) removes the effect.  Budgets
are kept small so the demo runs in under a minute; the acceptance suite
runs the full-size version.
"""

import numpy as np

from pdmplab import GammaCandidate, blowup_exponent, compute_R, full_verdict
from pdmplab.density import blowup_from_simulation
from pdmplab.rotcontract import make_box, make_config, make_fields, make_rate_matrix

radii = [0.2, 0.1, 0.05, 0.025]
cfg = make_config(q1=1.5, q2=2.0, horizon=400.0, burn_in=50.0, step=0.01,
                  seed=5)
print("slow switching (-Q_11 = 1.5 <= R = 2):")
report, _ = blowup_from_simulation(cfg, center=np.zeros(2), state=0,
                                   radii=radii, trajectories=400)
for r, m in zip(report.radii, report.mass_ratio):
    print(f"  m({r:5.3f}) = {m:9.4f}")
print(f"  slope {report.slope:.3f}, R^2 {report.r_squared:.3f} "
      f"-> verdict {report.verdict}")

fast = make_config(q1=1.5, q2=2.0, lam=30.0, horizon=400.0, burn_in=50.0,
                   step=0.01, seed=5)
print("\nfaster switching (rates x30):")
try:
    fast_rep, _ = blowup_from_simulation(fast, center=np.zeros(2), state=0,
                                         radii=radii, trajectories=400)
    print(f"  verdict {fast_rep.verdict} (slope {fast_rep.slope}) "
          f"note: {fast_rep.note or '-'}")
except Exception as exc:  # under-powered small demo budgets can land here
    print(f"  {exc}")

print("\nformal candidate-set verdict at Gamma = {0}, state 1:")
v, w = make_fields()
cand = GammaCandidate(points=[[0.0, 0.0]], state=0, neighborhood_radius=0.2)
verdict = full_verdict(cand, (v, w), make_rate_matrix(1.5, 2.0), make_box(),
                       accessibility_trials=40, accessibility_horizon=25.0,
                       seed=1)
print(f"  clauses: {verdict.clauses}")
print(f"  R = {verdict.R}, -Q_11 = {verdict.minus_Q_ii}, "
      f"prediction: {verdict.prediction}")

print("\nexit-rate exponent along the backward orbit at 0 "
      "(slope = Q_11 + 2):")
for q1 in (1.0, 2.0, 4.0):
    samples = blowup_exponent(np.zeros(2), v, make_rate_matrix(q1, 2.0),
                              state=0, s_max=2.0, n_samples=4)
    print(f"  -Q_11 = {q1}: exponent at s=2 -> {samples[-1, 1]: .4f}")
print("nonnegative for all s exactly when -Q_11 <= R = ", compute_R([[0, 0]], v))
