"""The jump chain on its own: generator validation, stationary law,
rate scaling, and a long sampled path's occupation statistics."""

import numpy as np

from pdmplab import sample_chain, scale, stationary_law, validate_rate_matrix

Q = validate_rate_matrix([[-1.0, 1.0], [2.0, -2.0]])
law = stationary_law(Q)
print("Q =\n", Q.Q)
print("stationary law:", law.pi, "(exact: 2/3, 1/3)")
print("residual |pi Q|:", np.abs(law.pi @ Q.Q).max())

print("\nscaling by 10 keeps the law:")
print("  law(10 Q) =", stationary_law(scale(Q, 10.0)).pi)

rec = sample_chain(Q, i0=0, horizon=20000.0, seed=42)
frac = rec.occupation_fractions(2)
print(f"\nsampled path: {len(rec.states)} visits over horizon 2e4")
print(f"occupation fractions {frac} vs law {law.pi}")

holds0 = rec.holds[:-1][rec.states[:-1] == 0]
holds1 = rec.holds[:-1][rec.states[:-1] == 1]
print(f"mean holds: state 1 -> {holds0.mean():.4f} (expect 1.0), "
      f"state 2 -> {holds1.mean():.4f} (expect 0.5)")
