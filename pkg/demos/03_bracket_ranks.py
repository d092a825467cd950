"""Bracket geometry of the rotate/contract pair.

The first bracket [v, w] is the constant field (1, 1), so the first-level
span is full rank everywhere except at e0 = (1, 0), where v, w and the
bracket all line up with (1, 1).  A composite word alternating the two
fields is a submersion in its switching times at generic points.
"""

import numpy as np

from pdmplab import bracket_family, hormander_rank, lie_bracket, submersion_rank
from pdmplab.liealg import submersion_search
from pdmplab.rotcontract import make_fields

v, w = make_fields()

print("[v, w](x) at a few points (constant -A e0 = (1,1)):")
for x in ([0.0, 0.0], [0.5, -0.5], [0.9, 0.1]):
    print(f"  x={x}: {lie_bracket(v, w, x)}")

print("\nbracket words up to level 2:")
for bf in bracket_family((v, w), 2):
    print(f"  depth {bf.depth}: {bf.word}")

print("\nfirst-level rank across the disc:")
for x in ([1.0, 0.0], [0.0, 0.0], [0.5, 0.5], [-0.7, 0.1]):
    rep = hormander_rank((v, w), x, depth=1)
    print(f"  x={x}: rank {rep.rank} ({rep.verdict}), "
          f"sigma = {np.round(rep.singular_values, 4)}")

print("\nsubmersion in the switching times, word (1,2,1):")
x = np.array([0.4, 0.1])
for times in ([0.05, 0.4, 0.05], [0.01, 0.01, 0.01]):
    rep = submersion_rank((v, w), [0, 1, 0], x, times)
    print(f"  times {times}: rank {rep.rank}, "
          f"sigma_min = {rep.singular_values[-1]:.4f}")

grid = [[a, b, a] for a in (0.01, 0.05, 0.2) for b in (0.05, 0.2, 0.5)]
best, best_t = submersion_search((v, w), [0, 1, 0], x, grid)
print(f"best-conditioned times over a grid: {best_t} "
      f"(sigma_min {best.singular_values[-1]:.4f})")
