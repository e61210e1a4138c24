"""
Commitment with a fuzzy generator, and why it stays binding
===========================================================

The receiver sends r; the committer sends G(k_i), or G(k_i) XOR r, for
lambda seeds. Opening both ways needs G(k) XOR G(k') = r in most blocks.
For r outside a small bad set that collision happens with probability at
most 1/2 per block, so double opening decays exponentially in lambda.
"""

import numpy as np

from pseudodet.protocols import (
    SyntheticGenerator,
    ToyGenerator,
    bad_set,
    binding_search,
    collision_table,
    double_open_probability,
    run_commitment,
    xi,
)

rng = np.random.default_rng(9)

G = SyntheticGenerator.for_agreement(3 * 30, 0.9)
verdicts = [run_commitment(30, 1, G, rng).verdict.value for _ in range(300)]
print("honest openings accepted:", verdicts.count("1"), "/ 300")
t = run_commitment(30, 0, G, rng, adversary="flip-seeds")
print("flipped seeds:", t.verdict.value, "with", t.matches, "matching blocks")

# a toy generator with 16 keys and explicit output distributions
toy = ToyGenerator.random(4, rng)
bad = bad_set(toy)
print(f"|Bad| = {len(bad)} of {2 ** 12} strings (bound {2 ** 8})")

table = collision_table(toy)
off = np.ones(table.size, bool)
off[list(bad)] = False
print("largest collision probability off Bad:", table[off].max())
print("best pair for a bad r:", binding_search(toy, next(iter(bad))))

# the committer picks the best pair for the r it receives
print("double-open probability:", double_open_probability(toy))
for lam in (4, 12, 30, 60):
    print(f"lambda={lam:3d}: xi(lambda, 1/2) = {xi(lam, 0.5):.2e}")
