"""
Haar-random states and their Gaussian marginals
===============================================

A Haar-random unit vector in C^d looks, coordinate by coordinate, like a
vector of i.i.d. complex Gaussians with variance 1/d. This script checks
that picture numerically and then looks at block sums of the squared
amplitudes, which are what the extractor rounds.
"""

import math

import numpy as np
from scipy import stats

from pseudodet.montecarlo import haar_batch
from pseudodet.states import haar_amplitudes, sample_haar, trace_distance
from pseudodet.stats import binomial_normal_tv, ks_test

rng = np.random.default_rng(2024)

# a single state: unit norm, and its density matrix has trace one
psi = sample_haar(256, rng)
print("norm:", np.linalg.norm(psi.amplitudes))
print("trace distance to itself:", trace_distance(psi, psi))

# Re(alpha_1) over many states should be N(0, 1/(2d))
amps = haar_amplitudes(256, 100_000, rng)
report = ks_test(amps[:, 0].real, stats.norm(0, math.sqrt(1 / 512)).cdf)
print(f"KS statistic {report.statistic:.4f}, p-value {report.p_value:.3f}")

# block sums at d=4096: r = 256 coordinates per block, threshold r/d = 1/16
batch = haar_batch(4096, 5_000, rng)
scaled = batch.q[:, 0] * 2 * 4096
print(f"scaled block sum: mean {scaled.mean():.1f} (expect 512), sd {scaled.std():.1f} (expect 32)")

# the discrete analogue, Binomial(2r, 1/2) against N(r, r/2), closes at rate 1/sqrt(r)
for r in (16, 64, 256):
    print(f"r={r:4d}  TV={binomial_normal_tv(r):.2e}  TV*sqrt(r)={binomial_normal_tv(r) * math.sqrt(r):.4f}")

# how often every block clears the rounding threshold by more than the gap
for d in (64, 4096):
    print(f"d={d}: good-set fraction {haar_batch(d, 5_000, rng).member.mean():.3f}")
