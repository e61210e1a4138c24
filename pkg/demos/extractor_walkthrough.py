"""
Rounding a state to bits
========================

The extractor reads the diagonal of a state (through a tomography
surrogate), sums it in ell blocks of r coordinates and outputs 1 for each
block whose mass exceeds r/d. States whose block sums sit far from the
threshold give the same bits on every run.
"""

import numpy as np

from pseudodet.extractor import canonical_f, derive_params, extract, good_set_check
from pseudodet.states import basis_state, sample_haar, uniform_superposition
from pseudodet.tomography import Backend, TomographyConfig, required_shots, snapshot

params = derive_params(64)
print(params)

# all mass on the first coordinate lands in block 0
print("basis state ->", canonical_f(basis_state(64), params).bits)

# the uniform state sits exactly on every threshold: ties round to 0 and are flagged
out = canonical_f(uniform_superposition(64), params)
print("uniform state ->", out.bits, "ties:", out.ties)

# the Hoeffding shot count for accuracy delta with failure probability 1%
shots = required_shots(64, params.delta, 0.01)
print("shots needed at d=64:", shots)

rng = np.random.default_rng(7)
while True:
    psi = sample_haar(64, rng)
    rep = good_set_check(psi, params)
    if rep.member:
        break
print("block sums", rep.q, "closest approach to threshold", rep.min_gap)

# three tomography surrogates on the same good state
for cfg in (TomographyConfig.exact(),
            TomographyConfig(Backend.BOUNDED_NOISE, params.delta),
            TomographyConfig.auto(64, params.delta)):
    outs = {extract(psi, cfg, params, rng).bits for _ in range(20)}
    print(f"{cfg.backend.value:>18}: outputs over 20 runs {sorted(outs)}")

# with too few shots the warning fires and the snapshot is marked undersampled
import warnings
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    snap = snapshot(psi, TomographyConfig(Backend.MULTINOMIAL, params.delta, 500), rng)
print("undersampled:", snap.undersampled, "|", caught[0].message if caught else "")
