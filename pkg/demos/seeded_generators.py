"""
Seeded generators and XOR amplification
=======================================

A seed picks a pseudorandom-looking state; extracting it gives a string
that is fixed for most seeds. XOR-ing s such strings trades determinism for
uniformity, and a keyed family with an input gives a PRF-like object.
"""

from collections import Counter

import numpy as np

from pseudodet.experiments import amplification_curve
from pseudodet.generators import QprgConfig, qprf, sqprg, wqprg
from pseudodet.rng import random_bits
from pseudodet.tomography import Backend, TomographyConfig

rng = np.random.default_rng(11)

exact = QprgConfig(lam=8, dim=64)
seed = "10110010"
print("wqprg(seed):", wqprg(seed, exact).bits.bits)
print("sqprg([k, k]):", sqprg([seed, seed], QprgConfig(lam=8, s=2, dim=64)).bits.bits)

# with finite shots the output varies a little between runs
noisy = QprgConfig(lam=8, dim=64, tomo=TomographyConfig(Backend.MULTINOMIAL, 1 / 1024, 2000))
print("20 noisy runs:", Counter(wqprg(seed, noisy, rng).bits.bits for _ in range(20)))

# modal-output frequency as s grows, shared randomness across s;
# once it nears the 1/2^ell floor neighbouring values differ by noise only
curve = amplification_curve(64, 8, noisy.tomo, (1, 2, 4, 8), 400, seed=0)
for s, f in curve.items():
    print(f"s={s}: modal frequency {f:.3f}")

# QPRF: lambda key blocks of lambda bits, inputs of 2*lambda bits
cfg = QprgConfig(lam=4, dim=64)
key = random_bits(16, rng)
for x in ("00000000", "00000001", "11111111"):
    print(f"F(k, {x}) = {qprf(key, x, cfg).bits.bits}")
