"""
One-time pad and nonce-based encryption
=======================================

Both schemes XOR the message with lambda independent pads and decrypt by a
plurality vote over the lambda candidate messages, which absorbs the
occasional run where a pad comes out different.
"""

import numpy as np
from scipy import stats

from pseudodet.generators import QprgConfig
from pseudodet.protocols import NonAdaptiveSKE, PseudorandomOTP, QprgPad, SyntheticGenerator
from pseudodet.rng import random_bits

rng = np.random.default_rng(5)

pad = QprgPad(QprgConfig(lam=8, dim=64))
otp = PseudorandomOTP(8, pad)
key = otp.gen(rng)
ct = otp.enc(key, "10", rng)
print("ciphertext blocks:", ct.blocks)
print("decrypted:", otp.dec(key, ct, rng))

ske = NonAdaptiveSKE(8, pad)
key = ske.gen(rng)
c1, c2 = ske.enc(key, "01", rng), ske.enc(key, "01", rng)
print("two encryptions of 01 use nonces", c1.r, "and", c2.r)

# a generator that repeats its canonical output 90% of the time per pair of calls
G = SyntheticGenerator.for_agreement(64, 0.9)
otp = PseudorandomOTP(64, G)
n = 2000
ok = sum(otp.dec(k, otp.enc(k, m, rng), rng).winner == m
         for k, m in ((otp.gen(rng), random_bits(64, rng)) for _ in range(n)))
print(f"synthetic generator, lambda=64: {ok}/{n} decryptions correct")

# a strict majority of the 64 pads is enough; its binomial tail
print("P[Bin(64, 0.81) > 32] =", stats.binom.sf(32, 64, 0.81))
