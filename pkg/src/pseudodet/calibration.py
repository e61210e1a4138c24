"""Pinned constants for thresholds whose asymptotic constants are unknown.

The values live in ``data/calibration.json`` together with the run that
produced them. :func:`run_calibration` reproduces the measurements; it is
not called by the test-suite, which only reads the pinned file.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources

import numpy as np

from .montecarlo import haar_batch
from .stats import bit_alphabet, bit_counts, binomial_normal_tv, EmpiricalDistribution, tv_empirical, uniform_reference

CALIBRATION_SEED = 7_340_033


@lru_cache(maxsize=None)
def load() -> dict:
    text = resources.files("pseudodet").joinpath("data/calibration.json").read_text()
    return json.loads(text)


def constant(name: str) -> float:
    return float(load()["constants"][name]["value"])


def uniform_tv(bits: np.ndarray) -> float:
    ell = bits.shape[1]
    emp = EmpiricalDistribution(bit_alphabet(ell), tuple(int(c) for c in bit_counts(bits)))
    return tv_empirical(emp, uniform_reference(emp.alphabet)).value


def run_calibration(seed: int = CALIBRATION_SEED, n_member: int = 10_000, n_uniform: int = 50_000) -> dict:
    """Measure the quantities the pinned constants are derived from."""
    rng = np.random.default_rng(seed)
    out = {}
    for d in (64, 4096):
        mem = haar_batch(d, n_member, rng)
        uni = haar_batch(d, n_uniform, rng)
        tv = uniform_tv(uni.bits)
        out[f"member_fraction_d{d}"] = float(mem.member.mean())
        out[f"uniform_tv_d{d}"] = tv
        out[f"uniform_tv_scaled_d{d}"] = tv * d ** (1 / 6)
    out["binomial_normal_tv_r16"] = binomial_normal_tv(16)
    out["binomial_normal_tv_r256"] = binomial_normal_tv(256)
    out["clt_constant_from_r16"] = binomial_normal_tv(16) * math.sqrt(16)
    return out


if __name__ == "__main__":
    print(json.dumps(run_calibration(), indent=2))
