"""Reproducible batch experiments.

Every trial draws from ``trial_rng(master_seed, trial)`` and nothing else, so
results do not depend on how many worker threads run them. Rows are sorted by
trial index before they are written.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats as sps

from . import calibration
from .errors import ConfigError
from .extractor import canonical_f, derive_params, extract, good_set_check
from .generators import QprgConfig, qprf, sqprg, wqprg
from .montecarlo import haar_batch
from .protocols import (
    NonAdaptiveSKE,
    PseudorandomOTP,
    QprgPad,
    SyntheticGenerator,
    ToyGenerator,
    bad_set,
    binding_search,
    collision_table,
    double_open_probability,
    run_commitment,
    xi,
)
from .rng import random_bits, trial_rng
from .states import SeedKey, SeedRole, haar_amplitudes, sample_haar, seeded_state
from .stats import binomial_normal_tv, ks_distance, ks_test, normal_band_bound, wilson_interval
from .tomography import Backend, TomographyConfig, required_shots

EXPERIMENTS = ("extract-demo", "haar-stats", "qprg-run", "qprf-run", "amplify", "potp", "commit", "ske", "bench")
BACKENDS = tuple(b.value for b in Backend) + ("synthetic",)
ADVERSARIES = ("none", "flip-seeds", "best-collision")


@dataclass
class ExperimentConfig:
    experiment: str
    dim: int = 64
    backend: str = "exact"
    shots: int | str = "auto"
    trials: int = 10
    seed: int = 0
    lam: int = 2
    s: int = 1
    repeats: int = 20
    adversary: str = "none"
    agreement: float = 0.9
    ell: int = 32
    threads: int = 1
    out: str = "results"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.adversary not in ADVERSARIES:
            raise ConfigError(f"unknown adversary {self.adversary!r}")
        if self.trials < 1 or self.threads < 1 or self.lam < 1 or self.s < 1 or self.dim < 2:
            raise ConfigError("trials, threads, lambda, s must be >= 1 and dim >= 2")
        if self.shots != "auto" and (not isinstance(self.shots, int) or self.shots < 1):
            raise ConfigError(f"shots must be 'auto' or a positive integer, got {self.shots!r}")
        if not 0 < self.agreement <= 1:
            raise ConfigError("agreement must lie in (0, 1]")

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def tomography(self, dim: int | None = None) -> TomographyConfig:
        d = self.dim if dim is None else dim
        params = derive_params(d)
        if self.backend in ("exact", "synthetic"):
            return TomographyConfig.exact()
        if self.backend == "bounded-noise":
            return TomographyConfig(Backend.BOUNDED_NOISE, params.delta)
        shots = required_shots(d, params.delta, 0.01) if self.shots == "auto" else self.shots
        return TomographyConfig(Backend.MULTINOMIAL, params.delta, shots, 0.01)


@dataclass
class ExperimentResult:
    name: str
    columns: list[str]
    rows: list[dict]
    summary: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    documents: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\r\n", extrasaction="ignore")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return v


def run_trials(fn: Callable[[int, np.random.Generator], dict], trials: int, seed: int, threads: int = 1) -> list[dict]:
    """fn(trial, rng) per trial; returns rows ordered by trial."""
    def one(t):
        row = fn(t, trial_rng(seed, t))
        row.setdefault("trial", t)
        return row

    if threads == 1:
        rows = [one(t) for t in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(trials)))
    return sorted(rows, key=lambda r: r["trial"])


def _prov(module: str, op: str, cfg: ExperimentConfig) -> dict:
    return {"module": module, "operation": op, "seed": cfg.seed,
            "stream": "SeedSequence(seed, spawn_key=(trial,))"}


# -- experiments -------------------------------------------------------------------


def extract_demo(cfg: ExperimentConfig) -> ExperimentResult:
    params = derive_params(cfg.dim)
    tomo = cfg.tomography()

    def trial(t, rng):
        state = sample_haar(cfg.dim, rng)
        report = good_set_check(state, params)
        bits = extract(state, tomo, params, rng)
        return {"trial": t, "bits": bits.bits, "member": report.member, "min_gap": report.min_gap,
                "agreed_with_f": bits == canonical_f(state, params)}

    rows = run_trials(trial, cfg.trials, cfg.seed, cfg.threads)
    members = [r for r in rows if r["member"]]
    member_agree = sum(r["agreed_with_f"] for r in members) / len(members) if members else 1.0
    checks = {}
    if tomo.backend is Backend.EXACT:
        checks["exact_equals_f"] = all(r["agreed_with_f"] for r in rows)
    elif tomo.compliant(cfg.dim) and tomo.delta <= params.delta and len(members) >= 30:
        checks["member_agreement_ge_0.98"] = member_agree >= 0.98
    summary = {"dim": cfg.dim, "ell": params.ell, "shots": tomo.shots, "member_fraction": len(members) / len(rows),
               "member_agreement": member_agree}
    cols = ["trial", "bits", "member", "min_gap", "agreed_with_f"]
    prov = {c: _prov("extractor", op, cfg) for c, op in
            zip(cols[1:], ["extract", "good_set_check", "good_set_check", "canonical_f"])}
    return ExperimentResult("extract-demo", cols, rows, summary, checks, prov)


def haar_stats(cfg: ExperimentConfig) -> ExperimentResult:
    """Haar marginal, block-sum and CLT checks; ``trials`` scales every sample size (10^5 gives the full run)."""
    n = cfg.trials
    rng = trial_rng(cfg.seed, 0)
    reports = {}

    amps = haar_amplitudes(256, min(n, 10**5), rng)
    ks = ks_test(amps[:, 0].real, sps.norm(0, math.sqrt(1 / 512)).cdf)
    reports["haar_gaussian_re_alpha1_d256"] = ks.to_dict()

    big = haar_batch(4096, max(100, n // 10), trial_rng(cfg.seed, 1))
    dist = ks_distance(big.q[:, 0] * 2 * 4096, sps.norm(512, 32).cdf)
    reports["block_sum_ks_d4096"] = {"statistic": dist, "bound": 0.05, "samples": big.n, "passed": dist <= 0.05}

    small = haar_batch(64, max(100, n // 10), trial_rng(cfg.seed, 2))
    floor = calibration.constant("good_set_floor_d4096")
    f64, f4096 = float(small.member.mean()), float(big.member.mean())
    reports["good_set_trend"] = {"member_d64": f64, "member_d4096": f4096, "floor": floor,
                                 "samples": big.n, "passed": f4096 > f64 and f4096 >= floor}

    r, d, gap = 256, 4096, 1 / 4096
    z = trial_rng(cfg.seed, 3).normal(r / d, math.sqrt(r) / d, size=n)
    mass = float(np.mean(np.abs(z - r / d) <= gap))
    bound = normal_band_bound(gap, math.sqrt(r) / d)
    slack = 3 * math.sqrt(bound * (1 - bound) / n)
    reports["normal_band"] = {"mass": mass, "bound": bound, "slack": slack, "samples": n,
                              "passed": mass <= bound + slack}

    c = calibration.constant("clt_tv_constant")
    tv256 = binomial_normal_tv(256)
    reports["clt_binomial_tv"] = {"tv_r16": binomial_normal_tv(16), "tv_r256": tv256, "constant": c,
                                  "passed": tv256 <= c / math.sqrt(256)}

    rows = [{"test": k, "statistic": v.get("statistic", v.get("mass", v.get("tv_r256", v.get("member_d4096")))),
             "samples": v.get("samples", 0), "passed": v["passed"]} for k, v in reports.items()]
    for i, row in enumerate(rows):
        row["trial"] = i
    checks = {k: bool(v["passed"]) for k, v in reports.items()}
    prov = {k: _prov("stats", k, cfg) for k in reports}
    return ExperimentResult("haar-stats", ["test", "statistic", "samples", "passed"], rows, {}, checks, prov,
                            documents={"reports": reports})


def _qprg_cfg(cfg: ExperimentConfig, s: int | None = None) -> QprgConfig:
    return QprgConfig(lam=cfg.lam, s=cfg.s if s is None else s, tomo=cfg.tomography(), dim=cfg.dim)


def _modal(outputs: list[str]) -> tuple[str, float]:
    vals, counts = np.unique(outputs, return_counts=True)
    i = int(np.argmax(counts))
    return str(vals[i]), counts[i] / len(outputs)


def qprg_run(cfg: ExperimentConfig) -> ExperimentResult:
    qcfg = _qprg_cfg(cfg)
    params = qcfg.params

    def trial(t, rng):
        seeds = [random_bits(cfg.lam, rng) for _ in range(cfg.s)]
        runs = rng.spawn(cfg.repeats)
        outs = [str(sqprg(seeds, qcfg, g)) for g in runs]
        modal, freq = _modal(outs)
        good = all(good_set_check(seeded_state(SeedKey(k), cfg.dim), params).member for k in seeds)
        return {"trial": t, "seed": "".join(seeds), "output": modal, "modal_freq": freq, "good": good}

    rows = run_trials(trial, cfg.trials, cfg.seed, cfg.threads)
    summary = {"mean_modal_freq": float(np.mean([r["modal_freq"] for r in rows])),
               "good_fraction": float(np.mean([r["good"] for r in rows])), "ell": params.ell}
    checks = {}
    if cfg.backend == "exact":
        checks["deterministic"] = all(r["modal_freq"] == 1.0 for r in rows)
    cols = ["trial", "seed", "output", "modal_freq", "good"]
    prov = {c: _prov("generators", "sqprg" if cfg.s > 1 else "wqprg", cfg) for c in cols[1:]}
    return ExperimentResult("qprg-run", cols, rows, summary, checks, prov)


def qprf_run(cfg: ExperimentConfig) -> ExperimentResult:
    qcfg = _qprg_cfg(cfg)
    params = qcfg.params
    from .states import seeded_prfs_state

    def trial(t, rng):
        key = random_bits(cfg.lam * cfg.lam, rng)
        x = random_bits(qcfg.m, rng)
        outs = [str(qprf(key, x, qcfg, g)) for g in rng.spawn(cfg.repeats)]
        modal, freq = _modal(outs)
        blocks = [key[i:i + cfg.lam] for i in range(0, len(key), cfg.lam)]
        good = all(good_set_check(seeded_prfs_state(SeedKey(k), x, cfg.dim), params).member for k in blocks)
        return {"trial": t, "seed": key, "input": x, "output": modal, "modal_freq": freq, "good": good}

    rows = run_trials(trial, cfg.trials, cfg.seed, cfg.threads)
    summary = {"mean_modal_freq": float(np.mean([r["modal_freq"] for r in rows])),
               "good_fraction": float(np.mean([r["good"] for r in rows]))}
    checks = {"deterministic": all(r["modal_freq"] == 1.0 for r in rows)} if cfg.backend == "exact" else {}
    cols = ["trial", "seed", "input", "output", "modal_freq", "good"]
    return ExperimentResult("qprf-run", cols, rows, summary, checks,
                            {c: _prov("generators", "qprf", cfg) for c in cols[1:]})


def good_seeds(n: int, lam: int, dim: int, rng) -> list[str]:
    """n distinct lam-bit seeds whose seeded states lie in the good set."""
    params = derive_params(dim)
    if 2**lam < 4 * n:
        raise ConfigError(f"lambda={lam} leaves too few seeds to pick {n} good ones")
    out: list[str] = []
    while len(out) < n:
        k = random_bits(lam, rng)
        if k not in out and good_set_check(seeded_state(SeedKey(k, SeedRole.PRS), dim), params).member:
            out.append(k)
    return out


def amplification_curve(dim: int, lam: int, tomo: TomographyConfig, s_values, trials: int, seed: int,
                        threads: int = 1) -> dict[int, float]:
    """Modal-output frequency of the s-fold XOR generator for each s.

    Seeds k_1..k_max(s) are drawn from the good set: a seed outside it gives
    near-random bits on every call and pins every larger s to the same noise
    floor. Trial t uses a per-trial rng; the s-fold generator uses the first
    s seeds and the first s branch streams, so the estimates are coupled.
    """
    s_max = max(s_values)
    seeds = good_seeds(s_max, lam, dim, trial_rng(seed, 10**6))
    outputs: dict[int, list[str]] = {s: [] for s in s_values}

    def one(t):
        rng = trial_rng(seed, t)
        streams = rng.spawn(s_max)
        cfg1 = QprgConfig(lam=lam, tomo=tomo, dim=dim)
        bits = [wqprg(k, cfg1, g).bits for k, g in zip(seeds, streams)]
        res = {}
        for s in s_values:
            acc = bits[0]
            for b in bits[1:s]:
                acc = acc ^ b
            res[s] = acc.bits
        return res

    if threads == 1:
        per_trial = [one(t) for t in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_trial = list(pool.map(one, range(trials)))
    for res in per_trial:
        for s in s_values:
            outputs[s].append(res[s])
    return {s: _modal(outputs[s])[1] for s in s_values}


def amplify(cfg: ExperimentConfig) -> ExperimentResult:
    s_values = (1, 2, 4, 8)
    curve = amplification_curve(cfg.dim, cfg.lam, cfg.tomography(), s_values, cfg.trials, cfg.seed, cfg.threads)
    rows = [{"trial": i, "s": s, "modal_freq": curve[s], "trials": cfg.trials} for i, s in enumerate(s_values)]
    freqs = [curve[s] for s in s_values]
    checks = {"non_increasing": all(a >= b for a, b in zip(freqs, freqs[1:]))}
    return ExperimentResult("amplify", ["s", "modal_freq", "trials"], rows, {"curve": curve}, checks,
                            {"modal_freq": _prov("generators", "sqprg", cfg)})


def _pad_generator(cfg: ExperimentConfig, ell: int | None = None):
    if cfg.backend == "synthetic":
        return SyntheticGenerator.for_agreement(cfg.ell if ell is None else ell, cfg.agreement)
    return QprgPad(_qprg_cfg(cfg))


def potp(cfg: ExperimentConfig) -> ExperimentResult:
    G = _pad_generator(cfg)
    scheme = PseudorandomOTP(cfg.lam, G)

    def trial(t, rng):
        key = scheme.gen(rng)
        m = random_bits(G.ell, rng)
        vote = scheme.dec(key, scheme.enc(key, m, rng), rng)
        return {"trial": t, "message": m, "decrypted": vote.winner, "votes": vote.count, "success": vote.winner == m}

    rows = run_trials(trial, cfg.trials, cfg.seed, cfg.threads)
    rate = float(np.mean([r["success"] for r in rows]))
    checks = {"exact_roundtrip": rate == 1.0} if cfg.backend == "exact" else {}
    cols = ["trial", "message", "decrypted", "votes", "success"]
    return ExperimentResult("potp", cols, rows, {"success_rate": rate}, checks,
                            {c: _prov("protocols", "potp", cfg) for c in cols[1:]})


def ske(cfg: ExperimentConfig) -> ExperimentResult:
    G = _pad_generator(cfg)
    scheme = NonAdaptiveSKE(cfg.lam, G)

    def trial(t, rng):
        key = scheme.gen(rng)
        m = random_bits(scheme.ell, rng)
        ct = scheme.enc(key, m, rng)
        vote = scheme.dec(key, ct, rng)
        return {"trial": t, "nonce": ct.r, "message": m, "decrypted": vote.winner, "success": vote.winner == m}

    rows = run_trials(trial, cfg.trials, cfg.seed, cfg.threads)
    rate = float(np.mean([r["success"] for r in rows]))
    checks = {"exact_roundtrip": rate == 1.0} if cfg.backend == "exact" else {}
    cols = ["trial", "nonce", "message", "decrypted", "success"]
    return ExperimentResult("ske", cols, rows, {"success_rate": rate}, checks,
                            {c: _prov("protocols", "ske", cfg) for c in cols[1:]})


def commitment(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg.adversary == "best-collision":
        toy = ToyGenerator.random(cfg.lam, trial_rng(cfg.seed, 0))
        table = collision_table(toy)
        bad = bad_set(toy)
        reported = double_open_probability(toy, method="enumeration")
        oracle = double_open_probability(toy, method="binomial")
        rows = []
        for r in np.flatnonzero(table):
            p = float(table[r])
            rows.append({"trial": int(r), "r": toy.to_bits(int(r)), "max_collision": p,
                         "in_bad": int(r) in bad, "double_open": xi(cfg.lam, p)})
        off_bad = [row["max_collision"] for row in rows if not row["in_bad"]]
        checks = {"matches_oracle_1e-12": abs(reported - oracle) <= 1e-12,
                  "collision_le_half_off_bad": max(off_bad, default=0.0) <= 0.5}
        summary = {"double_open_probability": reported, "oracle": oracle,
                   "bad_fraction": len(bad) / 2**toy.out_bits, "bad_bound": 2.0**-cfg.lam}
        cols = ["trial", "r", "max_collision", "in_bad", "double_open"]
        return ExperimentResult("commit", cols, rows, summary, checks,
                                {c: _prov("protocols", "binding_search", cfg) for c in cols[1:]})

    G = _pad_generator(cfg, ell=3 * cfg.lam)
    if G.ell != 3 * cfg.lam:
        raise ConfigError(f"commitment needs a 3*lambda-bit generator; dim={cfg.dim} gives ell={G.ell}")

    def trial(t, rng):
        b = int(rng.integers(0, 2))
        tr = run_commitment(cfg.lam, b, G, rng, adversary=cfg.adversary)
        return {"trial": t, "b": b, "matches": tr.matches, "verdict": tr.verdict.value}

    rows = run_trials(trial, cfg.trials, cfg.seed, cfg.threads)
    accept = float(np.mean([r["verdict"] != "reject" for r in rows]))
    checks = {}
    if cfg.adversary == "flip-seeds":
        checks["rejects"] = accept == 0.0
    cols = ["trial", "b", "matches", "verdict"]
    return ExperimentResult("commit", cols, rows, {"accept_rate": accept}, checks,
                            {c: _prov("protocols", "reveal_verify", cfg) for c in cols[1:]})


def bench(cfg: ExperimentConfig) -> ExperimentResult:
    """Wall-clock timings; the only experiment whose numbers are not reproducible."""
    rows = []
    tomo = cfg.tomography()
    for i, (label, fn) in enumerate([
        ("haar_amplitudes", lambda g: haar_amplitudes(cfg.dim, cfg.trials, g)),
        ("extract", lambda g: [extract(sample_haar(cfg.dim, g), tomo, derive_params(cfg.dim), g)
                               for _ in range(cfg.trials)]),
        ("seeded_state", lambda g: [seeded_state(SeedKey(format(j, "064b")), cfg.dim) for j in range(cfg.trials)]),
    ]):
        start = time.perf_counter()
        fn(trial_rng(cfg.seed, i))
        rows.append({"trial": i, "operation": label, "dim": cfg.dim, "n": cfg.trials,
                     "seconds": time.perf_counter() - start})
    return ExperimentResult("bench", ["operation", "dim", "n", "seconds"], rows, {}, {},
                            {"seconds": {"module": "experiments", "operation": "bench", "seed": cfg.seed}})


RUNNERS = {
    "extract-demo": extract_demo,
    "haar-stats": haar_stats,
    "qprg-run": qprg_run,
    "qprf-run": qprf_run,
    "amplify": amplify,
    "potp": potp,
    "commit": commitment,
    "ske": ske,
    "bench": bench,
}


def run(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg)


def write(result: ExperimentResult, cfg: ExperimentConfig) -> tuple[Path, Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.name}.csv"
    csv_path.write_bytes(result.csv_text().encode("utf-8"))
    manifest = {
        "experiment": result.name,
        "config": {k: v for k, v in asdict(cfg).items() if k not in ("threads", "out")},
        "summary": result.summary,
        "checks": result.checks,
        "ok": result.ok,
        "provenance": result.provenance,
        **result.documents,
    }
    if result.name in ("qprg-run", "qprf-run"):
        manifest["records"] = [{k: r[k] for k in ("seed", "output", "modal_freq", "good")} for r in result.rows]
    json_path = out / f"{result.name}.json"
    json_path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default))
    return csv_path, json_path


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(type(o))
