"""Verification suites run by ``fbessel verify``.

Each suite takes an :class:`~fbessel.config.ExperimentConfig` and returns a
list of :class:`~fbessel.reports.TestReport`, one per checked property.
"""

from __future__ import annotations

import enum
import time

import numpy as np

from . import chaos, fracops, lrd
from .config import ExperimentConfig
from .errors import ConfigError
from .fbm import TimeGrid
from .processes import XEnsemble, self_similarity_test
from .reports import TestReport, stable_hash

# Ten (t, s) pairs on dyadic nodes of the n = 2048 grid: five diagonal, five off-diagonal.
ISOMETRY_TIMES = (0.125, 0.3125, 0.5, 0.75, 1.0)
ISOMETRY_PAIRS = ((0.3125, 0.125), (0.5, 0.25), (0.875, 0.4375), (1.0, 0.0625), (0.75, 0.625))


class Suite(enum.Enum):
    ISOMETRY = "ISOMETRY"
    SELFSIM = "SELFSIM"
    CHAOS = "CHAOS"
    LRD = "LRD"
    CONSTANTS = "CONSTANTS"

    @classmethod
    def coerce(cls, s) -> "Suite":
        if isinstance(s, cls):
            return s
        try:
            return cls(str(s).upper())
        except ValueError:
            raise ConfigError(f"unknown suite {s!r}", "suite") from None


def _report(name, statistic, passed, start, inputs, p_value=None, tolerance=None, **details):
    return TestReport(
        name=name,
        statistic=float(statistic),
        passed=bool(passed),
        p_value=None if p_value is None else float(p_value),
        tolerance=None if tolerance is None else float(tolerance),
        inputs_hash=stable_hash(inputs),
        runtime=time.perf_counter() - start,
        details={**inputs, **details},
    )


def isometry_suite(cfg: ExperimentConfig, n: int = 2048, tol: float = 1e-3):
    start = time.perf_counter()
    iso = fracops.isometry_errors(cfg.H, ISOMETRY_TIMES, 1.0, n)
    bil = fracops.bilinear_errors(cfg.H, ISOMETRY_PAIRS, 1.0, n)
    worst = float(np.max(np.abs(np.concatenate([iso, bil]))))
    inputs = {"H": cfg.H, "n": n, "times": ISOMETRY_TIMES, "pairs": ISOMETRY_PAIRS}
    return [_report(f"isometry H={cfg.H:g}", worst, worst <= tol, start, inputs, tolerance=tol)]


def selfsim_suite(cfg: ExperimentConfig, scales=(2.0, 4.0), alpha: float = 0.01, shift: float = 0.15):
    if cfg.replicas < 1000:
        raise ConfigError("SELFSIM needs at least 1000 replicas", "replicas")
    ens = XEnsemble(cfg.grid, cfg.H, cfg.d, cfg.method, jobs=cfg.jobs)
    times = sorted({cfg.T / a for a in scales} | {cfg.T})
    cache = {}

    def sampler(ts, replicas, seed):
        if seed not in cache:
            cache[seed] = ens.sample(times, replicas, seed)
        return cache[seed][:, [times.index(t) for t in ts]]

    seeds = (cfg.master_seed, cfg.master_seed + 1)
    out = []
    for a in scales:
        r = self_similarity_test(sampler, cfg.H, a, cfg.T / a, cfg.replicas, seeds, alpha)
        out.append(r)
        p = self_similarity_test(sampler, cfg.H, a, cfg.T / a, cfg.replicas, seeds, alpha, exponent=cfg.H + shift)
        p.name = f"selfsim power H={cfg.H:g} a={a:g} exponent={cfg.H + shift:g}"
        p.passed = bool(p.p_value < alpha)
        out.append(p)
    return out


def chaos_suite(cfg: ExperimentConfig):
    out = []
    start = time.perf_counter()
    K = cfg.chaos_K
    partial = float(chaos.sign_variance_partial_sums(K)[-1])
    out.append(_report("sign expansion completeness", abs(1 - partial), abs(1 - partial) <= 1e-2, start,
                       {"K": K}, tolerance=1e-2, partial_sum=partial))

    start = time.perf_counter()
    k = np.arange(32, 513)
    slope = float(np.polyfit(np.log(k), np.log(chaos.sign_term_variance(k)), 1)[0])
    out.append(_report("sign term decay slope", slope, abs(slope + 1.5) <= 0.05, start,
                       {"k_range": [32, 512]}, tolerance=0.05))

    start = time.perf_counter()
    rhos = np.linspace(-0.9, 0.9, 37)
    err = max(abs(chaos.sign_series(r, 200) - 2 / np.pi * np.arcsin(r)) for r in rhos)
    out.append(_report("sign covariance arcsine law", err, err <= 1e-10, start, {"K": 200, "points": 37},
                       tolerance=1e-10))

    if cfg.H >= 0.3:
        start = time.perf_counter()
        series, _, tail = chaos.x_variance_series(cfg.H, 500)
        exact = chaos.tanaka_variance(cfg.H)
        rel = abs(series / exact - 1)
        out.append(_report(f"X variance series H={cfg.H:g}", rel, rel <= 1e-2, start, {"H": cfg.H, "K": 500},
                           tolerance=1e-2, series=series, tanaka=exact, tail=tail))
    return out


def lrd_suite(cfg: ExperimentConfig, band: float = 0.15, mc_lags=(4, 8, 16), steps_per_unit: int = 32):
    h = cfg.H
    out = []
    start = time.perf_counter()
    ests = [lrd.rn_quad_1d(cfg.lrd_a, n, h, cfg.quad_tol) for n in cfg.lrd_lags]
    slope = lrd.fit_slope(cfg.lrd_lags, [e.value for e in ests])
    v = lrd.lrd_verdict(h, slope, band)
    inputs = {"H": h, "a": cfg.lrd_a, "lags": cfg.lrd_lags, "quad_tol": cfg.quad_tol}
    out.append(_report(f"LRD slope H={h:g}", slope, abs(slope - (3 * h - 3)) <= band, start, inputs,
                       tolerance=band, verdict=v.verdict.value, rationale=v.rationale))
    out.append(_report(f"LRD verdict H={h:g}", slope, not v.disagreement, start, inputs, verdict=v.verdict.value))

    if cfg.replicas >= 1000:
        start = time.perf_counter()
        horizon = max(mc_lags) + 1.0
        ens = XEnsemble(TimeGrid(horizon, int(horizon) * steps_per_unit), h, 1, cfg.method, jobs=cfg.jobs)
        mc = lrd.rn_mc_many(ens, cfg.lrd_a, mc_lags, cfg.replicas, cfg.master_seed)
        for m in mc:
            q = lrd.rn_quad_1d(cfg.lrd_a, m.n, h, cfg.quad_tol)
            z = abs(m.value - q.value) / (m.std_error + cfg.quad_tol * abs(q.value))
            out.append(_report(f"LRD MC vs quadrature n={m.n:g}", z, z <= 3, start,
                               {**inputs, "n": m.n, "replicas": cfg.replicas, "seed": cfg.master_seed},
                               tolerance=3, mc=m.value, mc_se=m.std_error, quad=q.value))
    return out


def constants_suite(cfg: ExperimentConfig, dims=(2, 3, 5), N: int = 200_000, lemma_N: int = 1_000_000):
    out = []
    for d in dims:
        start = time.perf_counter()
        ck = lrd.constants_CK(d, N, cfg.master_seed)
        lo = min(ck["C"].lower(), ck["K"].lower())
        out.append(_report(f"C and K positive d={d}", lo, lo > 0, start, {"d": d, "N": N, "seed": cfg.master_seed},
                           C=ck["C"].estimate, K=ck["K"].estimate))
    start = time.perf_counter()
    rep = lrd.lemma1_check(3, [0.0, 0.005, 0.01, 0.02, 0.05], lemma_N, cfg.master_seed)
    ref = lrd.constants_CK(3, lemma_N, cfg.master_seed + 1)["C"]
    i = int(np.flatnonzero(rep.eps == 0.01)[0])
    se = np.hypot(rep.m_std_error[i] / rep.eps[i], ref.std_error)
    z = abs(rep.ratio[i] - ref.estimate) / se
    out.append(_report("m(eps)/eps matches C at eps=0.01", z, z <= 3, start,
                       {"d": 3, "N": lemma_N, "seed": cfg.master_seed}, tolerance=3,
                       ratio=rep.ratio[i], C=ref.estimate, combined_se=se))
    return out


SUITES = {
    Suite.ISOMETRY: isometry_suite,
    Suite.SELFSIM: selfsim_suite,
    Suite.CHAOS: chaos_suite,
    Suite.LRD: lrd_suite,
    Suite.CONSTANTS: constants_suite,
}


def run_suite(suite, cfg: ExperimentConfig):
    return SUITES[Suite.coerce(suite)](cfg)
