"""End-to-end acceptance criteria.

Each test prints one ``PASS``/``FAIL`` line and records it in ``RESULTS``;
``conftest.py`` repeats the lines after the pytest summary. Run this file
directly for the criteria alone.
"""

import sys
import time

import numpy as np
import pytest
from scipy import special, stats

from fbessel import bench, chaos, fracops, lrd, verify
from fbessel.config import ExperimentConfig
from fbessel.fbm import TimeGrid, fbm_covariance, fgn_increments
from fbessel.processes import XEnsemble, increment_whiteness, x_variance_extrapolated

RESULTS = {}

# Tolerances and budgets exactly as the criteria state them; never loosen these.
TOL = {
    "isometry_rel": 1e-3,
    "cov_se": 3.0,
    "cov_fraction": 0.99,
    "white_se": 3.0,
    "alpha": 0.01,
    "completeness": 1e-2,
    "decay_slope": (-1.5, 0.05),
    "arcsine": 1e-10,
    "var_se": 3.0,
    "lrd_band": 0.15,
    "lrd_se": 3.0,
    "ck_se": 3.0,
    "circulant_exponent": 1.3,
    "hosking_exponent": (2.0, 0.3),
}
BUDGET = {1: 60, 2: 120, 3: 180, 4: 300, 5: 10, 6: 1, 7: 600, 8: 300, 9: 180, 10: 300}


def record(num, name, ok, detail, start):
    elapsed = time.perf_counter() - start
    within = elapsed <= BUDGET[num]
    passed = bool(ok) and within
    line = f"{'PASS' if passed else 'FAIL'} {num:2d}. {name}: {detail} [{elapsed:.1f}s of {BUDGET[num]}s]"
    RESULTS[num] = line
    print(line)
    assert ok, line
    assert within, f"over budget: {line}"


def test_01_kernel_isometry():
    start = time.perf_counter()
    worst = {}
    for h in (0.3, 0.7):
        op = np.concatenate([fracops.isometry_errors(h, verify.ISOMETRY_TIMES, 1.0, 2048),
                             fracops.bilinear_errors(h, verify.ISOMETRY_PAIRS, 1.0, 2048)])
        direct = [fracops.kernel_inner(t, t, h) / t ** (2 * h) - 1 for t in verify.ISOMETRY_TIMES]
        direct += [fracops.kernel_inner(t, s, h) / fbm_covariance(s, t, h) - 1 for t, s in verify.ISOMETRY_PAIRS]
        worst[h] = (float(np.max(np.abs(op))), float(np.max(np.abs(direct))))
    ok = all(max(v) <= TOL["isometry_rel"] for v in worst.values())
    detail = "; ".join(f"H={h}: operator {a:.1e}, kernel {b:.1e}" for h, (a, b) in worst.items())
    record(1, "kernel isometry, 10 pairs, n=2048", ok, f"{detail} (tol {TOL['isometry_rel']:g})", start)


def test_02_exact_sampling_covariance():
    start = time.perf_counter()
    n, N = 256, 10_000
    t = np.arange(1, n + 1) / n
    R = {h: fbm_covariance(t[:, None], t[None, :], h) for h in (0.3, 0.5, 0.7)}
    iu = np.triu_indices(n)
    fractions = {}
    for j, method in enumerate(("CIRCULANT", "HOSKING", "CHOLESKY")):
        for h in (0.3, 0.5, 0.7):
            rng = np.random.default_rng(1000 * j + int(100 * h))
            B = np.cumsum(fgn_increments(n, 1.0 / n, h, rng, N, method), axis=1)
            cov = B.T @ B / N
            second = (B**2).T @ (B**2) / N
            se = np.sqrt(np.maximum(second - cov**2, 0) / N)
            hit = np.abs(cov - R[h]) < TOL["cov_se"] * se
            fractions[(method, h)] = float(hit[iu].mean())
    worst_key = min(fractions, key=fractions.get)
    ok = all(f >= TOL["cov_fraction"] for f in fractions.values())
    record(2, "exact sampling covariance", ok,
           f"min pair fraction within 3 SE {fractions[worst_key]:.4f} ({worst_key[0]}, H={worst_key[1]}) "
           f"over {len(fractions)} sampler/H cases, need >= {TOL['cov_fraction']}", start)


def test_03_levy_calibration():
    start = time.perf_counter()
    grid = TimeGrid(1.0, 1024)
    nodes = np.arange(1, 33) / 32
    parts = []
    ok = True
    for d in (1, 2):
        X = XEnsemble(grid, 0.5, d=d).sample(nodes, 10_000, 30 + d)
        white = increment_whiteness(X)
        worst_z = max(abs(c) / se for _, c, se in white)
        p = stats.kstest(X[:, -1], "norm").pvalue
        ok &= worst_z <= TOL["white_se"] and p >= TOL["alpha"]
        parts.append(f"d={d}: max |corr|/SE {worst_z:.2f}, KS p={p:.3f}")
    record(3, "Levy calibration at H=1/2", ok, "; ".join(parts), start)


def test_04_self_similarity():
    start = time.perf_counter()
    parts = []
    ok = True
    for h in (0.3, 0.7):
        cfg = ExperimentConfig(H=h, n=1024, replicas=10_000, master_seed=40 + int(10 * h), jobs=1)
        for rep in verify.selfsim_suite(cfg, scales=(2.0, 4.0), alpha=TOL["alpha"]):
            ok &= rep.passed
            kind = "power" if "power" in rep.name else "null"
            parts.append(f"H={h} a={rep.details['a']:g} {kind} p={rep.p_value:.2g}")
    record(4, "self-similarity of X", ok, "; ".join(parts), start)


def test_05_chaos_completeness_and_decay():
    start = time.perf_counter()
    partial = float(chaos.sign_variance_partial_sums(10_000)[-1])
    k = np.arange(32, 513)
    slope = float(np.polyfit(np.log(k), np.log(chaos.sign_term_variance(k)), 1)[0])
    target, band = TOL["decay_slope"]
    ok = abs(1 - partial) <= TOL["completeness"] and abs(slope - target) <= band
    record(5, "chaos completeness and decay", ok,
           f"partial sum {partial:.5f} at K=1e4, slope {slope:.4f} over k in [32, 512]", start)


def test_06_arcsine():
    start = time.perf_counter()
    rhos = np.linspace(-0.9, 0.9, 37)
    err = max(abs(chaos.sign_series(r, 200) - 2 / np.pi * np.arcsin(r)) for r in rhos)
    record(6, "arcsine cross-check", err <= TOL["arcsine"], f"max error {err:.2e} at K=200", start)


def test_07_variance_cross_validation():
    start = time.perf_counter()
    est = x_variance_extrapolated(0.7, n=1024, replicas=10_000, seed=70)
    terms = [chaos.x_term_variance_mc(k, 1.0, 0.7, 200_000, seed=70 + k) for k in (1, 2, 3)]
    series = chaos.truncated_variance_k32_tail([v for v, _ in terms])
    # the tail factor multiplies only the k = 3 term, so its error is inflated accordingly
    tail_gain = 1 + 3**1.5 * float(special.zeta(1.5, 4))
    series_se = float(np.sqrt(terms[0][1] ** 2 + terms[1][1] ** 2 + (tail_gain * terms[2][1]) ** 2))
    se = float(np.hypot(est.std_error, series_se))
    z = abs(est.estimate - series) / se
    exact = chaos.tanaka_variance(0.7)
    record(7, "Var(X_1) at H=0.7 vs truncated series", z <= TOL["var_se"],
           f"MC {est.estimate:.4f} (raw n=1024 {est.fine:.4f}) +- {est.std_error:.4f}, series {series:.4f} "
           f"+- {series_se:.4f}, z={z:.1f}; exact {exact:.4f}", start)


def test_08_long_range_dependence():
    start = time.perf_counter()
    lags = (8, 16, 32, 64, 128)
    slopes = {h: lrd.fit_slope(lags, [lrd.rn_quad_1d(1.0, n, h).value for n in lags]) for h in (0.8, 0.6)}
    ok = all(abs(s - (3 * h - 3)) <= TOL["lrd_band"] for h, s in slopes.items())

    ens = XEnsemble(TimeGrid(17.0, 17 * 32), 0.8)
    zs = []
    for m in lrd.rn_mc_many(ens, 1.0, (4, 8, 16), 10_000, 80):
        q = lrd.rn_quad_1d(1.0, m.n, 0.8)
        zs.append(abs(m.value - q.value) / (m.std_error + lrd.DEFAULT_QUAD_TOL * abs(q.value)))
    ok &= max(zs) <= TOL["lrd_se"]

    # the threshold absorbs 1e-12 of rounding so decimal inputs of 2/3 land on it
    below = 2 / 3 - 1e-9
    flips = lrd.lrd_verdict(2 / 3).verdict is lrd.Verdict.LRD and lrd.lrd_verdict(below).verdict is lrd.Verdict.NOT_LRD
    _, scan = lrd.lrd_scan([0.6, 0.65, 2 / 3, 0.7, 0.8], ns=lags)
    flips &= not any(r["disagreement"] for r in scan)
    ok &= flips
    record(8, "LRD exponent", ok,
           f"slope {slopes[0.8]:.3f} at H=0.8, {slopes[0.6]:.3f} at H=0.6; MC vs quadrature max z {max(zs):.2f}; "
           f"verdict flips at 2/3: {flips}", start)


def test_09_dimension_constants():
    start = time.perf_counter()
    parts = []
    ok = True
    for d in (2, 3, 5):
        ck = lrd.constants_CK(d, 1_000_000, seed=90 + d)
        zc = ck["C"].estimate / ck["C"].std_error
        zk = ck["K"].estimate / ck["K"].std_error
        ok &= min(zc, zk) > TOL["ck_se"]
        parts.append(f"d={d}: C={ck['C'].estimate:.4f}, K={ck['K'].estimate:.4f}")
    rep = lrd.lemma1_check(3, [0.0, 0.005, 0.01, 0.02, 0.05], 1_000_000, seed=99)
    ref = lrd.constants_CK(3, 1_000_000, seed=100)["C"]
    i = int(np.flatnonzero(rep.eps == 0.01)[0])
    se = float(np.hypot(rep.m_std_error[i] / 0.01, ref.std_error))
    z = abs(rep.ratio[i] - ref.estimate) / se
    ok &= z <= TOL["ck_se"]
    parts.append(f"m(0.01)/0.01={rep.ratio[i]:.4f} vs C={ref.estimate:.4f}, z={z:.2f}")
    record(9, "d-dimensional constants", ok, "; ".join(parts), start)


def test_10_generator_performance():
    start = time.perf_counter()
    sizes = [2**k for k in range(10, 19)]
    res = bench.run_bench(sizes, methods=("CIRCULANT", "HOSKING"), repetitions=5)
    circ = res["CIRCULANT"]["exponent"]
    hosk = res["HOSKING"]["exponent"]
    target, band = TOL["hosking_exponent"]
    ok = circ < TOL["circulant_exponent"] and abs(hosk - target) <= band
    top = max(t.n for t in res["HOSKING"]["timings"])
    record(10, "generator complexity", ok,
           f"circulant exponent {circ:.3f} over 2^10..2^18, Hosking {hosk:.3f} over 2^10..{top}", start)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
