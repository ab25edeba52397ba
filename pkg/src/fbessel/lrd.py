"""Long-range dependence of the increments of X.

The lag-``n`` covariance ``r(n) = E[(X_{a+1} - X_a)(X_{n+1} - X_n)]`` is
estimated by Monte Carlo over simulated ensembles and, for ``H > 1/2``, by
two-dimensional quadrature of its divergence-duality decomposition

* ``d = 1``: ``r(n) = a_n + b_n`` where ``a_n`` integrates the arcsine law
  against ``H(2H-1)|t-s|^(2H-2)`` and ``b_n`` integrates the Gaussian density
  of ``(B_s, B_t)`` at the origin against the derivative weights
  ``4 H^2 (s^(2H-1) + (t-s)^(2H-1)) (t^(2H-1) - (t-s)^(2H-1))``;
* ``d >= 2``: ``r(n) = rho1 + rho2`` with the same weights and inner
  expectations over the ``2d``-dimensional Gaussian done by Monte Carlo.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from .errors import ConfigError, ConsistencyError
from .fbm import HurstParam
from .reports import Welford

DEFAULT_QUAD_TOL = 1e-4
LRD_THRESHOLD = 2.0 / 3.0


class EstimateMethod(enum.Enum):
    MC = "MC"
    QUAD = "QUAD"


@dataclass(frozen=True)
class CovarianceEstimate:
    """Estimate of ``r(n)``; ``parts`` holds ``(a_n, b_n)`` or ``(rho1, rho2)``."""

    a: float
    n: float
    value: float
    std_error: float
    method: EstimateMethod
    parts: tuple | None = None
    quad_error: float = 0.0

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ConsistencyError("standard error must be nonnegative")
        if self.parts is not None and not np.isclose(sum(self.parts), self.value, rtol=1e-12, atol=1e-15):
            raise ConsistencyError("parts do not sum to the value")

    def csv_row(self, H: float) -> str:
        pa, pb = (f"{x:.17g}" for x in self.parts) if self.parts is not None else ("", "")
        return f"{H:.17g},{self.a:.17g},{self.n:.17g},{self.method.value},{self.value:.17g},{self.std_error:.17g},{pa},{pb}"


CSV_HEADER = "H,a,n,method,value,stderr,part_a,part_b"


@dataclass(frozen=True)
class GeometryFactors:
    s: float
    t: float
    R: float
    beta: float
    lam: float


def _cov(s, t, h):
    """``R(s,t)`` for ``0 < s <= t`` with the increment difference formed stably."""
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    gap = -(t ** (2 * h)) * np.expm1(2 * h * np.log1p(-s / t))  # t^2H - (t-s)^2H
    return 0.5 * (s ** (2 * h) + gap)


def _weight(s, t, h):
    """``(s^(2H-1) + (t-s)^(2H-1)) (t^(2H-1) - (t-s)^(2H-1))`` for ``s < t``."""
    left = s ** (2 * h - 1) + (t - s) ** (2 * h - 1)
    right = -(t ** (2 * h - 1)) * np.expm1((2 * h - 1) * np.log1p(-s / t))
    return left * right


def _radicand(s, t, R, h):
    rad = (s * t) ** (2 * h) - R * R
    if np.any(rad <= 0):
        raise ConsistencyError("nonpositive radicand (s t)^2H - R^2")
    return rad


def geometry(s: float, t: float, H) -> GeometryFactors:
    """``R(t,s)``, ``beta_st`` and ``lambda_st = R / (beta s^2H)`` for ``0 < s < t``."""
    h = HurstParam.coerce(H).value
    if not 0 < s < t:
        raise ConfigError("need 0 < s < t", "s")
    R = float(_cov(s, t, h))
    beta2 = float(_radicand(s, t, R, h)) / s ** (2 * h)
    beta = np.sqrt(beta2)
    return GeometryFactors(float(s), float(t), R, float(beta), float(R / (beta * s ** (2 * h))))


def _check_windows(a, n, h):
    if not a > 0:
        raise ConfigError("a must be positive", "a")
    if n < a + 2:
        raise ConfigError("windows overlap or touch: need n >= a + 2", "n")
    if h <= 0.5:
        raise ConfigError("quadrature decomposition needs H > 1/2", "H")


def _tensor_nodes(lo_s, lo_t, splits, m):
    """Gauss-Legendre nodes and weights on ``[lo_s, lo_s+1] x [lo_t, lo_t+1]`` split into ``splits^2`` cells."""
    x, w = leggauss(m)
    edges = np.linspace(0.0, 1.0, splits + 1)
    half = 0.5 / splits
    nodes = (0.5 * (edges[:-1] + edges[1:])[:, None] + half * x[None, :]).ravel()
    wts = np.tile(half * w, splits)
    S, T = np.meshgrid(lo_s + nodes, lo_t + nodes, indexing="ij")
    W = np.outer(wts, wts)
    return S.ravel(), T.ravel(), W.ravel()


def _adaptive(integrand, a, n, tol, m=8, max_splits=64):
    """Refine a tensor Gauss-Legendre rule until the relative change is below ``tol``."""
    splits = 1
    prev = integrand(*_tensor_nodes(a, n, splits, m))
    while True:
        splits *= 2
        cur = integrand(*_tensor_nodes(a, n, splits, m))
        change = np.max(np.abs(np.asarray(cur) - np.asarray(prev)))
        scale = max(np.max(np.abs(cur)), 1e-300)
        if change <= tol * scale or splits >= max_splits:
            return cur, change
        prev = cur


def _parts_1d(S, T, W, h):
    R = _cov(S, T, h)
    rad = _radicand(S, T, R, h)
    rho = np.clip(R / (S * T) ** h, -1.0, 1.0)
    alpha = h * (2 * h - 1)
    pa = alpha * np.sum(W * (2 / np.pi) * np.arcsin(rho) * (T - S) ** (2 * h - 2))
    pb = 4 * h * h / (2 * np.pi) * np.sum(W * _weight(S, T, h) / np.sqrt(rad))
    return np.array([pa, pb])


def rn_quad_1d(a: float, n: float, H, tol: float = DEFAULT_QUAD_TOL) -> CovarianceEstimate:
    """Quadrature value of ``r(n) = a_n + b_n`` for ``d = 1``.

    Examples
    --------
    >>> est = rn_quad_1d(1.0, 8.0, 0.8)
    >>> est.value > 0 and est.parts[0] > 0 and est.parts[1] > 0
    True
    """
    h = HurstParam.coerce(H).value
    _check_windows(a, n, h)
    parts, err = _adaptive(lambda S, T, W: _parts_1d(S, T, W, h), a, n, tol)
    pa, pb = (float(p) for p in parts)
    return CovarianceEstimate(float(a), float(n), pa + pb, 0.0, EstimateMethod.QUAD, (pa, pb), float(err))


def _inner_draws(d, samples, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((samples, d)), rng.standard_normal((samples, d))


def rho_parts_quad_d(a: float, n: float, H, d: int, gauss_samples: int = 20_000, seed: int = 0,
                     m: int = 8, splits: int = 2) -> CovarianceEstimate:
    """``r(n) = rho1 + rho2`` for ``d >= 2``.

    Every outer Gauss-Legendre node carries an inner Monte Carlo estimate of
    the Gaussian expectations, using ``B_t = (R/s^2H) B_s + beta Y`` with one
    shared set of draws for all nodes. Because the draws are common, the
    integral is itself a sample mean over draws and its standard error is
    exact. ``std_error`` is that Monte Carlo error; ``quad_error`` compares
    the outer rule against one with half the cell size on the same draws.
    """
    h = HurstParam.coerce(H).value
    _check_windows(a, n, h)
    if d < 2:
        raise ConfigError("dimension must be at least 2", "d")
    Z, Y = _inner_draws(d, gauss_samples, seed)

    def per_draw(splits_):
        S, T, W = _tensor_nodes(a, n, splits_, m)
        R = _cov(S, T, h)
        beta = np.sqrt(_radicand(S, T, R, h)) / S**h
        out1 = np.zeros(gauss_samples)
        out2 = np.zeros(gauss_samples)
        alpha = h * (2 * h - 1)
        zz = np.sum(Z * Z, axis=1)
        zy = np.sum(Z * Y, axis=1)
        yy = np.sum(Y * Y, axis=1)
        for s, t, r, b, w in zip(S, T, R, beta, W):
            # B_s = s^H Z, B_t = (r / s^H) Z + b Y
            c = r / s**h
            bs2 = s ** (2 * h) * zz
            dot = s**h * (c * zz + b * zy)
            bt2 = c * c * zz + 2 * c * b * zy + b * b * yy
            ns, nt = np.sqrt(bs2), np.sqrt(bt2)
            out1 += w * alpha * (t - s) ** (2 * h - 2) * dot / (ns * nt)
            inner2 = (d - 2) / (ns * nt) + dot * dot / (bs2 * ns * bt2 * nt)
            out2 += w * h * h * _weight(s, t, h) * inner2
        return out1, out2

    p1, p2 = per_draw(splits)
    c1, c2 = per_draw(2 * splits)
    tot = c1 + c2
    acc = Welford().update(tot)
    r1, r2 = float(c1.mean()), float(c2.mean())
    qerr = abs(float((p1 + p2).mean()) - (r1 + r2))
    return CovarianceEstimate(float(a), float(n), r1 + r2, acc.std_error, EstimateMethod.QUAD, (r1, r2), qerr)


def rn_mc_many(sampler, a: float, ns, replicas: int, seed: int):
    """Monte Carlo ``r(n)`` for several lags from one ensemble.

    ``sampler`` is an ensemble object with a ``grid`` attribute and a
    ``sample(times, replicas, seed)`` method, such as
    :class:`fbessel.processes.XEnsemble`.
    """
    ns = [float(x) for x in np.atleast_1d(ns)]
    if replicas < 1000:
        raise ConfigError("at least 10^3 replicas are required", "replicas")
    if max(ns) + 1 > sampler.grid.horizon + 1e-9:
        raise ConfigError(f"grid horizon {sampler.grid.horizon} does not cover n + 1 = {max(ns) + 1}", "T")
    times = [a, a + 1] + [x for n in ns for x in (n, n + 1)]
    X = sampler.sample(times, replicas, seed)
    left = X[:, 1] - X[:, 0]
    out = []
    for i, n in enumerate(ns):
        prod = left * (X[:, 3 + 2 * i] - X[:, 2 + 2 * i])
        acc = Welford().update(prod)
        out.append(CovarianceEstimate(float(a), n, acc.mean, acc.std_error, EstimateMethod.MC))
    return out


def rn_mc(sampler, a: float, n: float, replicas: int, seed: int) -> CovarianceEstimate:
    """Monte Carlo ``r(n)`` with its standard error."""
    return rn_mc_many(sampler, a, [n], replicas, seed)[0]


def fit_slope(ns, values) -> float:
    """Least-squares slope of ``log |value|`` against ``log n``."""
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(np.abs(np.asarray(values, dtype=np.float64)))
    return float(np.polyfit(x, y, 1)[0])


def tail_sum_estimate(n_last: float, r_last: float, slope: float) -> float:
    """``sum_{n > N} |r(n)|`` for a power law through ``(N, r_N)`` with the given slope."""
    if slope >= -1:
        return float("inf")
    return float(abs(r_last) * n_last ** (-slope) * special.zeta(-slope, n_last + 1))


# ---------------------------------------------------------------------------
# constants C and K and the epsilon expansion


def _chi_moment(d, p):
    """``E|Y|^p`` for a standard normal vector in ``R^d``."""
    return float(2 ** (p / 2) * np.exp(special.gammaln((d + p) / 2) - special.gammaln(d / 2)))


def constants_closed_form(d: int) -> dict:
    """Exact ``C`` and ``K`` from independence of radii and the angle.

    With ``cos^2`` of the angle between two independent isotropic vectors
    having mean ``1/d``, ``C = E|B| E|Y|^-1 (1 - 1/d)`` and
    ``K = E|B|^-1 E|Y|^-1 (d - 2 + 1/d)``.
    """
    return {
        "C": _chi_moment(d, 1) * _chi_moment(d, -1) * (1 - 1 / d),
        "K": _chi_moment(d, -1) ** 2 * (d - 2 + 1 / d),
    }


@dataclass(frozen=True)
class MCValue:
    estimate: float
    std_error: float

    def lower(self, k: float = 3.0) -> float:
        return self.estimate - k * self.std_error


def _c_samples(B, Y):
    nb = np.linalg.norm(B, axis=1)
    ny = np.linalg.norm(Y, axis=1)
    dot = np.sum(B * Y, axis=1)
    return (nb**2 * ny**2 - dot**2) / (nb * ny**3)


def _k_samples(B, Y, d):
    nb = np.linalg.norm(B, axis=1)
    ny = np.linalg.norm(Y, axis=1)
    dot = np.sum(B * Y, axis=1)
    return (d - 2 + dot**2 / (nb**2 * ny**2)) / (nb * ny)


def constants_CK(d: int, N: int = 100_000, seed: int = 0, batch: int = 200_000) -> dict:
    """Monte Carlo ``C`` and ``K`` with standard errors.

    Also returns ``C_swapped``, the estimate with the two Gaussians
    exchanged, and the standard error of the paired difference.
    """
    if d < 2:
        raise ConfigError("dimension must be at least 2", "d")
    if N < 100_000:
        raise ConfigError("at least 10^5 samples are required", "N")
    rng = np.random.default_rng(seed)
    c, k, cs, diff = Welford(), Welford(), Welford(), Welford()
    done = 0
    while done < N:
        b = min(batch, N - done)
        B = rng.standard_normal((b, d))
        Y = rng.standard_normal((b, d))
        x, xs = _c_samples(B, Y), _c_samples(Y, B)
        c, cs, diff = c.update(x), cs.update(xs), diff.update(x - xs)
        k = k.update(_k_samples(B, Y, d))
        done += b
    return {
        "C": MCValue(c.mean, c.std_error),
        "K": MCValue(k.mean, k.std_error),
        "C_swapped": MCValue(cs.mean, cs.std_error),
        "swap_difference": MCValue(diff.mean, diff.std_error),
        "samples": N,
        "seed": seed,
    }


@dataclass
class LemmaReport:
    d: int
    eps: np.ndarray
    m: np.ndarray
    m_std_error: np.ndarray
    ratio: np.ndarray
    ratio_std_error: np.ndarray
    C: MCValue
    ratio_slope: float
    second_differences: np.ndarray
    samples: int
    seed: int
    details: dict = field(default_factory=dict)


def lemma1_check(d: int, eps_list, N: int = 1_000_000, seed: int = 0, batch: int = 200_000) -> LemmaReport:
    """``m(eps) = E[<X, eps X + Y> / (|X| |eps X + Y|)]`` against ``eps C``.

    The same draws serve every ``eps`` and are used in antithetic pairs
    ``(X, Y)``, ``(X, -Y)``. The pairing makes ``m(0)`` exactly zero and
    cancels the even part of the noise. ``C`` is estimated from the same
    draws, so the ratio ``m(eps)/eps - C`` has a paired standard error.
    """
    if d < 2:
        raise ConfigError("dimension must be at least 2", "d")
    eps = np.asarray(sorted(float(e) for e in eps_list), dtype=np.float64)
    if len(eps) < 4 or eps[0] < 0 or eps[-1] > 0.2:
        raise ConfigError("need at least 4 values of eps in [0, 0.2]", "eps")
    if N < 100_000:
        raise ConfigError("at least 10^5 samples are required", "N")
    rng = np.random.default_rng(seed)
    accs = [Welford() for _ in eps]
    racc = [Welford() for _ in eps]
    cacc = Welford()
    done = 0
    while done < N:
        b = min(batch, N - done)
        X = rng.standard_normal((b, d))
        Y = rng.standard_normal((b, d))
        nx = np.linalg.norm(X, axis=1)
        csample = 0.5 * (_c_samples(X, Y) + _c_samples(X, -Y))
        cacc = cacc.update(csample)
        for i, e in enumerate(eps):
            vals = 0.0
            for sgn in (1.0, -1.0):
                Z = e * X + sgn * Y
                vals = vals + np.sum(X * Z, axis=1) / (nx * np.linalg.norm(Z, axis=1))
            vals = 0.5 * vals
            accs[i] = accs[i].update(vals)
            if e > 0:
                racc[i] = racc[i].update(vals / e - csample)
        done += b
    m = np.array([a.mean for a in accs])
    mse = np.array([a.std_error if a.count > 1 and a.m2 > 0 else 0.0 for a in accs])
    pos = eps > 0
    ratio = np.full_like(eps, np.nan)
    rse = np.full_like(eps, np.nan)
    ratio[pos] = m[pos] / eps[pos]
    rse[pos] = [racc[i].std_error for i in np.flatnonzero(pos)]
    slope = float(np.polyfit(eps[pos], ratio[pos], 1)[0]) if pos.sum() >= 2 else float("nan")
    second = np.diff(m, 2) if len(eps) >= 3 else np.array([])
    return LemmaReport(d, eps, m, mse, ratio, rse, MCValue(cacc.mean, cacc.std_error), slope, second, N, seed)


# ---------------------------------------------------------------------------
# verdict and scans


class Verdict(enum.Enum):
    LRD = "LRD"
    NOT_LRD = "NOT_LRD"


@dataclass(frozen=True)
class LrdVerdict:
    H: float
    verdict: Verdict
    rationale: str
    measured_slope: float | None = None
    disagreement: bool = False


def lrd_verdict(H, measured_slope: float | None = None, slope_tol: float = 0.15) -> LrdVerdict:
    """Threshold rule ``r(n) ~ n^(3H-3)``: long-range dependent iff ``H >= 2/3``.

    When a measured slope is supplied, ``disagreement`` is set if it lies on
    the other side of ``-1`` by more than ``slope_tol``.
    """
    h = HurstParam.coerce(H).value
    if h <= 0.5:
        raise ConfigError("the dichotomy covers 1/2 < H < 1 only", "H")
    lrd = h >= LRD_THRESHOLD - 1e-12
    verdict = Verdict.LRD if lrd else Verdict.NOT_LRD
    exponent = 3 * h - 3
    why = f"exponent 3H-3 = {exponent:.4g} {'>=' if lrd else '<'} -1, so sum |r(n)| {'diverges' if lrd else 'converges'}"
    disagree = False
    if measured_slope is not None:
        measured_lrd = measured_slope >= -1
        disagree = measured_lrd != lrd and abs(measured_slope + 1) > slope_tol
    return LrdVerdict(h, verdict, why, measured_slope, disagree)


def lrd_scan(Hs, a: float = 1.0, ns=(8, 16, 32, 64, 128), tol: float = DEFAULT_QUAD_TOL):
    """Quadrature ``r(n)`` over a set of ``H``; returns CSV text and a JSON-ready summary."""
    rows = [CSV_HEADER]
    summary = []
    for H in Hs:
        ests = [rn_quad_1d(a, n, H, tol) for n in ns]
        rows += [e.csv_row(float(H)) for e in ests]
        slope = fit_slope(ns, [e.value for e in ests])
        v = lrd_verdict(H, slope)
        summary.append({
            "H": float(H),
            "slope": slope,
            "expected_slope": 3 * float(H) - 3,
            "verdict": v.verdict.value,
            "disagreement": v.disagreement,
        })
    return "\n".join(rows) + "\n", summary


def summary_json(summary, **meta) -> str:
    return json.dumps({**meta, "scan": summary}, indent=2, sort_keys=True)
