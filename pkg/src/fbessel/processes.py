"""The fractional Bessel process and the divergence-integral process X.

X is never obtained by discretizing a stochastic integral. It is recovered
pathwise from Ito-Tanaka decompositions:

* ``d >= 2``: ``R_t = X_t + H (d-1) int_0^t s^(2H-1) / R_s ds``;
* ``d = 1``: ``|B_t| = X_t + L_t`` with the weighted local time
  ``L_t = 2H int_0^t delta_0(B_s) s^(2H-1) ds``.

The local time is approximated by replacing ``delta_0`` with the centred
Gaussian density of variance ``eps``. On each grid cell the path is replaced
by its Gaussian conditional law given the two endpoint values, which makes
the mollified integral computable even when ``eps`` is far below the
squared step size.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import stats

from ._backend import kernels
from .ensemble import run_blocks
from .errors import ConfigError, DegeneratePathError
from .fbm import FbmPath, HurstParam, TimeGrid, sample_fbm
from .reports import TestReport, stable_hash

BRIDGE_NODES = 8


class ProcessKind(enum.Enum):
    BESSEL_R = "BESSEL_R"
    DIVERGENCE_X = "DIVERGENCE_X"
    LOCALTIME_L = "LOCALTIME_L"
    DRIFT_A = "DRIFT_A"


@dataclass(frozen=True)
class ProcessPath:
    grid: TimeGrid
    values: np.ndarray
    kind: ProcessKind
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.steps + 1,):
            raise ConfigError("values must have length n+1", "values")
        if self.kind in (ProcessKind.DIVERGENCE_X, ProcessKind.LOCALTIME_L, ProcessKind.DRIFT_A) and v[0] != 0:
            raise ConfigError(f"{self.kind.value} must start at zero", "values")
        if self.kind in (ProcessKind.BESSEL_R, ProcessKind.LOCALTIME_L) and np.any(v < 0):
            raise ConfigError(f"{self.kind.value} must be nonnegative", "values")
        object.__setattr__(self, "values", v)

    def at(self, t: float) -> float:
        return float(self.values[self.grid.index(t)])


@dataclass(frozen=True)
class MollifierConfig:
    """Mollifier variances; ``schedule`` is strictly decreasing and ends at ``eps``."""

    schedule: tuple

    def __post_init__(self):
        sch = tuple(float(e) for e in self.schedule)
        if not sch or any(not e > 0 for e in sch):
            raise ConfigError("mollifier variances must be positive", "eps")
        if any(b >= a for a, b in zip(sch, sch[1:])):
            raise ConfigError("mollifier schedule must be strictly decreasing", "schedule")
        object.__setattr__(self, "schedule", sch)

    @property
    def eps(self) -> float:
        return self.schedule[-1]

    @classmethod
    def default(cls, grid: TimeGrid, H, levels: int = 7, ratio: float = 8.0) -> "MollifierConfig":
        """``eps_j = dt^(2H) ratio^-j`` for ``j = 0..levels-1``.

        The mean of the mollified local time falls short by about
        ``sqrt(2 eps / pi)``, so the finest level sits far below the
        squared step; the cell-wise bridge conditioning keeps tiny values
        of ``eps`` well resolved.
        """
        h = HurstParam.coerce(H).value
        base = grid.dt ** (2 * h)
        return cls(tuple(base * float(ratio) ** -j for j in range(levels)))


def _as_components(B) -> np.ndarray:
    return np.atleast_2d(B.values if isinstance(B, FbmPath) else np.asarray(B, dtype=np.float64))


def bessel_path(B: FbmPath) -> ProcessPath:
    """Euclidean norm of the components."""
    return ProcessPath(B.grid, np.sqrt(np.sum(B.values**2, axis=0)), ProcessKind.BESSEL_R)


def _drift_cells(R: np.ndarray, grid: TimeGrid, h: float) -> np.ndarray:
    """Cell integrals of ``s^(2H-1)/R_s`` for the rows of ``R`` (shape (m, n+1))."""
    t = grid.points
    inner = R[:, 1:]
    if np.any(inner <= 0):
        raise DegeneratePathError("Bessel path vanishes at an interior node")
    h2 = 2 * h
    t0, t1 = t[:-1], t[1:]
    m0 = (t1**h2 - t0**h2) / h2
    m1 = (t1 ** (h2 + 1) - t0 ** (h2 + 1)) / (h2 + 1) - t0 * m0
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / R
        slope = (inv[:, 1:] - inv[:, :-1]) / grid.dt
        cells = inv[:, :-1] * m0 + slope * m1
    # R_0 = 0: close the first cell with the local scaling R_s = R_t1 (s/t1)^H.
    start = R[:, 0] == 0
    cells[start, 0] = t1[0] ** h2 / (h * R[start, 1])
    return cells


def drift_path(R: ProcessPath, H, d: int) -> ProcessPath:
    """Running value of ``H (d-1) int_0^t s^(2H-1) / R_s ds``."""
    h = HurstParam.coerce(H).value
    if d < 2:
        raise ConfigError("drift integral needs d >= 2; use the local-time route for d = 1", "d")
    cells = _drift_cells(R.values[None, :], R.grid, h)[0]
    vals = np.r_[0.0, np.cumsum(cells)] * h * (d - 1)
    return ProcessPath(R.grid, vals, ProcessKind.DRIFT_A)


def drift_integral(R: ProcessPath, H, d: int, t: float) -> float:
    """``H (d-1) int_0^t s^(2H-1) / R_s ds`` by product integration.

    ``1/R`` is interpolated linearly on each cell and integrated exactly
    against ``s^(2H-1)``. When ``R_0 = 0`` the first cell is closed with the
    local scaling ``R_s ~ R_{t1} (s/t1)^H``.
    """
    return drift_path(R, H, d).at(t)


def x_process_multi(B: FbmPath, H=None) -> ProcessPath:
    """``X_t = R_t - H (d-1) int_0^t s^(2H-1) / R_s ds`` for ``d >= 2``."""
    h = HurstParam.coerce(B.H if H is None else H).value
    if B.dim < 2:
        raise ConfigError("x_process_multi needs d >= 2", "d")
    R = bessel_path(B)
    A = drift_path(R, h, B.dim)
    X = R.values - A.values
    X[0] = 0.0
    return ProcessPath(B.grid, X, ProcessKind.DIVERGENCE_X)


def _cov_incr(a, b, h2):
    """``Cov(B_a, B_b - B_a)`` computed without cancellation (``b > a``)."""
    a = np.asarray(a, dtype=np.float64)
    d = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        grow = np.where(a > 0, a**h2 * np.expm1(h2 * np.log1p(d / np.where(a > 0, a, 1.0))), 0.0)
    return 0.5 * (grow - d**h2)


@lru_cache(maxsize=16)
def bridge_tables(T: float, n: int, H: float, q: int = BRIDGE_NODES):
    """Per-cell Gaussian bridge coefficients and quadrature weights.

    For cell ``[t_i, t_{i+1}]`` and interior nodes ``s``, the conditional law
    of ``B_s`` given ``(B_{t_i}, B_{t_{i+1}}) = (x0, x1)`` is normal with mean
    ``lam0 x0 + lam1 x1`` and variance ``var``. The weights integrate
    against ``d(s^2H) = 2H s^(2H-1) ds``; nodes are Gauss-Legendre in a
    smoothstep-stretched coordinate that clusters them at both cell ends.
    """
    h2 = 2.0 * H
    dt = T / n
    x, w = leggauss(q)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    f = x * x * (3 - 2 * x)
    df = 6 * x * (1 - x)
    a = (np.arange(n) * dt)[:, None]
    z0 = a**h2
    z1 = (a + dt) ** h2
    z = z0 + (z1 - z0) * f
    s = z ** (1 / h2)
    s = np.clip(s, a, a + dt)
    weight = (z1 - z0) * w * df
    y = s - a  # offset inside the cell
    var_y = y**h2
    var_d = dt**h2
    c_yd = 0.5 * (y**h2 + dt**h2 - (dt - y) ** h2)
    var_a = a**h2
    c_ad = _cov_incr(a, a + dt, h2)
    c_ya = _cov_incr(a, s, h2)
    det = var_a * var_d - c_ad**2
    first = (a == 0)[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        beta_a = np.where(first[:, None], 0.0, (c_ya * var_d - c_yd * c_ad) / det)
        beta_d = np.where(first[:, None], c_yd / var_d, (c_yd * var_a - c_ya * c_ad) / det)
    var = np.maximum(var_y - beta_a * c_ya - beta_d * c_yd, 0.0)
    # B_s = x0 + Y, Y regressed on (x0, x1 - x0)
    lam0 = 1.0 + beta_a - beta_d
    lam1 = beta_d
    out = tuple(np.ascontiguousarray(v) for v in (lam0, lam1, var, weight))
    for v in out:
        v.setflags(write=False)
    return out


def local_time_paths(paths, grid: TimeGrid, H, eps: float) -> np.ndarray:
    """Mollified weighted local time for rows of ``paths`` (shape (m, n+1))."""
    h = HurstParam.coerce(H).value
    if not eps > 0:
        raise ConfigError(f"mollifier variance must be positive, got {eps!r}", "eps")
    tabs = bridge_tables(grid.horizon, grid.steps, h)
    return kernels.bridge_local_time(np.ascontiguousarray(paths, dtype=np.float64), *tabs, float(eps))


def local_time_mollified(B: FbmPath, H, eps: float, t: float) -> float:
    """``2H int_0^t p_eps(B_s) s^(2H-1) ds`` with ``p_eps`` the N(0, eps) density."""
    vals = _as_components(B)
    if vals.shape[0] != 1:
        raise ConfigError("local time is defined for d = 1", "d")
    grid = B.grid
    L = local_time_paths(vals, grid, H, eps)[0]
    return float(L[grid.index(t)])


def x_process_1d(B: FbmPath, H=None, mol: MollifierConfig | None = None) -> ProcessPath:
    """``X_t = |B_t| - L_t`` using the smallest variance of the schedule.

    The diagnostics record ``L_T`` for every variance in the schedule and
    the successive differences, a Cauchy check on the mollifier limit.
    """
    h = HurstParam.coerce(B.H if H is None else H).value
    vals = _as_components(B)
    if vals.shape[0] != 1:
        raise ConfigError("x_process_1d needs d = 1", "d")
    mol = MollifierConfig.default(B.grid, h) if mol is None else mol
    ends = []
    L = None
    for e in mol.schedule:
        L = local_time_paths(vals, B.grid, h, e)[0]
        ends.append(L[-1])
    X = np.abs(vals[0]) - L
    X[0] = 0.0
    diag = {"eps": list(mol.schedule), "L_T": ends, "increments": list(np.abs(np.diff(ends)))}
    return ProcessPath(B.grid, X, ProcessKind.DIVERGENCE_X, diag)


def x_block(paths: np.ndarray, grid: TimeGrid, H, eps: float | None = None) -> np.ndarray:
    """X for a block of paths of shape (m, d, n+1); returns (m, n+1)."""
    h = HurstParam.coerce(H).value
    d = paths.shape[1]
    if d == 1:
        eps = MollifierConfig.default(grid, h).eps if eps is None else eps
        b = paths[:, 0, :]
        X = np.abs(b) - local_time_paths(b, grid, h, eps)
    else:
        R = np.sqrt(np.sum(paths**2, axis=1))
        cells = _drift_cells(R, grid, h)
        A = np.zeros_like(R)
        np.cumsum(cells, axis=1, out=A[:, 1:])
        X = R - h * (d - 1) * A
    X[:, 0] = 0.0
    return X


@dataclass(frozen=True)
class XEnsemble:
    """Generator of X samples at chosen grid nodes.

    Replica ``r`` uses the fBm path ``sample_fbm(grid, H, d, replica_seed(seed, r))``.
    """

    grid: TimeGrid
    H: float
    d: int = 1
    method: str = "CIRCULANT"
    eps: float | None = None
    jobs: int = 1

    def sample(self, times, replicas: int, seed: int) -> np.ndarray:
        """Array of shape ``(replicas, len(times))`` with ``X`` at ``times``."""
        idx = [self.grid.index(t) for t in np.atleast_1d(times)]

        def work(seeds, first):
            paths = np.stack([sample_fbm(self.grid, self.H, self.d, s, self.method).values for s in seeds])
            return x_block(paths, self.grid, self.H, self.eps)[:, idx]

        return run_blocks(work, replicas, seed, self.jobs)


@dataclass(frozen=True)
class VarianceEstimate:
    estimate: float
    std_error: float
    fine: float
    coarse: float
    replicas: int


def x_variance_extrapolated(H, t: float = 1.0, n: int = 1024, replicas: int = 10_000, seed: int = 0,
                            coarsen: int = 4, jobs: int = 1) -> VarianceEstimate:
    """``Var(X_t)`` for ``d = 1`` with the grid bias removed by Richardson extrapolation.

    The local-time estimator returns the conditional mean of ``X`` given the
    grid values, which misses ``E Var(L_t | grid)``; that shortfall decays
    like ``dt^(1-H)``. Each path is evaluated on its own grid and on every
    ``coarsen``-th node, and the two second moments are combined so the
    leading term cancels. Using the same paths on both grids keeps the
    extrapolation noise small.
    """
    h = HurstParam.coerce(H).value
    if n % coarsen:
        raise ConfigError("n must be a multiple of the coarsening factor", "n")
    fine = TimeGrid(t, n)
    coarse = TimeGrid(t, n // coarsen)

    def work(seeds, first):
        paths = np.stack([sample_fbm(fine, h, 1, s).values for s in seeds])
        xf = x_block(paths, fine, h)[:, -1]
        xc = x_block(paths[:, :, ::coarsen], coarse, h)[:, -1]
        return np.column_stack([xf**2, xc**2])

    sq = run_blocks(work, replicas, seed, jobs)
    q = coarsen ** (1 - h) - 1
    per = sq[:, 0] + (sq[:, 0] - sq[:, 1]) / q
    return VarianceEstimate(float(per.mean()), float(per.std(ddof=1) / np.sqrt(replicas)),
                            float(sq[:, 0].mean()), float(sq[:, 1].mean()), replicas)


def self_similarity_test(sampler, H, a: float, t: float, replicas: int, seeds=(1, 2), alpha: float = 0.01,
                         exponent: float | None = None) -> TestReport:
    """Two-sample KS test of ``X_{at}`` against ``a^H X_t``.

    ``sampler(times, replicas, seed)`` returns X samples; the two samples come
    from independent seeds. ``exponent`` replaces ``H`` in the scaling factor
    (used for power checks).
    """
    h = HurstParam.coerce(H).value
    if replicas < 100:
        raise ConfigError("self-similarity test needs at least 100 replicas", "replicas")
    start = time.perf_counter()
    expo = h if exponent is None else float(exponent)
    xa = np.asarray(sampler([a * t], replicas, seeds[0]))[:, 0]
    xt = np.asarray(sampler([t], replicas, seeds[1]))[:, 0]
    res = stats.ks_2samp(xa, a**expo * xt)
    inputs = {"H": h, "a": a, "t": t, "replicas": replicas, "seeds": list(seeds), "exponent": expo}
    return TestReport(
        name=f"selfsim H={h:g} a={a:g} exponent={expo:g}",
        statistic=float(res.statistic),
        p_value=float(res.pvalue),
        tolerance=alpha,
        passed=bool(res.pvalue >= alpha),
        inputs_hash=stable_hash(inputs),
        runtime=time.perf_counter() - start,
        details=inputs,
    )


def excess_kurtosis_ci(x, level: float = 0.99, resamples: int = 2000, seed: int = 0):
    """Excess kurtosis with a percentile bootstrap interval."""
    x = np.asarray(x, dtype=np.float64)
    est = float(stats.kurtosis(x))
    rng = np.random.default_rng(seed)
    res = stats.bootstrap((x,), stats.kurtosis, n_resamples=resamples, confidence_level=level,
                          method="percentile", random_state=rng, vectorized=True)
    return est, float(res.confidence_interval.low), float(res.confidence_interval.high)


def increment_whiteness(X: np.ndarray, lags=range(1, 9)):
    """Lag correlations of increments with replica-level standard errors.

    ``X`` has one row per replica, sampled on equally spaced nodes. Returns
    a list of ``(lag, correlation, std_error)``.
    """
    dX = np.diff(X, axis=1)
    scale = np.mean(dX**2)
    out = []
    for k in lags:
        per = np.mean(dX[:, :-k] * dX[:, k:], axis=1)
        out.append((k, float(per.mean() / scale), float(per.std(ddof=1) / np.sqrt(len(per)) / scale)))
    return out
