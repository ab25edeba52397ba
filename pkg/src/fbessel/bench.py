"""Wall-time benchmarks for the path generators and the compiled kernels."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels_py
from ._backend import BACKEND, kernels
from .errors import ConfigError
from .fbm import Method, _cholesky_factor, _circulant_sqrt_eigs, fgn_autocovariance, fgn_increments

# Largest sizes timed per sampler: beyond these the quadratic and cubic
# methods dominate the benchmark budget without adding information.
SIZE_CAPS = {Method.CIRCULANT: 2**24, Method.HOSKING: 2**14, Method.CHOLESKY: 4096}


@dataclass(frozen=True)
class Timing:
    method: str
    n: int
    repetitions: int
    median: float
    samples: tuple


def _clear_caches():
    _circulant_sqrt_eigs.cache_clear()
    _cholesky_factor.cache_clear()


def time_sampler(method, n: int, repetitions: int = 5, H: float = 0.7, seed: int = 0) -> Timing:
    """Median wall time of one full draw of ``n`` increments, setup included."""
    method = Method.coerce(method)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(repetitions):
        _clear_caches()
        start = time.perf_counter()
        fgn_increments(n, 1.0 / n, H, rng, 1, method)
        out.append(time.perf_counter() - start)
    return Timing(method.value, int(n), repetitions, float(np.median(out)), tuple(out))


def complexity_exponent(timings) -> float:
    """Slope of ``log(median time)`` against ``log n``."""
    n = np.log([t.n for t in timings])
    y = np.log([t.median for t in timings])
    return float(np.polyfit(n, y, 1)[0])


def run_bench(sizes, methods=("CIRCULANT", "HOSKING", "CHOLESKY"), repetitions: int = 5, H: float = 0.7):
    """Time every sampler on every admissible size.

    Returns ``{method: {"timings": [...], "exponent": float}}``; sizes above
    a method's cap in :data:`SIZE_CAPS` are skipped.
    """
    sizes = sorted(int(s) for s in sizes)
    if len(sizes) < 2:
        raise ConfigError("at least two sizes are required", "sizes")
    if repetitions < 5:
        raise ConfigError("at least 5 repetitions are required", "repetitions")
    result = {}
    for m in methods:
        m = Method.coerce(m)
        use = [n for n in sizes if n <= SIZE_CAPS[m]]
        timings = [time_sampler(m, n, repetitions, H) for n in use]
        result[m.value] = {
            "timings": timings,
            "exponent": complexity_exponent(timings) if len(timings) >= 2 else float("nan"),
        }
    return result


def bench_table_csv(result) -> str:
    rows = ["method,n,repetitions,median_seconds"]
    for m, r in result.items():
        rows += [f"{m},{t.n},{t.repetitions},{t.median:.6g}" for t in r["timings"]]
    return "\n".join(rows) + "\n"


def _median_time(fn, repetitions):
    out = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        out.append(time.perf_counter() - start)
    return float(np.median(out))


def backend_comparison(sizes=(1024, 4096), repetitions: int = 5, seed: int = 0):
    """Compiled versus numpy kernels on the Hosking recursion and the local-time sum.

    Returns a list of dicts with both medians and their ratio. When the
    extension is not built both columns time the numpy code.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        gamma = fgn_autocovariance(np.arange(n), 1.0 / n, 0.7)
        z = rng.standard_normal((4, n))
        fast = _median_time(lambda: kernels.hosking_increments(gamma, z), repetitions)
        slow = _median_time(lambda: _kernels_py.hosking_increments(gamma, z), repetitions)
        rows.append({"kernel": "hosking", "n": int(n), "compiled": fast, "numpy": slow, "speedup": slow / fast})

        q = 8
        paths = np.cumsum(rng.standard_normal((64, n + 1)), axis=1) / np.sqrt(n)
        paths[:, 0] = 0
        lam0 = np.full((n, q), 0.5)
        lam1 = np.full((n, q), 0.5)
        var = np.full((n, q), 0.25 / n)
        weight = np.full((n, q), 1.0 / (n * q))
        eps = 1.0 / n
        fast = _median_time(lambda: kernels.bridge_local_time(paths, lam0, lam1, var, weight, eps), repetitions)
        slow = _median_time(lambda: _kernels_py.bridge_local_time(paths, lam0, lam1, var, weight, eps), repetitions)
        rows.append({"kernel": "bridge_local_time", "n": int(n), "compiled": fast, "numpy": slow, "speedup": slow / fast})
    return {"backend": BACKEND, "rows": rows}
