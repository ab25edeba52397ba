import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbessel import _backend
from fbessel._backend import _kernels_py as slow
from fbessel.fbm import fgn_autocovariance

compiled = pytest.importorskip("fbessel._kernels")


def _cells(rng, n):
    edges = np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 1.5, n))])
    edges /= edges[-1]
    vals = rng.standard_normal(n + 1)
    # cellwise values may jump between cells, as in the graded quadrature
    left = vals[:-1].copy()
    right = vals[1:] + 0.1 * rng.standard_normal(n)
    return edges, left, right


def test_default_backend_is_compiled():
    assert _backend.BACKEND == "cython"


@pytest.mark.parametrize("h", [0.2, 0.5, 0.85])
def test_hosking(h):
    n = 200
    gamma = fgn_autocovariance(np.arange(n), 1.0 / n, h)
    z = np.random.default_rng(1).standard_normal((3, n))
    np.testing.assert_allclose(compiled.hosking_increments(gamma, z), slow.hosking_increments(gamma, z),
                               rtol=1e-10, atol=1e-13)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 40), alpha=st.floats(0.05, 1.9))
def test_riemann_liouville(seed, n, alpha):
    rng = np.random.default_rng(seed)
    edges, left, right = _cells(rng, n)
    pts = np.sort(rng.uniform(0, 1, 7))
    np.testing.assert_allclose(compiled.rl_product(edges, left, right, pts, alpha),
                               slow.rl_product(edges, left, right, pts, alpha), rtol=1e-9, atol=1e-12)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 40), alpha=st.floats(0.05, 0.95))
def test_marchaud(seed, n, alpha):
    rng = np.random.default_rng(seed)
    edges, left, right = _cells(rng, n)
    pts = np.append(edges[:-1], 1.0 - 0.5 * (edges[-1] - edges[-2]))
    np.testing.assert_allclose(compiled.marchaud_product(edges, left, right, pts, alpha, 1.0),
                               slow.marchaud_product(edges, left, right, pts, alpha, 1.0), rtol=1e-8, atol=1e-10)


def test_bridge_local_time():
    rng = np.random.default_rng(2)
    n, q = 50, 4
    paths = np.cumsum(rng.standard_normal((5, n + 1)), axis=1) / np.sqrt(n)
    lam0 = rng.uniform(0, 1, (n, q))
    lam1 = 1 - lam0
    var = rng.uniform(0, 0.02, (n, q))
    weight = np.full((n, q), 1.0 / (n * q))
    for eps in (1e-1, 1e-4, 1e-9):
        np.testing.assert_allclose(compiled.bridge_local_time(paths, lam0, lam1, var, weight, eps),
                                   slow.bridge_local_time(paths, lam0, lam1, var, weight, eps), rtol=1e-11, atol=1e-300)


def test_forced_fallback_gives_same_paths():
    code = ("import numpy as np; from fbessel import _backend; from fbessel.fbm import sample_fbm, TimeGrid;"
            "print(_backend.BACKEND); print(float(sample_fbm(TimeGrid(1.0, 64), 0.7, 1, 5, 'HOSKING').values[0, -1]))")
    out = {}
    for choice in ("python", "auto"):
        env = {**os.environ, "FBESSEL_BACKEND": choice}
        proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
        out[choice] = proc.stdout.split()
    assert out["python"][0] == "python" and out["auto"][0] == "cython"
    assert float(out["python"][1]) == pytest.approx(float(out["auto"][1]), rel=1e-10)
