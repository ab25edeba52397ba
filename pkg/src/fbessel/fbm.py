"""Exact simulation of d-dimensional fractional Brownian motion.

Three exact samplers are provided: Cholesky factorization of the Toeplitz
increment covariance, the Hosking (Durbin-Levinson) recursion, and circulant
embedding. All of them draw the increments of each component as a Gaussian
vector with the fractional Gaussian noise autocovariance and return the
cumulative sums.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg

from ._backend import kernels
from .errors import ConfigError, EmbeddingError, NotPositiveDefiniteError

EIGEN_CLAMP_RTOL = 1e-10


class Regime(enum.Enum):
    LOW = "LOW"
    HALF = "HALF"
    HIGH = "HIGH"


@dataclass(frozen=True)
class HurstParam:
    """Hurst index H in the open unit interval.

    Examples
    --------
    >>> HurstParam(0.7).regime
    <Regime.HIGH: 'HIGH'>
    """

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v) or not 0.0 < v < 1.0:
            raise ConfigError(f"Hurst index must lie in (0, 1), got {self.value!r}", "H")
        object.__setattr__(self, "value", v)

    @property
    def regime(self) -> Regime:
        if self.value == 0.5:
            return Regime.HALF
        return Regime.LOW if self.value < 0.5 else Regime.HIGH

    def __float__(self):
        return self.value

    @classmethod
    def coerce(cls, h) -> "HurstParam":
        return h if isinstance(h, cls) else cls(h)


def _h(h) -> float:
    return HurstParam.coerce(h).value


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_i = i T / n`` for ``i = 0..n``."""

    horizon: float
    steps: int

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ConfigError(f"horizon must be positive, got {self.horizon!r}", "T")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError(f"steps must be a positive integer, got {self.steps!r}", "n")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def index(self, t: float) -> int:
        """Index of the grid node at time ``t``; ``t`` must be a node."""
        k = int(round(t / self.dt))
        if k < 0 or k > self.steps or abs(k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ConfigError(f"time {t!r} is not a node of the grid", "t")
        return k


class Method(enum.Enum):
    CHOLESKY = "CHOLESKY"
    HOSKING = "HOSKING"
    CIRCULANT = "CIRCULANT"

    @classmethod
    def coerce(cls, m) -> "Method":
        if isinstance(m, cls):
            return m
        try:
            return cls(str(m).upper())
        except ValueError:
            raise ConfigError(f"unknown sampler {m!r}", "method") from None


@dataclass(frozen=True)
class FbmPath:
    """A sampled path with one row per component.

    ``values`` has shape ``(d, n+1)`` and starts at zero.
    """

    grid: TimeGrid
    values: np.ndarray
    H: float
    method: str
    seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if vals.shape[1] != self.grid.steps + 1:
            raise ConfigError("values do not match the grid length", "values")
        if not np.all(np.isfinite(vals)):
            raise ConfigError("path contains non-finite entries", "values")
        if np.any(vals[:, 0] != 0.0):
            raise ConfigError("path must start at zero", "values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def to_csv(self, fh=None, header_lines=()) -> str | None:
        """Write ``t,comp_0,...`` rows with 17 significant digits.

        Lines in ``header_lines`` are emitted first, each prefixed by ``#``.
        Returns the text when ``fh`` is None.
        """
        return write_csv(self, fh, header_lines)


def fbm_covariance(s, t, H):
    """Covariance ``E[B_s B_t] = (s^2H + t^2H - |t-s|^2H) / 2``."""
    h2 = 2.0 * _h(H)
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if np.any(s < 0) or np.any(t < 0):
        raise ConfigError("times must be nonnegative", "t")
    out = 0.5 * (s**h2 + t**h2 - np.abs(t - s) ** h2)
    return out if out.ndim else float(out)


def fgn_autocovariance(k, dt, H):
    """Autocovariance of unit-lag increments on a grid of spacing ``dt``."""
    h2 = 2.0 * _h(H)
    k = np.abs(np.asarray(k, dtype=np.float64))
    out = 0.5 * dt**h2 * (np.abs(k + 1) ** h2 + np.abs(k - 1) ** h2 - 2.0 * k**h2)
    return out if out.ndim else float(out)


def replica_seed(master_seed: int, replica: int) -> int:
    """Seed for replica ``r`` derived from ``(master_seed, r)`` alone."""
    ss = np.random.SeedSequence([int(master_seed) % 2**64, int(replica)])
    return int(ss.generate_state(1, np.uint64)[0])


@lru_cache(maxsize=32)
def _circulant_sqrt_eigs(n: int, dt: float, H: float) -> np.ndarray:
    gamma = fgn_autocovariance(np.arange(n + 1), dt, H)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    top = lam.max()
    if lam.min() < -EIGEN_CLAMP_RTOL * top:
        raise EmbeddingError(
            f"circulant embedding has eigenvalue {lam.min():.3e} below tolerance"
        )
    lam = np.where(lam < 0, 0.0, lam)
    out = np.sqrt(lam / (2 * n))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def _cholesky_factor(n: int, dt: float, H: float) -> np.ndarray:
    gamma = fgn_autocovariance(np.arange(n), dt, H)
    try:
        c = linalg.cholesky(linalg.toeplitz(gamma), lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"increment covariance not positive definite: {exc}")
    c.setflags(write=False)
    return c


def fgn_increments(n: int, dt: float, H, rng: np.random.Generator, rows: int, method) -> np.ndarray:
    """Draw ``rows`` independent increment vectors of length ``n``."""
    H = _h(H)
    method = Method.coerce(method)
    if method is Method.CIRCULANT:
        sq = _circulant_sqrt_eigs(n, float(dt), H)
        z = rng.standard_normal((rows, 2, 2 * n))
        y = np.fft.fft(sq * (z[:, 0] + 1j * z[:, 1]), axis=-1)
        return np.ascontiguousarray(y[:, :n].real)
    if method is Method.CHOLESKY:
        c = _cholesky_factor(n, float(dt), H)
        z = rng.standard_normal((rows, n))
        return z @ c.T
    gamma = fgn_autocovariance(np.arange(n), dt, H)
    z = rng.standard_normal((rows, n))
    return kernels.hosking_increments(gamma, z)


def sample_fbm(grid: TimeGrid, H, d: int = 1, seed: int = 0, method="CIRCULANT") -> FbmPath:
    """Sample one d-dimensional fBm path on ``grid``.

    Components are independent and the output depends only on the
    arguments, so equal inputs give bit-identical paths.
    """
    hp = HurstParam.coerce(H)
    if int(d) != d or d < 1:
        raise ConfigError(f"dimension must be a positive integer, got {d!r}", "d")
    method = Method.coerce(method)
    rng = np.random.default_rng(int(seed) % 2**64)
    inc = fgn_increments(grid.steps, grid.dt, hp.value, rng, int(d), method)
    vals = np.zeros((int(d), grid.steps + 1))
    np.cumsum(inc, axis=1, out=vals[:, 1:])
    return FbmPath(grid, vals, hp.value, method.value, int(seed))


def sample_fbm_block(grid: TimeGrid, H, d: int, seeds, method="CIRCULANT") -> np.ndarray:
    """Paths for a list of per-replica seeds, shape ``(len(seeds), d, n+1)``.

    Row ``r`` equals ``sample_fbm(grid, H, d, seeds[r], method).values``.
    """
    out = np.zeros((len(seeds), int(d), grid.steps + 1))
    for r, s in enumerate(seeds):
        out[r] = sample_fbm(grid, H, d, s, method).values
    return out


def write_csv(path: FbmPath, fh=None, header_lines=()):
    buf = io.StringIO() if fh is None else fh
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"comp_{i}" for i in range(path.dim)])
    for i, t in enumerate(path.grid.points):
        w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in path.values[:, i]])
    return buf.getvalue() if fh is None else None


def read_csv(text: str):
    """Parse the CSV layout written by :func:`write_csv`.

    Returns ``(times, values)`` with ``values`` of shape ``(d, n+1)``.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    data = np.array(rows[1:], dtype=np.float64)
    return data[:, 0], data[:, 1:].T.copy()
