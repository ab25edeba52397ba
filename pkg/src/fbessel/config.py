"""Experiment configuration read from INI files.

Every section and key is known in advance; anything else is rejected so a
typo can never silently fall back to a default. Example::

    [experiment]
    H = 0.7
    d = 1
    replicas = 1000
    master_seed = 42
    method = CIRCULANT

    [grid]
    T = 1.0
    n = 1024
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .ensemble import default_jobs
from .errors import ConfigError
from .fbm import HurstParam, Method, TimeGrid
from .lrd import DEFAULT_QUAD_TOL
from .processes import MollifierConfig
from .reports import stable_hash

_SCHEMA = {
    "experiment": {"H": float, "d": int, "replicas": int, "master_seed": int, "method": str, "jobs": int,
                   "output_dir": str},
    "grid": {"T": float, "n": int},
    "mollifier": {"levels": int, "eps": str},
    "lrd": {"quad_tol": float, "a": float, "lags": str, "gauss_samples": int},
    "chaos": {"K": int},
    "bench": {"sizes": str, "repetitions": int},
}


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.replace(",", " ").split())


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a run; its canonical hash tags every output file."""

    H: float = 0.7
    d: int = 1
    T: float = 1.0
    n: int = 1024
    replicas: int = 1000
    master_seed: int = 0
    method: str = "CIRCULANT"
    mollifier_levels: int = 7
    mollifier_eps: tuple = ()
    quad_tol: float = DEFAULT_QUAD_TOL
    lrd_a: float = 1.0
    lrd_lags: tuple = (8, 16, 32, 64, 128)
    gauss_samples: int = 20_000
    chaos_K: int = 10_000
    bench_sizes: tuple = tuple(2**k for k in range(10, 19))
    bench_repetitions: int = 5
    jobs: int = field(default_factory=default_jobs, compare=False)
    output_dir: str = "out"

    def __post_init__(self):
        HurstParam(self.H)
        if self.d < 1:
            raise ConfigError("dimension must be at least 1", "d")
        TimeGrid(self.T, self.n)
        if self.replicas < 1:
            raise ConfigError("replicas must be positive", "replicas")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer", "master_seed")
        object.__setattr__(self, "method", Method.coerce(self.method).value)
        if self.mollifier_levels < 1:
            raise ConfigError("at least one mollifier level is required", "levels")
        if self.mollifier_eps:
            MollifierConfig(self.mollifier_eps)
        if not 0 < self.quad_tol < 1:
            raise ConfigError("quad_tol must lie in (0, 1)", "quad_tol")
        if self.jobs < 1:
            raise ConfigError("jobs must be positive", "jobs")
        if len(self.bench_sizes) < 2:
            raise ConfigError("at least two benchmark sizes are required", "sizes")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.T, self.n)

    @property
    def mollifier(self) -> MollifierConfig:
        if self.mollifier_eps:
            return MollifierConfig(self.mollifier_eps)
        return MollifierConfig.default(self.grid, self.H, self.mollifier_levels)

    def canonical(self) -> dict:
        """Settings that determine results; the worker count and output location are excluded."""
        out = asdict(self)
        out.pop("jobs")
        out.pop("output_dir")
        return out

    @property
    def hash(self) -> str:
        return stable_hash(self.canonical())

    def header_lines(self) -> list:
        return [f"config_hash={self.hash}", f"master_seed={self.master_seed}"]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_FIELD_MAP = {
    ("experiment", "H"): "H",
    ("experiment", "d"): "d",
    ("experiment", "replicas"): "replicas",
    ("experiment", "master_seed"): "master_seed",
    ("experiment", "method"): "method",
    ("experiment", "jobs"): "jobs",
    ("experiment", "output_dir"): "output_dir",
    ("grid", "T"): "T",
    ("grid", "n"): "n",
    ("mollifier", "levels"): "mollifier_levels",
    ("mollifier", "eps"): "mollifier_eps",
    ("lrd", "quad_tol"): "quad_tol",
    ("lrd", "a"): "lrd_a",
    ("lrd", "lags"): "lrd_lags",
    ("lrd", "gauss_samples"): "gauss_samples",
    ("chaos", "K"): "chaos_K",
    ("bench", "sizes"): "bench_sizes",
    ("bench", "repetitions"): "bench_repetitions",
}

_LIST_PARSERS = {"mollifier_eps": _floats, "lrd_lags": _ints, "bench_sizes": _ints}


def parse_config(text: str) -> ExperimentConfig:
    """Build a configuration from INI text; unknown sections or keys raise :class:`ConfigError`."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", section)
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key in [{section}]", f"{section}.{key}")
            name = _FIELD_MAP[(section, key)]
            try:
                values[name] = _LIST_PARSERS[name](raw) if name in _LIST_PARSERS else _SCHEMA[section][key](raw)
            except ValueError:
                raise ConfigError(f"cannot parse {raw!r}", key) from None
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}", "config") from None
    return parse_config(text)
