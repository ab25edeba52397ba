"""Test reports and streaming summary statistics."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class TestReport:
    """Outcome of one statistical or numerical check."""

    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    passed: bool
    p_value: float | None = None
    tolerance: float | None = None
    inputs_hash: str = ""
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = f" p={self.p_value:.4g}" if self.p_value is not None else ""
        tol = f" tol={self.tolerance:.3g}" if self.tolerance is not None else ""
        return f"{verdict} {self.name}: stat={self.statistic:.6g}{extra}{tol} ({self.runtime:.1f}s)"

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self), default=_jsonable))


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.bool_):
        return bool(x)
    return str(x)


def stable_hash(obj) -> str:
    """SHA-256 of the canonical JSON form of ``obj`` (first 16 hex digits)."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class Welford:
    """Running mean and variance that merge in a fixed order.

    Examples
    --------
    >>> a = Welford().update([1.0, 2.0]); b = Welford().update([3.0])
    >>> a.merge(b).mean
    2.0
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, values) -> "Welford":
        x = np.asarray(values, dtype=np.float64).ravel()
        if x.size == 0:
            return self
        other = Welford(x.size, float(x.mean()), float(((x - x.mean()) ** 2).sum()))
        return self.merge(other)

    def merge(self, other: "Welford") -> "Welford":
        n = self.count + other.count
        if n == 0:
            return Welford()
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return Welford(n, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else float("nan")

    @property
    def std_error(self) -> float:
        return float(np.sqrt(self.variance / self.count)) if self.count > 1 else float("nan")

    def summary(self) -> dict:
        return {"estimate": self.mean, "std_error": self.std_error, "replicas": self.count}
