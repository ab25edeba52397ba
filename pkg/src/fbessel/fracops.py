"""Right-sided fractional calculus and the square-root kernel of fBm.

Functions are represented cellwise linearly, with separate left and right
values on every cell so that jumps (indicators in particular) are carried
exactly. Against that representation the weakly singular kernels
``(u - s)^(alpha - 1)`` and ``(u - s)^(-alpha - 1)`` are integrated in closed
form (product integration).

The operator ``K*`` maps ``L^2``-like functions on ``[0, T]`` to ``L^2(0, T)``
and satisfies ``<K* 1_[0,t], K* 1_[0,s]> = R_H(t, s)``. For ``H > 1/2`` it is a
weighted right-sided Riemann-Liouville integral of order ``H - 1/2``; for
``H < 1/2`` a weighted Marchaud derivative of order ``1/2 - H``. Both branches
carry the prefactor ``e_H = c_H Gamma(H + 1/2)``.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from ._backend import kernels
from .errors import ConfigError, ConsistencyError
from .fbm import HurstParam, Regime, TimeGrid, fbm_covariance

GRADED_LEVELS = 30


@dataclass(frozen=True)
class SampledFunction:
    """Samples of a function on a uniform grid.

    ``points`` defaults to the grid nodes. Operators that cannot be
    evaluated at an endpoint shift that abscissa inward by half a cell and
    record the shifted location here.
    """

    grid: TimeGrid
    samples: np.ndarray
    points: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.shape != (self.grid.steps + 1,):
            raise ConfigError("samples must have length n+1", "samples")
        if not np.all(np.isfinite(s)):
            raise ConfigError("samples must be finite", "samples")
        object.__setattr__(self, "samples", s)
        pts = self.grid.points if self.points is None else np.asarray(self.points, float)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_callable(cls, f, grid: TimeGrid) -> "SampledFunction":
        return cls(grid, np.asarray(f(grid.points), dtype=np.float64))


@dataclass(frozen=True)
class KernelConstants:
    """Normalizing constants of the square-root kernel.

    ``d_H`` is defined only for ``H > 1/2`` and is ``nan`` otherwise.
    """

    H: float
    c_H: float
    d_H: float
    e_H: float


def _beta_continued(a, b):
    # Beta function through Gamma functions so that negative non-integer a works.
    return special.gamma(a) * special.gamma(b) / special.gamma(a + b)


def kernel_constants(H) -> KernelConstants:
    """Return ``c_H``, ``d_H = c_H Gamma(H-1/2)`` and ``e_H = c_H Gamma(H+1/2)``.

    For ``H > 1/2`` the Beta function ``B(1-2H, H+1/2)`` has a negative first
    argument and is evaluated by analytic continuation; the product
    ``(1-2H) B(1-2H, H+1/2)`` stays positive for every ``H`` in (0, 1).
    """
    h = HurstParam.coerce(H).value
    if h == 0.5:
        return KernelConstants(h, 1.0, np.nan, 1.0)
    radicand = 2 * h / ((1 - 2 * h) * _beta_continued(1 - 2 * h, h + 0.5))
    if not radicand > 0:
        raise ConsistencyError(f"c_H radicand is not positive ({radicand!r})")
    c = float(np.sqrt(radicand))
    d = c * special.gamma(h - 0.5) if h > 0.5 else np.nan
    return KernelConstants(h, c, float(d), float(c * special.gamma(h + 0.5)))


def c_h_from_isometry(H) -> float:
    """``c_H`` recovered by forcing ``||K* 1_[0,T]||^2 = T^2H`` at ``T = 1``.

    The unnormalized kernel is integrated with adaptive quadrature, so this
    is independent of the closed-form constant.
    """
    h = HurstParam.coerce(H).value
    if h == 0.5:
        return 1.0
    e_unit = special.gamma(h + 0.5)

    def k_unit(s):
        return _kernel_quad(1.0, s, h, 1.0, e_unit)

    a = -abs(h - 0.5)
    b = h - 0.5

    def g(s):
        s = min(max(s, 1e-15), 1 - 1e-15)
        return (k_unit(s) / (s**a * (1 - s) ** b)) ** 2

    # the inner quadratures warn about roundoff at the extreme abscissae only
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(g, 0, 1, weight="alg", wvar=(2 * a, 2 * b), limit=400, epsabs=0, epsrel=1e-12)
    return float(1.0 / np.sqrt(val))


def _validate_alpha(alpha, upper=None):
    if not alpha > 0 or (upper is not None and not alpha < upper):
        bound = "(0, inf)" if upper is None else f"(0, {upper})"
        raise ConfigError(f"order must lie in {bound}, got {alpha!r}", "alpha")


def _cellwise(f: SampledFunction):
    x = f.grid.points
    return x, f.samples[:-1], f.samples[1:]


def frac_integral_right(f: SampledFunction, alpha: float, T: float | None = None) -> SampledFunction:
    """Right-sided Riemann-Liouville integral ``I^alpha_{T-} f`` at the grid nodes.

    ``f`` is treated as its piecewise-linear interpolant, for which the
    result is exact up to rounding.
    """
    _validate_alpha(alpha)
    T = f.grid.horizon if T is None else T
    if abs(T - f.grid.horizon) > 1e-12 * T:
        raise ConfigError("horizon must match the grid", "T")
    edges, left, right = _cellwise(f)
    vals = kernels.rl_product(edges, left, right, edges, float(alpha)) / special.gamma(alpha)
    return SampledFunction(f.grid, vals)


def frac_derivative_right(f: SampledFunction, alpha: float, T: float | None = None) -> SampledFunction:
    """Right-sided Marchaud derivative ``D^alpha_{T-} f``.

    The boundary term ``f(t)/(T-t)^alpha`` is singular at ``t = T``, so the
    last abscissa is moved to ``T - dt/2``. Convergence of the Marchaud
    integral at the sampled scale assumes ``f`` is Holder of order above
    ``alpha``; this is the caller's responsibility.
    """
    _validate_alpha(alpha, 1.0)
    T = f.grid.horizon if T is None else T
    if abs(T - f.grid.horizon) > 1e-12 * T:
        raise ConfigError("horizon must match the grid", "T")
    edges, left, right = _cellwise(f)
    pts = edges.copy()
    pts[-1] = T - 0.5 * f.grid.dt
    vals = kernels.marchaud_product(edges, left, right, pts, float(alpha), float(T)) / special.gamma(1 - alpha)
    return SampledFunction(f.grid, vals, pts)


def graded_mesh(T: float, n: int, breaks=(), refine: int = 64, levels: int = GRADED_LEVELS) -> np.ndarray:
    """Integration mesh refined geometrically towards 0.

    The first grid cell is preceded by ``levels`` geometric points
    ``dt/refine * 2^-k``; grid cell ``j`` is split into ``ceil(refine/(j+1))``
    equal pieces, which resolves the power weights ``u^(H-1/2)``.
    Points in ``breaks`` are inserted so jumps fall on mesh edges.
    """
    dt = T / n
    parts = [np.zeros(1), dt / refine * 2.0 ** -np.arange(levels, 0, -1)]
    for j in range(n):
        m = max(1, int(np.ceil(refine / (j + 1))))
        parts.append(j * dt + dt * np.arange(1, m + 1) / m)
    mesh = np.concatenate(parts)
    extra = [b for b in breaks if 0 < b < T]
    if extra:
        near = np.zeros(mesh.shape, bool)
        for b in extra:
            near |= np.abs(mesh - b) <= 1e-12 * T
        mesh = np.unique(np.concatenate([mesh[~near], extra]))
    mesh[-1] = T
    return mesh


def _weighted_operand(edges, phi_left, phi_right, beta):
    """Cell values of ``u^beta * phi(u)``; the first cell uses its exact mean."""
    e0 = np.where(edges[:-1] > 0, edges[:-1], 1.0)
    left = e0**beta * phi_left
    right = edges[1:] ** beta * phi_right
    avg = edges[1] ** beta / (beta + 1)
    left[0] = avg * phi_left[0]
    right[0] = avg * phi_right[0]
    return left, right


def _kstar_on_mesh(edges, phi_left, phi_right, pts, h, T):
    kc = kernel_constants(h)
    beta = h - 0.5
    left, right = _weighted_operand(edges, phi_left, phi_right, beta)
    if h > 0.5:
        v = kernels.rl_product(edges, left, right, pts, beta) / special.gamma(beta)
    else:
        a = -beta
        v = kernels.marchaud_product(edges, left, right, pts, a, float(T)) / special.gamma(1 - a)
    return kc.e_H * pts ** (0.5 - h) * v


def kstar_apply(phi: SampledFunction, H, T: float | None = None, refine: int = 64) -> SampledFunction:
    """Apply ``K*_H`` to a sampled function.

    The first abscissa is moved to ``dt/2`` because the weight
    ``s^(1/2-H)`` is singular at 0. For ``H < 1/2`` the last abscissa is
    likewise moved to ``T - dt/2``. At ``H = 1/2`` the operator is the
    identity.
    """
    h = HurstParam.coerce(H).value
    grid = phi.grid
    T = grid.horizon if T is None else T
    if h == 0.5:
        return phi
    edges = graded_mesh(T, grid.steps, refine=refine)
    vals = np.interp(edges, grid.points, phi.samples)
    pts = grid.points.copy()
    pts[0] = 0.5 * grid.dt
    if h < 0.5:
        pts[-1] = T - 0.5 * grid.dt
    out = _kstar_on_mesh(edges, vals[:-1], vals[1:], pts, h, T)
    return SampledFunction(grid, out, pts)


def kstar_indicator(t: float, H, T: float, n: int, pts=None, refine: int = 64) -> np.ndarray:
    """Values of ``K*_H 1_[0,t)`` at ``pts`` (default: grid nodes, first at ``dt/2``)."""
    h = HurstParam.coerce(H).value
    dt = T / n
    if pts is None:
        pts = np.arange(n + 1) * dt
        pts[0] = 0.5 * dt
    pts = np.asarray(pts, dtype=np.float64)
    if h == 0.5:
        return (pts < t).astype(float)
    edges = graded_mesh(T, n, breaks=(t,), refine=refine)
    ind = (edges[:-1] < t).astype(float)
    keep = pts < T if h < 0.5 else np.ones(pts.shape, bool)
    out = np.zeros(pts.shape)
    out[keep] = _kstar_on_mesh(edges, ind, ind, pts[keep], h, T)
    return out


def _weighted_l2(x, h, c, a, b):
    """``int_0^c h(u) du`` where ``h = u^a (c-u)^b g`` with ``g`` linear between ``x``.

    ``x`` is increasing with ``x[0] > 0`` and ``x[-1] = c``. The power
    factors are integrated exactly through incomplete Beta functions.
    """
    g = np.empty_like(h)
    g[:-1] = h[:-1] / (x[:-1] ** a * (c - x[:-1]) ** b)
    g[-1] = g[-2] + (g[-2] - g[-3]) * (x[-1] - x[-2]) / (x[-2] - x[-3])
    e = np.r_[0.0, x]
    gg = np.r_[g[0], g]
    f0 = special.beta(a + 1, b + 1) * special.betainc(a + 1, b + 1, e / c) * c ** (a + b + 1)
    f1 = special.beta(a + 2, b + 1) * special.betainc(a + 2, b + 1, e / c) * c ** (a + b + 2)
    m0 = np.diff(f0)
    m1 = np.diff(f1) - e[:-1] * m0
    return float(np.sum(gg[:-1] * m0 + np.diff(gg) / np.diff(e) * m1))


def kstar_inner_indicators(t: float, s: float, H, T: float = 1.0, n: int = 2048) -> float:
    """``<K* 1_[0,t), K* 1_[0,s)>`` in ``L^2(0, T)`` computed on an n-cell grid.

    Both arguments must be grid nodes. The integrand behaves like
    ``u^(-2|H-1/2|)`` at 0 and like a power of ``min(s,t) - u`` at the upper
    limit; those factors are integrated exactly.
    """
    h = HurstParam.coerce(H).value
    dt = T / n
    lo, hi = sorted((float(t), float(s)))
    if lo <= 0:
        return 0.0
    m = int(round(lo / dt))
    if abs(m * dt - lo) > 1e-9 * T or abs(round(hi / dt) * dt - hi) > 1e-9 * T:
        raise ConfigError("t and s must be grid nodes", "t")
    if h == 0.5:
        return lo
    x = np.r_[dt * 2.0 ** -np.arange(GRADED_LEVELS, 0, -1), dt * np.arange(1, m + 1)]
    k_lo = kstar_indicator(lo, h, T, n, x)
    k_hi = k_lo if hi == lo else kstar_indicator(hi, h, T, n, x)
    a = -2 * abs(h - 0.5)
    b = 2 * (h - 0.5) if hi == lo else h - 0.5
    return _weighted_l2(x, k_lo * k_hi, lo, a, b)


def _kernel_quad(t, s, h, c, e):
    if h > 0.5:
        v, _ = integrate.quad(
            lambda u: u ** (h - 0.5), s, t, weight="alg", wvar=(h - 1.5, 0), limit=200, epsabs=0, epsrel=1e-11
        )
        return e / special.gamma(h - 0.5) * s ** (0.5 - h) * v
    v, _ = integrate.quad(
        lambda u: u ** (h - 1.5), s, t, weight="alg", wvar=(h - 0.5, 0), limit=200, epsabs=0, epsrel=1e-11
    )
    return c * ((t / s) ** (h - 0.5) * (t - s) ** (h - 0.5) - (h - 0.5) * s ** (0.5 - h) * v)


def _tail_beta(x, p, q):
    """``int_x^1 w^(q-1) (1-w)^(p-1) dw`` for ``0 < x <= 1``, ``p > 0``, ``q > -1``.

    For small ``x`` the expansion around 0 is used, with the Beta function
    continued to negative ``q``; elsewhere the Gauss hypergeometric form.
    """
    if x < 1e-6:
        if q == 0.0:
            return -np.log(x) - special.digamma(p) + special.digamma(1.0) + (p - 1) * x
        return _beta_continued(q, p) - x**q / q + (p - 1) * x ** (q + 1) / (q + 1)
    z = 1.0 - x
    return z**p / p * special.hyp2f1(p, 1 - q, p + 1, z)


def _kernel_closed(t, s, h, kc):
    x = s / t
    if h > 0.5:
        return kc.e_H / special.gamma(h - 0.5) * s ** (h - 0.5) * _tail_beta(x, h - 0.5, 1 - 2 * h)
    lead = (t / s) ** (h - 0.5) * (t - s) ** (h - 0.5)
    return kc.c_H * (lead - (h - 0.5) * s ** (h - 0.5) * _tail_beta(x, h + 0.5, 1 - 2 * h))


def kernel_K(t: float, s: float, H) -> float:
    """Square-root kernel ``K_H(t, s)``, zero for ``s >= t``.

    The inner integral of the kernel reduces, after the substitution
    ``u = s/w``, to an incomplete Beta function evaluated through ``2F1``.
    """
    h = HurstParam.coerce(H).value
    if not s > 0:
        raise ConfigError("kernel_K is singular at s = 0", "s")
    if not t > 0:
        raise ConfigError("t must be positive", "t")
    if s >= t:
        return 0.0
    if h == 0.5:
        return 1.0
    return float(_kernel_closed(float(t), float(s), h, kernel_constants(h)))


def kernel_inner(t: float, s: float, H) -> float:
    """``int_0^{min(s,t)} K(t,u) K(s,u) du`` by adaptive quadrature of :func:`kernel_K`."""
    h = HurstParam.coerce(H).value
    m = min(t, s)
    a = -2 * abs(h - 0.5)
    b = 2 * (h - 0.5) if t == s else h - 0.5

    def g(u):
        u = min(max(u, 1e-300), m * (1 - 1e-16))
        return kernel_K(t, u, h) * kernel_K(s, u, h) / (u**a * (m - u) ** b)

    val, _ = integrate.quad(g, 0, m, weight="alg", wvar=(a, b), limit=200, epsabs=0, epsrel=1e-9)
    return float(val)


def eta_low(t: float, r: float, H) -> float:
    """Kernel ``eta_H(t, r)`` with ``K* eta_H(t, .) = 1_[0,t)`` for ``H < 1/2``."""
    h = HurstParam.coerce(H).value
    if h >= 0.5:
        raise ConfigError("eta_low requires H < 1/2", "H")
    if not 0 < r < t:
        raise ConfigError("require 0 < r < t", "r")
    e = kernel_constants(h).e_H
    inner = _tail_beta(r / t, 0.5 - h, 0.0)
    return float(r ** (0.5 - h) * inner / (e * special.gamma(0.5 - h)))


def eta_high_bound(t: float, r: float, H) -> float:
    """Envelope ``t^(H-1/2) r^(H-1/2) (t-r)^(1/2-H)`` for ``H > 1/2`` (constant omitted)."""
    h = HurstParam.coerce(H).value
    if h <= 0.5:
        raise ConfigError("eta_high_bound requires H > 1/2", "H")
    if not 0 < r < t:
        raise ConfigError("require 0 < r < t", "r")
    return float(t ** (h - 0.5) * r ** (h - 0.5) * (t - r) ** (0.5 - h))


def isometry_errors(H, times, T: float = 1.0, n: int = 2048) -> np.ndarray:
    """Relative errors of ``||K* 1_[0,t)||^2`` against ``t^2H``."""
    h = HurstParam.coerce(H).value
    return np.array([kstar_inner_indicators(t, t, h, T, n) / t ** (2 * h) - 1 for t in times])


def bilinear_errors(H, pairs, T: float = 1.0, n: int = 2048) -> np.ndarray:
    """Relative errors of ``<K* 1_t, K* 1_s>`` against ``R_H(t, s)``."""
    h = HurstParam.coerce(H).value
    return np.array([kstar_inner_indicators(t, s, h, T, n) / fbm_covariance(s, t, h) - 1 for t, s in pairs])


def kernel_table_csv(H, ts, ss) -> str:
    """CSV ``t,s,K`` of :func:`kernel_K` on a product of abscissae."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "s", "K"])
    for t in ts:
        for s in ss:
            w.writerow([f"{t:.17g}", f"{s:.17g}", f"{kernel_K(t, s, H):.17g}"])
    return buf.getvalue()


__all__ = [
    "SampledFunction",
    "KernelConstants",
    "kernel_constants",
    "c_h_from_isometry",
    "frac_integral_right",
    "frac_derivative_right",
    "graded_mesh",
    "kstar_apply",
    "kstar_indicator",
    "kstar_inner_indicators",
    "kernel_K",
    "kernel_inner",
    "eta_low",
    "eta_high_bound",
    "isometry_errors",
    "bilinear_errors",
    "kernel_table_csv",
    "Regime",
]
