"""Wiener-chaos coefficients of ``sign(B_t)`` and of ``X_t = int_0^t sign(B_s) dB_s``.

Factorials are handled through ``gammaln`` so coefficients stay finite for
large orders. Two normalizations of the coefficients of ``X`` are exposed:
``"printed"`` is the closed form as commonly printed, and ``"symmetrized"``
divides it by ``2k``, the factor lost when the iterated integral over the
simplex is rewritten as a multiple integral over the cube. Only the latter
reproduces ``Var(X_t) = t^2H`` at ``H = 1/2`` and is used for variances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, ConsistencyError
from .fbm import HurstParam
from .reports import Welford

LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)


@dataclass(frozen=True)
class ChaosCoefficient:
    """Coefficient of order ``order``; its value at time t is ``value_at_unit_time * t**time_exponent``."""

    order: int
    value_at_unit_time: float
    time_exponent: float

    def at(self, t: float) -> float:
        return self.value_at_unit_time * t**self.time_exponent


@dataclass(frozen=True)
class MaxKernel:
    """Symmetric kernel ``(s_1 v ... v s_m)^(-p)``."""

    order: int
    power: float

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        return np.max(s, axis=-1) ** (-self.power)


@dataclass(frozen=True)
class MultiIndexCoefficient:
    i: int
    j: tuple
    estimate: float
    std_error: float
    samples: int


@dataclass(frozen=True)
class SignCovariance:
    rho: float
    series_value: float
    arcsine_value: float
    verbatim_value: float | None = None


def sign_coeff(k: int, t: float = 1.0, H=0.5) -> ChaosCoefficient:
    """Coefficient of order ``2k+1`` in the iterated-integral expansion of ``sign(B_t)``."""
    h = HurstParam.coerce(H).value
    if k < 0 or int(k) != k:
        raise ConfigError("k must be a nonnegative integer", "k")
    logv = np.log(2.0) - np.log(2 * k + 1) - LOG_SQRT_2PI - special.gammaln(k + 1) - k * np.log(2.0)
    return ChaosCoefficient(2 * k + 1, float((-1) ** k * np.exp(logv)), -(2 * k + 1) * h)


def log_sign_term_variance(k):
    k = np.asarray(k, dtype=np.float64)
    return (
        np.log(4.0)
        + special.gammaln(2 * k + 1)
        - np.log(2 * k + 1)
        - np.log(2 * np.pi)
        - 2 * (special.gammaln(k + 1) + k * np.log(2.0))
    )


def sign_term_variance(k, H=None):
    """``4 (2k)! / ((2k+1) 2 pi (k! 2^k)^2)``; the same for every t and H."""
    out = np.exp(log_sign_term_variance(k))
    return out if np.ndim(out) else float(out)


def sign_variance_partial_sums(K: int) -> np.ndarray:
    return np.cumsum(sign_term_variance(np.arange(K + 1)))


def _correlation(u, v, h):
    r = 0.5 * (u ** (2 * h) + v ** (2 * h) - abs(u - v) ** (2 * h))
    rho = r / (u * v) ** h
    if abs(rho) > 1 + 1e-12:
        raise ConsistencyError(f"correlation {rho!r} outside [-1, 1]")
    return float(np.clip(rho, -1.0, 1.0))


def sign_series(rho: float, K: int = 200) -> float:
    """``sum_k (2/pi) (2k)! / (4^k (k!)^2 (2k+1)) rho^(2k+1)`` for ``k <= K``."""
    k = np.arange(K + 1, dtype=np.float64)
    logc = np.log(2 / np.pi) + special.gammaln(2 * k + 1) - k * np.log(4.0) - 2 * special.gammaln(k + 1) - np.log(2 * k + 1)
    if rho == 0:
        return 0.0
    terms = np.exp(logc + (2 * k + 1) * np.log(abs(rho))) * np.sign(rho)
    return float(np.sum(terms[::-1]))


def sign_series_verbatim(rho: float, K: int = 200) -> float:
    """The series with coefficient ``4(2k)!/((2k+1)^2 2 pi (k! 2^k)^2)`` in powers of ``2 rho``.

    Retained for comparison only: it equals the resummed series term by term
    times ``2^(2k+1)/(2k+1)`` and diverges for ``|rho| > 1/2``.
    """
    k = np.arange(K + 1, dtype=np.float64)
    logc = np.log(4.0) + special.gammaln(2 * k + 1) - 2 * np.log(2 * k + 1) - np.log(2 * np.pi) - 2 * (
        special.gammaln(k + 1) + k * np.log(2.0)
    )
    if rho == 0:
        return 0.0
    with np.errstate(over="ignore"):
        terms = np.exp(logc + (2 * k + 1) * np.log(2 * abs(rho))) * np.sign(rho)
    return float(np.sum(terms[::-1]))


def sign_covariance(u: float, v: float, H, K: int = 200, verbatim: bool = False) -> SignCovariance:
    """``E[sign(B_u) sign(B_v)]`` from the chaos series and from the arcsine law."""
    h = HurstParam.coerce(H).value
    if not (u > 0 and v > 0):
        raise ConfigError("u and v must be positive", "u")
    rho = _correlation(u, v, h)
    return SignCovariance(
        rho,
        sign_series(rho, K),
        float(2 / np.pi * np.arcsin(rho)),
        sign_series_verbatim(rho, K) if verbatim else None,
    )


def x_coeff(k: int, H=0.5, convention: str = "printed") -> tuple[ChaosCoefficient, MaxKernel]:
    """Coefficient and kernel of the order-``2k`` term of ``X_t``.

    The kernel is ``h_2k(s) = max(s)^(-(2k-1)H)``; the term is
    ``c_k I_2k(h_2k 1_[0,t]^2k)``.
    """
    h = HurstParam.coerce(H).value
    if k < 1 or int(k) != k:
        raise ConfigError("k must be a positive integer", "k")
    logv = _log_abs_x_coeff(k, convention)
    coef = ChaosCoefficient(2 * k, float((-1) ** (k - 1) * np.exp(logv)), 0.0)
    return coef, MaxKernel(2 * k, (2 * k - 1) * h)


def _log_abs_x_coeff(k: int, convention: str) -> float:
    if convention == "printed":
        return -(LOG_SQRT_2PI + np.log(2 * k - 1) + special.gammaln(k) + (k - 2) * np.log(2.0))
    if convention == "symmetrized":
        return -(LOG_SQRT_2PI + np.log(2 * k - 1) + special.gammaln(k + 1) + (k - 1) * np.log(2.0))
    raise ConfigError(f"unknown convention {convention!r}", "convention")


def _log_tensor_norm_excess(k: int, h: float) -> float:
    """``log J_k`` with ``J_k = g int_0^1 u^(-g-1) R(1,u)^2k du`` and ``g = (2k-1)H``.

    Written as ``g int_0^1 u^(H-1) rho(u)^2k du`` with ``rho`` the correlation
    of ``B_1`` and ``B_u``; the mass concentrates near ``u = 1`` in a layer
    of width ``k^(-1/2H)``, which sets the breakpoints.
    """
    g = (2 * k - 1) * h

    def f(u):
        r = 0.5 * (u ** (2 * h) - np.expm1(2 * h * np.log1p(-u)))
        if r <= 0:
            return 0.0
        return np.exp((h - 1) * np.log(u) + 2 * k * (np.log(r) - h * np.log(u)))

    w = k ** (-1 / (2 * h))
    pts = sorted({min(max(1 - c * w, 1e-12), 1 - 1e-15) for c in (1.0, 4.0, 16.0, 64.0)})
    total = 0.0
    for lo, hi in zip([0.0] + pts, pts + [1.0]):
        total += integrate.quad(f, lo, hi, limit=400, epsabs=0, epsrel=1e-11)[0]
    return float(np.log(g) + np.log(total))


def x_tensor_norm(k: int, H, t: float = 1.0) -> float:
    """``||h_2k 1_[0,t]^2k||^2`` in the 2k-fold tensor power of the fBm Hilbert space.

    Exact one-dimensional representation ``t^2H (1 + (2k+1) J_k)``, obtained by
    expanding the kernel as a superposition of indicator tensors.
    """
    h = HurstParam.coerce(H).value
    return float(t ** (2 * h) * (1 + (2 * k + 1) * np.exp(_log_tensor_norm_excess(k, h))))


def x_term_variance(k: int, H, t: float = 1.0) -> float:
    """Variance of the order-``2k`` chaos term of ``X_t`` (symmetrized coefficients)."""
    h = HurstParam.coerce(H).value
    logv = 2 * _log_abs_x_coeff(k, "symmetrized") + special.gammaln(2 * k + 1)
    logv += 2 * h * np.log(t) + np.log1p((2 * k + 1) * np.exp(_log_tensor_norm_excess(k, h)))
    return float(np.exp(logv))


def x_term_bound(k):
    """``(2k)! / (k! 2^k)^2``, the decay envelope quoted for the chaos terms of X."""
    k = np.asarray(k, dtype=np.float64)
    out = np.exp(special.gammaln(2 * k + 1) - 2 * (special.gammaln(k + 1) + k * np.log(2.0)))
    return out if np.ndim(out) else float(out)


def x_term_decay_exponent(H) -> float:
    """Asymptotic log-log slope ``-1/2 - 1/(2H)`` of the chaos-term variances of X."""
    return -0.5 - 0.5 / HurstParam.coerce(H).value


def x_variance_series(H, K: int = 2000, t: float = 1.0):
    """``sum_{k<=K}`` of the term variances plus a power-law tail.

    The tail uses the asymptotic exponent from :func:`x_term_decay_exponent`
    anchored at the last term. Returns ``(total, partial_sum, tail)``.
    """
    h = HurstParam.coerce(H).value
    terms = np.array([x_term_variance(k, h, t) for k in range(1, K + 1)])
    p = -x_term_decay_exponent(h)
    tail = terms[-1] * K**p * special.zeta(p, K + 1)
    return float(terms.sum() + tail), float(terms.sum()), float(tail)


def truncated_variance_k32_tail(terms) -> float:
    """``sum`` of the given leading terms plus ``t_K sum_{k>K} (k/K)^(-3/2)``."""
    terms = np.asarray(terms, dtype=np.float64)
    K = len(terms)
    return float(terms.sum() + terms[-1] * K**1.5 * special.zeta(1.5, K + 1))


def tanaka_variance(H, t: float = 1.0) -> float:
    """``Var(X_t)`` from ``X_t = |B_t| - L_t`` and Gaussian conditioning.

    Reduces to ``t^2H (1 + (2H/pi) int_0^1 v^(H-1) [(1-r^2)^(-1/2) - 2 (1-r^2)^(1/2)] dv)``
    with ``r`` the correlation of ``B_1`` and ``B_v``; independent of the
    chaos expansion.
    """
    h = HurstParam.coerce(H).value

    def q_of(w):
        # 1 - r^2 at v = 1 - w; 1 - r = (w^2H - (1 - v^H)^2) / (2 v^H) avoids cancellation
        w = min(max(w, 1e-150), 1 - 1e-15)
        vh = np.exp(h * np.log1p(-w))
        gap = -np.expm1(h * np.log1p(-w))
        one_minus_r = 0.5 * (w ** (2 * h) - gap * gap) / vh
        return one_minus_r * (2 - one_minus_r), vh / (1 - w)

    def f(w):
        q, jac = q_of(w)
        return jac * (1 / np.sqrt(q) - 2 * np.sqrt(q))

    def f_left(w):
        q, jac = q_of(w)
        w = max(w, 1e-150)
        return jac * (w**h / np.sqrt(q) - 2 * w**h * np.sqrt(q))

    def f_right(u):
        # v = u^(1/H) absorbs the factor v^(H-1) and makes the integrand smooth in u
        q, _ = q_of(1 - u ** (1 / h))
        return (1 / np.sqrt(q) - 2 * np.sqrt(q)) / h

    # the endpoint singularities are algebraic: w^(-H) at w = 0 and v^(H-1) at v = 0
    opts = {"limit": 400, "epsabs": 0, "epsrel": 1e-10}
    val = integrate.quad(f_left, 0.0, 0.01, weight="alg", wvar=(-h, 0.0), **opts)[0]
    val += integrate.quad(f, 0.01, 0.5, **opts)[0]
    val += integrate.quad(f_right, 0.0, 0.5**h, **opts)[0]
    return float(t ** (2 * h) * (1 + 2 * h / np.pi * val))


def _tilted_max_sample(rng, size, m, t, c):
    """Points in ``[0,t]^m`` whose max has density ``(c+1) M^c / t^(c+1)``."""
    mx = t * rng.random(size) ** (1.0 / (c + 1))
    pts = rng.random((size, m)) * mx[:, None]
    which = rng.integers(0, m, size)
    pts[np.arange(size), which] = mx
    return pts


def _tilted_density(pts, t, c):
    m = pts.shape[-1]
    mx = pts.max(axis=-1)
    return (c + 1) * mx**c / t ** (c + 1) / (m * mx ** (m - 1))


def _distance_sample(rng, shape, t, h):
    """Signed offsets on ``[-t, t]`` with density proportional to ``|x|^(2H-2)``."""
    mag = t * rng.random(shape) ** (1.0 / (2 * h - 1))
    return np.where(rng.random(shape) < 0.5, -mag, mag)


def x_tensor_norm_mc(k: int, H, t: float = 1.0, N: int = 200_000, seed: int = 0, batch: int = 50_000):
    """Monte Carlo ``||h_2k 1_[0,t]^2k||^2`` for ``H > 1/2``, ``k <= 3``.

    Uses the product representation of the inner product with density
    ``H(2H-1)|s-u|^(2H-2)`` per coordinate pair. Pair offsets are drawn
    exactly from ``|x|^(2H-2)``; one of the two point sets is drawn with its
    maximum tilted towards 0 to match the kernel singularity, and a balanced
    mixture over which set is tilted keeps the weights bounded.
    Returns ``(estimate, std_error)``.
    """
    h = HurstParam.coerce(H).value
    if h <= 0.5:
        raise ConfigError("the product-density representation needs H > 1/2", "H")
    if not 1 <= k <= 3:
        raise ConfigError("only orders k = 1..3 are supported", "k")
    m = 2 * k
    gam = (2 * k - 1) * h
    c = m - 1 - gam
    pair = 2 * h * t ** (2 * h - 1)
    rng = np.random.default_rng(seed)
    acc = Welford()
    done = 0
    while done < N:
        b = min(batch, N - done)
        base = _tilted_max_sample(rng, b, m, t, c)
        off = _distance_sample(rng, (b, m), t, h)
        other = base + off
        flip = rng.random(b) < 0.5
        s = np.where(flip[:, None], other, base)
        u = np.where(flip[:, None], base, other)
        inside = np.all((other > 0) & (other < t), axis=1)
        w = np.zeros(b)
        si, ui = s[inside], u[inside]
        hs = si.max(axis=1) ** (-gam)
        hu = ui.max(axis=1) ** (-gam)
        mix = 0.5 * _tilted_density(si, t, c) + 0.5 * _tilted_density(ui, t, c)
        w[inside] = hs * hu * pair**m / mix
        acc = acc.update(w)
        done += b
    return acc.mean, acc.std_error


def x_term_variance_mc(k: int, t: float, H, N: int = 200_000, seed: int = 0):
    """Monte Carlo variance of the order-``2k`` term of ``X_t``; returns ``(estimate, std_error)``."""
    est, se = x_tensor_norm_mc(k, H, t, N, seed)
    c, _ = x_coeff(k, H, "symmetrized")
    scale = c.value_at_unit_time**2 * float(np.exp(special.gammaln(2 * k + 1)))
    return est * scale, se * scale


def _hermite_multi(y, j):
    """Multivariate Hermite polynomial ``(-1)^n d^n/dy_j1..dy_jn e^{-|y|^2/2} / e^{-|y|^2/2}``.

    Factorizes over coordinates into probabilists' Hermite polynomials of the
    multiplicities.
    """
    out = np.ones(y.shape[0])
    counts = np.bincount(np.asarray(j, dtype=int), minlength=y.shape[1]) if len(j) else np.zeros(y.shape[1], int)
    for axis, m in enumerate(counts):
        if m:
            out = out * special.eval_hermitenorm(int(m), y[:, axis])
    return out


def dcoeff_mc(i: int, j, d: int, N: int = 100_000, seed: int = 0, f=None, batch: int = 100_000) -> MultiIndexCoefficient:
    """``E[f_i(Y) He_j(Y)]`` for a standard normal ``Y`` in ``R^d``.

    Components and multi-index entries are 1-based. ``f`` defaults to
    ``y_i / |y|``, which is bounded by 1 so no regularization is needed at
    the origin.
    """
    if d < 2:
        raise ConfigError("dimension must be at least 2", "d")
    if N < 10_000:
        raise ConfigError("at least 10^4 samples are required", "N")
    j = tuple(int(x) for x in j)
    if not 1 <= i <= d or any(not 1 <= x <= d for x in j):
        raise ConfigError("indices must lie in 1..d", "j")
    jj = [x - 1 for x in j]
    rng = np.random.default_rng(seed)
    acc = Welford()
    done = 0
    while done < N:
        b = min(batch, N - done)
        y = rng.standard_normal((b, d))
        if f is None:
            r = np.sqrt(np.sum(y * y, axis=1))
            fi = y[:, i - 1] / r
        else:
            fi = f(y)
        acc = acc.update(fi * _hermite_multi(y, jj))
        done += b
    return MultiIndexCoefficient(i, j, acc.mean, acc.std_error, acc.count)


def coefficient_table_csv(H, K: int = 20) -> str:
    """CSV ``order,value_at_unit_time,time_exponent`` for sign(B_t) and X_t coefficients."""
    rows = ["order,value_at_unit_time,time_exponent"]
    for k in range(K + 1):
        c = sign_coeff(k, 1.0, H)
        rows.append(f"{c.order},{c.value_at_unit_time:.17g},{c.time_exponent:.17g}")
    for k in range(1, K + 1):
        c, _ = x_coeff(k, H, "symmetrized")
        rows.append(f"{c.order},{c.value_at_unit_time:.17g},{c.time_exponent:.17g}")
    return "\n".join(rows) + "\n"
