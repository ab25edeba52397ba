"""Pure numpy implementations of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def hosking_increments(gamma, z):
    gamma = np.ascontiguousarray(gamma, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    n = gamma.shape[0]
    out = np.zeros(z.shape)
    phi = np.zeros(n)
    v = gamma[0]
    out[:, 0] = np.sqrt(v) * z[:, 0]
    for t in range(1, n):
        prev = phi[: t - 1].copy()
        phi_tt = (gamma[t] - prev @ gamma[t - 1 : 0 : -1]) / v
        phi[: t - 1] = prev - phi_tt * prev[::-1]
        phi[t - 1] = phi_tt
        v = v * (1.0 - phi_tt * phi_tt)
        out[:, t] = out[:, t - 1 :: -1] @ phi[:t] + np.sqrt(v) * z[:, t]
    return out


def rl_product(edges, left, right, pts, alpha):
    edges = np.asarray(edges, dtype=np.float64)
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    slope = (right - left) / np.diff(edges)
    out = np.empty(len(pts))
    for i, s in enumerate(np.asarray(pts, dtype=np.float64)):
        hi = edges[1:] - s
        act = hi > 0
        hi = hi[act]
        off = edges[:-1][act] - s
        lo = np.maximum(off, 0.0)
        m0 = (hi**alpha - lo**alpha) / alpha
        m1 = (hi ** (alpha + 1) - lo ** (alpha + 1)) / (alpha + 1) - off * m0
        out[i] = np.sum(left[act] * m0 + slope[act] * m1)
    return out


def marchaud_product(edges, left, right, pts, alpha, horizon):
    edges = np.asarray(edges, dtype=np.float64)
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    ncell = left.shape[0]
    slope = (right - left) / np.diff(edges)
    out = np.empty(len(pts))
    for i, s in enumerate(np.asarray(pts, dtype=np.float64)):
        j0 = min(int(np.searchsorted(edges, s, side="right")) - 1, ncell - 1)
        gs = left[j0] + slope[j0] * (s - edges[j0])
        tot = -slope[j0] * (edges[j0 + 1] - s) ** (1 - alpha) / (1 - alpha)
        lo = edges[j0 + 1 : -1] - s
        hi = edges[j0 + 2 :] - s
        m0 = (lo**-alpha - hi**-alpha) / alpha
        m1 = (hi ** (1 - alpha) - lo ** (1 - alpha)) / (1 - alpha) - lo * m0
        tot += np.sum((gs - left[j0 + 1 :]) * m0 - slope[j0 + 1 :] * m1)
        out[i] = gs / (horizon - s) ** alpha + alpha * tot
    return out


def bridge_local_time(paths, lam0, lam1, var, weight, eps):
    paths = np.asarray(paths, dtype=np.float64)
    x0 = paths[:, :-1, None]
    x1 = paths[:, 1:, None]
    mu = lam0 * x0 + lam1 * x1
    s2 = eps + var
    dens = np.exp(-0.5 * mu * mu / s2) / np.sqrt(2 * np.pi * s2)
    cells = np.sum(weight * dens, axis=-1)
    out = np.zeros(paths.shape)
    np.cumsum(cells, axis=1, out=out[:, 1:])
    return out
