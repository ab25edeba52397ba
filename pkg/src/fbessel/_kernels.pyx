# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Every function here has a numpy twin with the same signature in
``_kernels_py``; the two are kept numerically interchangeable and the test
suite compares them directly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, pow, M_PI

cnp.import_array()


def hosking_increments(const double[::1] gamma, const double[:, ::1] z):
    """Durbin-Levinson recursion for a stationary Gaussian sequence.

    Parameters
    ----------
    gamma : ndarray, shape (n,)
        Autocovariance at lags ``0..n-1``.
    z : ndarray, shape (m, n)
        Independent standard normal innovations, one row per path.

    Returns
    -------
    ndarray, shape (m, n)
        Rows with covariance ``toeplitz(gamma)``.
    """
    cdef Py_ssize_t n = gamma.shape[0]
    cdef Py_ssize_t m = z.shape[0]
    cdef Py_ssize_t t, j, p
    cdef double v, acc, phi_tt, mean
    out_arr = np.zeros((m, n), dtype=np.float64)
    phi_arr = np.zeros(n, dtype=np.float64)
    tmp_arr = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] phi = phi_arr
    cdef double[::1] tmp = tmp_arr
    with nogil:
        v = gamma[0]
        for p in range(m):
            out[p, 0] = sqrt(v) * z[p, 0]
        for t in range(1, n):
            acc = gamma[t]
            for j in range(1, t):
                acc = acc - phi[j - 1] * gamma[t - j]
            phi_tt = acc / v
            for j in range(1, t):
                tmp[j - 1] = phi[j - 1] - phi_tt * phi[t - j - 1]
            for j in range(1, t):
                phi[j - 1] = tmp[j - 1]
            phi[t - 1] = phi_tt
            v = v * (1.0 - phi_tt * phi_tt)
            for p in range(m):
                mean = 0.0
                for j in range(t):
                    mean = mean + phi[j] * out[p, t - 1 - j]
                out[p, t] = mean + sqrt(v) * z[p, t]
    return out_arr


def rl_product(const double[::1] edges, const double[::1] left,
               const double[::1] right, const double[::1] pts, double alpha):
    """Right-sided Riemann-Liouville integral of a cellwise-linear function.

    Returns ``sum_j int_{cell j, u > s} (u - s)^(alpha-1) g(u) du`` at each
    evaluation point ``s`` without the ``1/Gamma(alpha)`` factor.
    """
    cdef Py_ssize_t ncell = left.shape[0]
    cdef Py_ssize_t npts = pts.shape[0]
    cdef Py_ssize_t i, j
    cdef double s, lo, hi, m0, m1, off, slope, tot
    out_arr = np.zeros(npts, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(npts):
            s = pts[i]
            tot = 0.0
            for j in range(ncell):
                hi = edges[j + 1] - s
                if hi <= 0.0:
                    continue
                lo = edges[j] - s
                if lo < 0.0:
                    lo = 0.0
                off = edges[j] - s
                m0 = (pow(hi, alpha) - pow(lo, alpha)) / alpha
                m1 = (pow(hi, alpha + 1.0) - pow(lo, alpha + 1.0)) / (alpha + 1.0) - off * m0
                slope = (right[j] - left[j]) / (edges[j + 1] - edges[j])
                tot = tot + left[j] * m0 + slope * m1
            out[i] = tot
    return out_arr


def marchaud_product(const double[::1] edges, const double[::1] left,
                     const double[::1] right, const double[::1] pts,
                     double alpha, double horizon):
    """Right-sided Marchaud derivative of a cellwise-linear function.

    Returns ``g(s)/(T-s)^alpha + alpha * int_s^T (g(s)-g(u))/(u-s)^(alpha+1) du``
    at each point, without the ``1/Gamma(1-alpha)`` factor. ``g(s)`` is the
    right limit of the interpolant.
    """
    cdef Py_ssize_t ncell = left.shape[0]
    cdef Py_ssize_t npts = pts.shape[0]
    cdef Py_ssize_t i, j, j0
    cdef double s, lo, hi, m0, m1, off, slope, tot, gs
    out_arr = np.zeros(npts, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(npts):
            s = pts[i]
            j0 = 0
            while j0 < ncell - 1 and edges[j0 + 1] <= s:
                j0 = j0 + 1
            slope = (right[j0] - left[j0]) / (edges[j0 + 1] - edges[j0])
            gs = left[j0] + slope * (s - edges[j0])
            hi = edges[j0 + 1] - s
            tot = -slope * pow(hi, 1.0 - alpha) / (1.0 - alpha)
            for j in range(j0 + 1, ncell):
                lo = edges[j] - s
                hi = edges[j + 1] - s
                off = lo
                slope = (right[j] - left[j]) / (edges[j + 1] - edges[j])
                m0 = (pow(lo, -alpha) - pow(hi, -alpha)) / alpha
                m1 = (pow(hi, 1.0 - alpha) - pow(lo, 1.0 - alpha)) / (1.0 - alpha) - off * m0
                tot = tot + (gs - left[j]) * m0 - slope * m1
            out[i] = gs / pow(horizon - s, alpha) + alpha * tot
    return out_arr


def bridge_local_time(const double[:, ::1] paths, const double[:, ::1] lam0,
                      const double[:, ::1] lam1, const double[:, ::1] var,
                      const double[:, ::1] weight, double eps):
    """Cumulative mollified local time from cellwise Gaussian bridges.

    Parameters
    ----------
    paths : ndarray, shape (m, n+1)
        Sampled values on the grid.
    lam0, lam1, var, weight : ndarray, shape (n, q)
        Per-cell regression coefficients on the two cell endpoints,
        conditional variance and quadrature weight at each node.
    eps : float
        Mollifier variance.

    Returns
    -------
    ndarray, shape (m, n+1)
        Running integral, zero at the first node.
    """
    cdef Py_ssize_t m = paths.shape[0]
    cdef Py_ssize_t n = lam0.shape[0]
    cdef Py_ssize_t q = lam0.shape[1]
    cdef Py_ssize_t p, i, k
    cdef double x0, x1, mu, s2, acc, cell
    cdef double inv_sqrt_2pi = 1.0 / sqrt(2.0 * M_PI)
    out_arr = np.zeros((m, n + 1), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for p in range(m):
            acc = 0.0
            for i in range(n):
                x0 = paths[p, i]
                x1 = paths[p, i + 1]
                cell = 0.0
                for k in range(q):
                    mu = lam0[i, k] * x0 + lam1[i, k] * x1
                    s2 = eps + var[i, k]
                    cell = cell + weight[i, k] * exp(-0.5 * mu * mu / s2) / sqrt(s2)
                acc = acc + cell * inv_sqrt_2pi
                out[p, i + 1] = acc
    return out_arr
