# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scalar kernels; drop-in twin of grabert._kernels_py."""

import numpy as np

cimport numpy as cnp
from libc.math cimport atanh, fabs, log

cnp.import_array()

cdef double _SMALL_ETA = 1e-4
cdef double _ETA_SPLIT = 0.5


cdef inline double _fd(double eta) noexcept nogil:
    cdef double a = fabs(eta)
    cdef double e2
    if a < _SMALL_ETA:
        e2 = eta * eta
        return 1.0 - e2 / 3.0 - 4.0 * e2 * e2 / 45.0
    if a >= 1.0:
        return 0.0
    return eta / atanh(eta)


cdef inline double _fd_prime(double eta) noexcept nogil:
    cdef double at
    if fabs(eta) < _SMALL_ETA:
        return -2.0 * eta / 3.0 - 16.0 * eta * eta * eta / 45.0
    at = atanh(eta)
    return (at - eta / (1.0 - eta * eta)) / (at * at)


cdef inline double _logmean(double x, double y) noexcept nogil:
    cdef double s, eta
    if x <= 0.0 or y <= 0.0:
        return 0.0
    s = x + y
    eta = (x - y) / s
    if fabs(eta) <= _ETA_SPLIT:
        return 0.5 * s * _fd(eta)
    return (x - y) / (log(x) - log(y))


def fd(eta):
    """Elementwise eta/artanh(eta) with fd(+-1) = 0."""
    cdef cnp.ndarray arr = np.ascontiguousarray(eta, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] src = arr.ravel()
    cdef double[::1] dst = out.ravel()
    cdef Py_ssize_t i, n = src.shape[0]
    for i in range(n):
        dst[i] = _fd(src[i])
    return out


def fd_prime(eta):
    """Elementwise derivative of ``fd``; valid for |eta| < 1."""
    cdef cnp.ndarray arr = np.ascontiguousarray(eta, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] src = arr.ravel()
    cdef double[::1] dst = out.ravel()
    cdef Py_ssize_t i, n = src.shape[0]
    for i in range(n):
        dst[i] = _fd_prime(src[i])
    return out


def logmean(x, y):
    """Elementwise logarithmic mean with the x=y and zero-argument limits."""
    xb, yb = np.broadcast_arrays(
        np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    )
    cdef cnp.ndarray xa = np.ascontiguousarray(xb)
    cdef cnp.ndarray ya = np.ascontiguousarray(yb)
    cdef cnp.ndarray out = np.empty_like(xa)
    cdef double[::1] xs = xa.ravel()
    cdef double[::1] ys = ya.ravel()
    cdef double[::1] dst = out.ravel()
    cdef Py_ssize_t i, n = xs.shape[0]
    for i in range(n):
        dst[i] = _logmean(xs[i], ys[i])
    return out


def kernel_from_weights(w):
    """Symmetric matrix of pairwise logmeans of a non-negative weight vector."""
    cdef cnp.ndarray warr = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t d = warr.shape[0]
    cdef cnp.ndarray out = np.empty((d, d), dtype=np.float64)
    cdef double[::1] wv = warr
    cdef double[:, ::1] kv = out
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(d):
        kv[i, i] = wv[i]
        for j in range(i + 1, d):
            v = _logmean(wv[i], wv[j])
            kv[i, j] = v
            kv[j, i] = v
    return out
