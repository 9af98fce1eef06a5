"""Pure-NumPy implementation of the scalar kernel evaluations.

Drop-in twin of the compiled module ``grabert._kernels``; ``grabert.kernels``
picks whichever is importable.  Domain checking is the caller's job
(``grabert.spectral`` wraps these with validation), so inputs are assumed
finite with ``|eta| <= 1`` and non-negative weights.
"""

import numpy as np

_SMALL_ETA = 1e-4
_ETA_SPLIT = 0.5


def fd(eta):
    """Elementwise eta/artanh(eta), with the endpoint values fd(+-1) = 0.

    Near zero the even Taylor series 1 - eta^2/3 - 4 eta^4/45 removes the
    0/0 cancellation.
    """
    eta = np.ascontiguousarray(eta, dtype=np.float64)
    out = np.empty_like(eta)
    a = np.abs(eta)
    small = a < _SMALL_ETA
    edge = a >= 1.0
    mid = ~(small | edge)
    e2 = eta[small] ** 2
    out[small] = 1.0 - e2 / 3.0 - 4.0 * e2 * e2 / 45.0
    out[edge] = 0.0
    out[mid] = eta[mid] / np.arctanh(eta[mid])
    return out


def fd_prime(eta):
    """Elementwise derivative of ``fd``; odd, zero at the origin.

    Valid for |eta| < 1 (the derivative diverges at the endpoints).
    """
    eta = np.ascontiguousarray(eta, dtype=np.float64)
    out = np.empty_like(eta)
    small = np.abs(eta) < _SMALL_ETA
    mid = ~small
    e = eta[small]
    out[small] = -2.0 * e / 3.0 - 16.0 * e**3 / 45.0
    at = np.arctanh(eta[mid])
    out[mid] = (at - eta[mid] / (1.0 - eta[mid] ** 2)) / (at * at)
    return out


def logmean(x, y):
    """Elementwise logarithmic mean (x - y)/(log x - log y).

    Limits: logmean(x, x) = x and logmean(x, 0) = 0.  The balanced form
    0.5*(x+y)*fd((x-y)/(x+y)) is used where x and y are comparable (it is
    immune to the log cancellation), the direct quotient where the ratio is
    large (the eta-form saturates for ratios beyond ~1e16 while the direct
    form stays accurate down to y -> 0).
    """
    x, y = np.broadcast_arrays(
        np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    )
    out = np.zeros(x.shape, dtype=np.float64)
    pos = (x > 0.0) & (y > 0.0)
    xs = np.ascontiguousarray(x[pos])
    ys = np.ascontiguousarray(y[pos])
    s = xs + ys
    eta = (xs - ys) / s
    vals = np.empty_like(xs)
    near = np.abs(eta) <= _ETA_SPLIT
    vals[near] = 0.5 * s[near] * fd(eta[near])
    far = ~near
    vals[far] = (xs[far] - ys[far]) / (np.log(xs[far]) - np.log(ys[far]))
    out[pos] = vals
    return out


def kernel_from_weights(w):
    """Symmetric matrix of pairwise logmeans of a non-negative weight vector."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    k = logmean(w[:, None], w[None, :])
    idx = np.arange(w.shape[0])
    k[idx, idx] = w
    return k
