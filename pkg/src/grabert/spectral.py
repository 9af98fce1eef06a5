"""Dense Hermitian spectral calculus and the state-weighted operator map.

The central object is the map

    A  ->  A_rho = integral_0^1  rho^eta A rho^(1-eta)  d eta.

In the eigenbasis of rho the integral collapses to a Hadamard product with
the logarithmic-mean kernel F(w_n, w_m) of the eigenvalues, which is how
``a_rho`` evaluates it.  ``quadrature_a_rho`` instead integrates the
defining expression with Gauss-Legendre nodes and serves as an independent
cross-check of the closed form.
"""

from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    DomainError,
    NonFinite,
    NotHermitian,
)

HERMITICITY_TOL = 1e-12


class SpectralDecomposition(NamedTuple):
    """Eigensystem of a Hermitian matrix.

    ``eigenvalues`` are real and ascending; the columns of ``eigenvectors``
    are the matching orthonormal eigenvectors.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitian_part(a):
    """(A + A^dagger)/2."""
    a = np.asarray(a)
    return 0.5 * (a + a.conj().swapaxes(-1, -2))


def require_hermitian(a, tol=HERMITICITY_TOL, name="matrix"):
    """Validate and exactly symmetrize a Hermitian matrix.

    Entries must match their conjugate transpose to within ``tol`` (relative
    to the largest magnitude); the returned matrix is the exactly Hermitian
    average.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise NonFinite(f"{name} contains non-finite entries")
    dev = np.abs(a - a.conj().T).max() if a.size else 0.0
    scale = max(1.0, float(np.abs(a).max()) if a.size else 0.0)
    if dev > tol * scale:
        raise NotHermitian(f"{name} deviates from Hermiticity by {dev:.3e}")
    return hermitian_part(a)


def eig_hermitian(a):
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending."""
    a = require_hermitian(a)
    try:
        w, u = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigensolver failed: {exc}") from exc
    return SpectralDecomposition(w, u)


def _check_same_square(a, b):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")


def commutator(a, b):
    """AB - BA."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_square(a, b)
    return a @ b - b @ a


def hadamard(a, b):
    """Entrywise product."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_square(a, b)
    return a * b


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.isfinite(arr).all():
        raise DomainError(f"{name}: non-finite argument")
    return arr


def _match_input(out, arr):
    """Collapse backend output to a float for scalar input (the kernel
    modules may promote 0-d arrays to one element)."""
    if arr.ndim == 0:
        return float(np.asarray(out).ravel()[0])
    return out


def f_d(eta):
    """eta/artanh(eta), even, with f_d(0) = 1 and f_d(+-1) = 0.

    Accepts scalars or arrays; values must satisfy |eta| <= 1 (a slack of
    1e-12 is clipped, anything beyond raises DomainError).
    """
    arr = _as_float_array(eta, "f_d")
    if np.any(np.abs(arr) > 1.0 + 1e-12):
        raise DomainError("f_d requires |eta| <= 1")
    return _match_input(kernels.fd(np.clip(arr, -1.0, 1.0)), arr)


def f_d_prime(eta):
    """Derivative of f_d; odd, zero at the origin, diverges at |eta| -> 1."""
    arr = _as_float_array(eta, "f_d_prime")
    if np.any(np.abs(arr) >= 1.0):
        raise DomainError("f_d_prime requires |eta| < 1")
    return _match_input(kernels.fd_prime(arr), arr)


def cal_f(x, y):
    """Logarithmic mean (x - y)/(log x - log y) for x, y >= 0.

    Symmetric; cal_f(x, x) = x; vanishes whenever either argument is zero
    (the analytic limit).  Evaluated through a cancellation-free split, see
    ``grabert.kernels``.
    """
    xa = _as_float_array(x, "cal_f")
    ya = _as_float_array(y, "cal_f")
    if np.any(xa < 0.0) or np.any(ya < 0.0):
        raise DomainError("cal_f requires non-negative arguments")
    out = kernels.logmean(xa, ya)
    if xa.ndim == 0 and ya.ndim == 0:
        return float(np.asarray(out).ravel()[0])
    return out


def kernel_matrix(w, clamp_tol=1e-12):
    """Matrix of pairwise logarithmic means of a weight vector.

    Weights in [-clamp_tol, 0) are clamped to zero (floating-point PSD
    drift); anything more negative raises DomainError.  The diagonal
    reproduces ``w`` exactly.
    """
    w = _as_float_array(w, "kernel_matrix")
    if w.ndim != 1:
        raise DimensionMismatch("kernel_matrix expects a 1-d weight vector")
    if np.any(w < -clamp_tol):
        raise DomainError(f"negative weight {w.min():.3e} beyond clamp tolerance")
    w = np.where(w < 0.0, 0.0, w)
    return kernels.kernel_from_weights(w)


def _state_spectrum(rho):
    """Eigensystem of a state given as array, decomposition, or DensityMatrix."""
    if isinstance(rho, SpectralDecomposition):
        return rho
    spectrum = getattr(rho, "spectrum", None)
    if isinstance(spectrum, SpectralDecomposition):
        return spectrum
    return eig_hermitian(np.asarray(rho, dtype=complex))


def _a_rho_spectral(a, w, u):
    """Kernel-weighted conjugation of ``a`` into and out of the state basis."""
    at = u.conj().T @ a @ u
    return u @ (kernels.kernel_from_weights(w) * at) @ u.conj().T


def a_rho(a, rho, clamp_tol=1e-10):
    """Closed-form A_rho via the eigenbasis Hadamard kernel.

    ``a`` is any square matrix (the map is linear; Hermitian input gives
    Hermitian output).  ``rho`` may be a matrix, a precomputed
    SpectralDecomposition, or a DensityMatrix.  Eigenvalues of rho in
    [-clamp_tol, 0) are clamped to zero; more negative ones raise.
    """
    a = np.asarray(a, dtype=complex)
    w, u = _state_spectrum(rho)
    if a.shape != u.shape:
        raise DimensionMismatch(f"operand shape {a.shape} vs state {u.shape}")
    if w.min() < -clamp_tol:
        raise DomainError(f"state eigenvalue {w.min():.3e} below -{clamp_tol:g}")
    w = np.where(w < 0.0, 0.0, w)
    return _a_rho_spectral(a, w, u)


def quadrature_a_rho(a, rho, nodes=64):
    """Gauss-Legendre evaluation of the defining integral of A_rho.

    Matrix powers are taken spectrally, so the state must be strictly
    positive definite.  Converges extremely fast in ``nodes`` for interior
    states; kept deliberately independent of the closed form.
    """
    a = np.asarray(a, dtype=complex)
    w, u = _state_spectrum(rho)
    if a.shape != u.shape:
        raise DimensionMismatch(f"operand shape {a.shape} vs state {u.shape}")
    if nodes < 1:
        raise DomainError("quadrature needs at least one node")
    if w.min() <= 0.0:
        raise DomainError("quadrature oracle requires a strictly positive state")
    x, wt = np.polynomial.legendre.leggauss(int(nodes))
    uh = u.conj().T
    out = np.zeros_like(a)
    for xi, wi in zip(x, wt):
        eta = 0.5 * (xi + 1.0)
        left = (u * w**eta) @ uh
        right = (u * w ** (1.0 - eta)) @ uh
        out += (0.5 * wi) * (left @ a @ right)
    return out
