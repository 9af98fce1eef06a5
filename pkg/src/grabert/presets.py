"""Matrix and initial-state presets shared by the CLI and the test ensembles."""

import numpy as np

from .dynamics import DensityMatrix, fixed_point
from .errors import DomainError

PAULI = {
    "pauli_x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "pauli_y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "pauli_z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def gue(dim, seed):
    """Random Hermitian draw with semicircle support [-2, 2] for every dim.

    Entries are complex Gaussian scaled by 1/sqrt(dim), so the spectral
    radius stays O(2) independent of dimension.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (x + x.conj().T) / (2.0 * np.sqrt(dim))


def ladder(dim):
    """Nearest-level coupling q_{n,n+1} = 1 (connected coupling graph)."""
    q = np.zeros((dim, dim), dtype=complex)
    for n in range(dim - 1):
        q[n, n + 1] = 1.0
        q[n + 1, n] = 1.0
    return q


def ginibre_state(dim, seed):
    """Full-rank random density matrix W W^dagger / Tr(W W^dagger)."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = w @ w.conj().T
    return DensityMatrix(m / m.trace().real)


def interior_state(dim, seed, mix=0.02):
    """Ginibre state mixed with the maximally mixed one: eigenvalues >= mix/dim."""
    rho = ginibre_state(dim, seed).matrix
    m = (1.0 - mix) * rho + mix * np.eye(dim) / dim
    return DensityMatrix(m)


def pure_state(dim, k):
    """Computational-basis projector |k><k| (k is 0-based)."""
    if not 0 <= k < dim:
        raise DomainError(f"pure-state index {k} outside [0, {dim})")
    m = np.zeros((dim, dim), dtype=complex)
    m[k, k] = 1.0
    return DensityMatrix(m)


def maximally_mixed(dim):
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def initial_state(name, spec):
    """Resolve an initial-state preset string against a system."""
    if name == "thermal":
        return fixed_point(spec)
    if name == "maximally_mixed":
        return maximally_mixed(spec.dim)
    if name.startswith("pure:"):
        return pure_state(spec.dim, int(name.split(":", 1)[1]))
    if name.startswith("random:"):
        return ginibre_state(spec.dim, int(name.split(":", 1)[1]))
    raise DomainError(f"unknown initial-state preset {name!r}")
