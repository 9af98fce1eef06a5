"""Generalized Gell-Mann basis of su(d) and coordinate maps.

The d^2 - 1 trace-less Hermitian generators come in three families:

* X(n,m) = |n><m| + |m><n|            (symmetric off-diagonal)
* Y(n,m) = i|n><m| - i|m><n|          (antisymmetric off-diagonal)
* Z(l)   = sqrt(2/(l(l+1))) (sum_{j<=l} |j><j| - l |l+1><l+1|)

with 1 <= m < n <= d and 1 <= l <= d-1, normalized to Tr(l_a l_b) = 2 d_ab.
For d = 2 this is exactly (sigma_x, sigma_y, sigma_z).

The ordering is fixed once and inherited by every consumer (Jacobian rows
and columns, CSV headers): the X block sorted by (m, n), then the Y block
in the same order, then Z(1)..Z(d-1).
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import sqrt

import numpy as np

from .errors import DimensionError, DimensionMismatch, NotHermitian, TraceNotZero

MAX_DIM = 64


@dataclass(frozen=True, order=True)
class BasisLabel:
    """Identifier of one basis matrix: kind "X"/"Y" with a level pair (n, m),
    or kind "Z" with the ladder index stored in ``n``."""

    kind: str
    n: int
    m: int = 0

    def __str__(self):
        if self.kind == "Z":
            return f"Z({self.n})"
        return f"{self.kind}({self.n},{self.m})"


@dataclass(frozen=True)
class GellMannBasis:
    """Ordered, immutable basis for one dimension."""

    dim: int
    matrices: tuple
    labels: tuple
    index_map: dict = field(repr=False)
    stacked: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.matrices)

    def matrix(self, label):
        return self.matrices[self.index_map[label]]


def _readonly(a):
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def build_basis(dim):
    """Construct (and cache) the basis for a given Hilbert dimension."""
    if not isinstance(dim, (int, np.integer)) or not 2 <= dim <= MAX_DIM:
        raise DimensionError(f"dimension must be an integer in [2, {MAX_DIM}], got {dim!r}")
    dim = int(dim)
    mats = []
    labels = []
    for m in range(1, dim + 1):
        for n in range(m + 1, dim + 1):
            mat = np.zeros((dim, dim), dtype=complex)
            mat[n - 1, m - 1] = 1.0
            mat[m - 1, n - 1] = 1.0
            mats.append(_readonly(mat))
            labels.append(BasisLabel("X", n, m))
    for m in range(1, dim + 1):
        for n in range(m + 1, dim + 1):
            mat = np.zeros((dim, dim), dtype=complex)
            mat[n - 1, m - 1] = 1.0j
            mat[m - 1, n - 1] = -1.0j
            mats.append(_readonly(mat))
            labels.append(BasisLabel("Y", n, m))
    for l in range(1, dim):
        diag = np.zeros(dim)
        scale = sqrt(2.0 / (l * (l + 1)))
        diag[:l] = scale
        diag[l] = -l * scale
        mats.append(_readonly(np.diag(diag).astype(complex)))
        labels.append(BasisLabel("Z", l))
    stacked = _readonly(np.stack(mats))
    index_map = {lab: i for i, lab in enumerate(labels)}
    return GellMannBasis(dim, tuple(mats), tuple(labels), index_map, stacked)


def expand(m, basis):
    """Coefficients kappa_a = Tr(M l_a)/2 of a trace-less Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (basis.dim, basis.dim):
        raise DimensionMismatch(f"matrix shape {m.shape} vs basis dim {basis.dim}")
    scale = max(1.0, float(np.abs(m).max()))
    if abs(np.trace(m)) > 1e-10 * scale:
        raise TraceNotZero(f"trace {np.trace(m):.3e} is not zero")
    coeff = np.einsum("ij,kji->k", m, basis.stacked) / 2.0
    if np.abs(coeff.imag).max() > 1e-12 * scale:
        raise NotHermitian("complex expansion coefficients; input is not Hermitian")
    return coeff.real.copy()


def reconstruct(coeff, basis):
    """Sum_a kappa_a l_a: the trace-less Hermitian matrix with given coordinates."""
    coeff = np.asarray(coeff, dtype=float)
    if coeff.shape != (len(basis),):
        raise DimensionMismatch(
            f"coefficient length {coeff.shape} vs basis size {len(basis)}"
        )
    return np.einsum("k,kij->ij", coeff, basis.stacked)
