"""Kernel backend selection.

The hot scalar loops (the fd function family and the pairwise logmean
kernel) exist twice: a Cython extension ``grabert._kernels`` and a NumPy
fallback ``grabert._kernels_py`` with identical semantics.  The compiled
module is preferred when it was built; otherwise the fallback is used
transparently.  ``benchmarks/bench_kernels.py`` compares the two.
"""

from . import _kernels_py

try:
    from . import _kernels as _active

    HAVE_COMPILED = True
except ImportError:
    _active = _kernels_py
    HAVE_COMPILED = False

BACKEND = "compiled" if HAVE_COMPILED else "python"

fd = _active.fd
fd_prime = _active.fd_prime
logmean = _active.logmean
kernel_from_weights = _active.kernel_from_weights


def available_backends():
    """Names of the kernel implementations importable in this build."""
    if HAVE_COMPILED:
        return ("compiled", "python")
    return ("python",)


def get_backend(name):
    """Return the named kernel module ("compiled" or "python")."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if not HAVE_COMPILED:
            raise ValueError("compiled kernel extension is not available")
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
