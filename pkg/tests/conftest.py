import numpy as np
import pytest

from grabert import kernels
from grabert.presets import interior_state


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(dim, rng):
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (x + x.conj().T) / 2


def random_state(dim, rng):
    return interior_state(dim, rng)


@pytest.fixture(params=kernels.available_backends())
def kernel_backend(request):
    return kernels.get_backend(request.param)


__all__ = ["random_hermitian", "random_state"]
