"""Spectral calculus: eigensystems, scalar kernels, and the A_rho map."""

import math

import numpy as np
import pytest

from grabert import (
    DimensionMismatch,
    DomainError,
    NonFinite,
    a_rho,
    cal_f,
    commutator,
    eig_hermitian,
    f_d,
    f_d_prime,
    hadamard,
    kernel_matrix,
    quadrature_a_rho,
)
from grabert.presets import maximally_mixed

from conftest import random_hermitian, random_state

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


class TestEigHermitian:
    def test_already_diagonal(self):
        w, u = eig_hermitian(np.diag([1.0, 2.0]).astype(complex))
        np.testing.assert_allclose(w, [1.0, 2.0])
        np.testing.assert_allclose(u, np.eye(2))

    def test_pauli_x_spectrum(self):
        w, _ = eig_hermitian(SX)
        np.testing.assert_allclose(w, [-1.0, 1.0], atol=1e-15)

    def test_reconstruction(self, rng):
        a = random_hermitian(5, rng)
        w, u = eig_hermitian(a)
        rebuilt = (u * w) @ u.conj().T
        assert np.linalg.norm(rebuilt - a) <= 1e-10 * np.linalg.norm(a)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(5), atol=1e-12)

    def test_rejects_nan(self):
        bad = np.array([[np.nan, 0.0], [0.0, 1.0]], dtype=complex)
        with pytest.raises(NonFinite):
            eig_hermitian(bad)


class TestCommutatorHadamard:
    def test_diagonal_matrices_commute(self):
        a = np.diag([1.0, 2.0]).astype(complex)
        b = np.diag([3.0, 4.0]).astype(complex)
        np.testing.assert_array_equal(commutator(a, b), np.zeros((2, 2)))

    def test_pauli_algebra(self):
        np.testing.assert_allclose(commutator(SX, SY), 2j * SZ)

    def test_polynomial_commutes(self, rng):
        a = random_hermitian(4, rng)
        assert np.abs(commutator(a, a @ a)).max() < 1e-13

    def test_antisymmetry(self, rng):
        a = random_hermitian(3, rng)
        b = random_hermitian(3, rng)
        np.testing.assert_allclose(commutator(a, b), -commutator(b, a))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            commutator(np.eye(2), np.eye(3))
        with pytest.raises(DimensionMismatch):
            hadamard(np.eye(2), np.eye(3))

    def test_hadamard_identity_and_diag(self, rng):
        a = random_hermitian(3, rng)
        np.testing.assert_array_equal(hadamard(np.ones((3, 3)), a), a)
        np.testing.assert_array_equal(hadamard(np.eye(3), a), np.diag(np.diag(a)))

    def test_hadamard_entrywise(self, rng):
        f = rng.uniform(size=(3, 3))
        a = random_hermitian(3, rng)
        out = hadamard(f, a)
        for n in range(3):
            for m in range(3):
                assert out[n, m] == f[n, m] * a[n, m]


class TestFd:
    def test_special_points(self):
        assert f_d(0.0) == 1.0
        assert f_d(1.0) == 0.0
        assert f_d(-1.0) == 0.0

    def test_half(self):
        # 0.5 / artanh(0.5), frozen from a 50-digit evaluation
        assert f_d(0.5) == pytest.approx(0.91023922662683739, abs=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            f_d(1.1)
        assert f_d(1.0 + 1e-13) == 0.0  # inside construction slack, clipped

    def test_prime_at_zero(self):
        assert f_d_prime(0.0) == 0.0

    def test_prime_finite_difference(self):
        h = 1e-6
        fd_est = (f_d(0.5 + h) - f_d(0.5 - h)) / (2 * h)
        assert f_d_prime(0.5) == pytest.approx(fd_est, abs=1e-8)

    def test_prime_odd(self):
        assert f_d_prime(-0.3) == pytest.approx(-f_d_prime(0.3), abs=1e-16)

    def test_prime_domain(self):
        with pytest.raises(DomainError):
            f_d_prime(1.0)


class TestCalF:
    def test_equal_arguments(self):
        for x in (0.25, 1.0, 7.5):
            assert cal_f(x, x) == pytest.approx(x, rel=1e-15)

    def test_zero_edge(self):
        assert cal_f(1.0, 0.0) == 0.0
        assert cal_f(0.0, 0.0) == 0.0

    def test_log_ratio_one(self):
        assert cal_f(1.0, math.exp(-1.0)) == pytest.approx(1 - math.exp(-1.0), rel=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            cal_f(-0.1, 1.0)

    def test_bounded_by_mean(self, rng):
        x = rng.uniform(0, 10, size=200)
        y = rng.uniform(0, 10, size=200)
        vals = cal_f(x, y)
        assert np.all(vals >= 0.0)
        assert np.all(vals <= 0.5 * (x + y) + 1e-12)


class TestKernelMatrix:
    def test_constant_weights(self):
        np.testing.assert_array_equal(
            kernel_matrix([0.5, 0.5]), np.full((2, 2), 0.5)
        )

    def test_rank_deficient(self):
        np.testing.assert_array_equal(
            kernel_matrix([1.0, 0.0]), np.array([[1.0, 0.0], [0.0, 0.0]])
        )

    def test_boltzmann_offdiagonal(self):
        w = np.exp(-np.array([0.0, 1.0]))
        w /= w.sum()
        k = kernel_matrix(w)
        assert k[0, 1] == pytest.approx(cal_f(w[0], w[1]), rel=1e-15)
        assert k[0, 1] == k[1, 0]

    def test_diagonal_exact(self, rng):
        w = rng.uniform(0, 1, size=6)
        np.testing.assert_array_equal(np.diag(kernel_matrix(w)), w)

    def test_clamp_and_reject(self):
        k = kernel_matrix([1.0, -5e-13])
        assert k[1, 1] == 0.0
        with pytest.raises(DomainError):
            kernel_matrix([1.0, -1e-11])


class TestARho:
    def test_maximally_mixed(self, rng):
        a = random_hermitian(4, rng)
        np.testing.assert_allclose(a_rho(a, maximally_mixed(4)), a / 4, atol=1e-14)

    def test_commuting_case(self, rng):
        w = rng.uniform(0.1, 1.0, size=4)
        w /= w.sum()
        rho = np.diag(w).astype(complex)
        a = np.diag(rng.uniform(-1, 1, size=4)).astype(complex)
        np.testing.assert_allclose(a_rho(a, rho), a @ rho, atol=1e-14)

    def test_matches_quadrature(self, rng):
        a = random_hermitian(3, rng)
        rho = random_state(3, rng)
        diff = np.linalg.norm(a_rho(a, rho) - quadrature_a_rho(a, rho, nodes=64))
        assert diff <= 1e-9

    def test_linearity(self, rng):
        rho = random_state(3, rng)
        a = random_hermitian(3, rng)
        b = random_hermitian(3, rng)
        lhs = a_rho(0.7 * a + 1.3 * b, rho)
        rhs = 0.7 * a_rho(a, rho) + 1.3 * a_rho(b, rho)
        assert np.abs(lhs - rhs).max() <= 1e-12

    def test_trace_identity(self, rng):
        rho = random_state(4, rng)
        a = random_hermitian(4, rng)
        lhs = np.trace(a_rho(a, rho))
        rhs = np.trace(a @ rho.matrix)
        assert abs(lhs - rhs) <= 1e-12

    def test_hermitian_output(self, rng):
        rho = random_state(4, rng)
        a = random_hermitian(4, rng)
        out = a_rho(a, rho)
        assert np.abs(out - out.conj().T).max() <= 1e-13

    def test_negative_eigenvalue_rejected(self):
        rho = np.diag([1.05, -0.05]).astype(complex)
        with pytest.raises(DomainError):
            a_rho(SX, rho)


class TestQuadrature:
    def test_maximally_mixed_exact_any_nodes(self, rng):
        a = random_hermitian(3, rng)
        out = quadrature_a_rho(a, maximally_mixed(3), nodes=1)
        np.testing.assert_allclose(out, a / 3, atol=1e-14)

    def test_commuting_machine_precision(self, rng):
        w = rng.uniform(0.1, 1.0, size=3)
        w /= w.sum()
        rho = np.diag(w).astype(complex)
        a = np.diag(rng.uniform(-1, 1, size=3)).astype(complex)
        np.testing.assert_allclose(quadrature_a_rho(a, rho, 32), a @ rho, atol=1e-14)

    def test_self_convergence(self, rng):
        a = random_hermitian(4, rng)
        rho = random_state(4, rng)
        q64 = quadrature_a_rho(a, rho, 64)
        q128 = quadrature_a_rho(a, rho, 128)
        assert np.linalg.norm(q64 - q128) < 1e-12
        assert np.linalg.norm(q64 - a_rho(a, rho)) < 1e-9

    def test_singular_state_rejected(self):
        rho = np.diag([1.0, 0.0]).astype(complex)
        with pytest.raises(DomainError):
            quadrature_a_rho(SX, rho)
