"""Linearization context, the three Jacobian routes, and the verdict logic."""

import math

import numpy as np
import pytest

from grabert import (
    BasisLabel,
    DegenerateSpectrum,
    DomainError,
    StepTooLarge,
    SystemSpec,
    a_rho,
    build_basis,
    closed_form_diagonals,
    d_a_rho_d_eps,
    f_d,
    f_d_prime,
    g_func,
    jacobian_analytic,
    jacobian_fd,
    linearization_context,
    perturbation_generator,
    stability_report,
    zeta,
)
from grabert.presets import PAULI, gue, ladder

from conftest import random_hermitian


def make_spec(dim, rng, beta=1.3, gamma=0.4):
    return SystemSpec(dim, gue(dim, rng), gue(dim, rng), beta, gamma)


def two_level_sigma_x(beta=1.0, gamma=0.1, omega=1.0):
    return SystemSpec(
        2, np.diag([0.0, omega]).astype(complex), PAULI["pauli_x"], beta, gamma
    )


class TestContext:
    def test_weight_asymmetry_identity(self, rng):
        ctx = linearization_context(make_spec(4, rng))
        w = ctx.weights
        direct = (w[:, None] - w[None, :]) / (w[:, None] + w[None, :])
        assert np.abs(ctx.eta - direct).max() < 1e-12

    def test_diagonal_values(self, rng):
        ctx = linearization_context(make_spec(3, rng))
        assert np.array_equal(np.diag(ctx.f), np.ones(3))
        assert np.array_equal(np.diag(ctx.f_prime), np.zeros(3))
        assert np.array_equal(np.diag(ctx.e), np.zeros(3))

    def test_matches_eta_based_functions(self, rng):
        # the e-parametrized F and F' agree with f_d(eta), f_d'(eta)
        # (the eta route loses digits to cancellation near eta = 0, hence
        # the looser absolute tolerance for the derivative)
        ctx = linearization_context(make_spec(4, rng, beta=0.9))
        np.testing.assert_allclose(ctx.f, f_d(ctx.eta), rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(
            ctx.f_prime, f_d_prime(np.clip(ctx.eta, -0.999999, 0.999999)),
            rtol=1e-9, atol=1e-10,
        )

    def test_weights_descend_with_energy(self, rng):
        ctx = linearization_context(make_spec(5, rng))
        assert np.all(np.diff(ctx.energies) >= 0)
        assert np.all(np.diff(ctx.weights) <= 0)


class TestPerturbationGenerator:
    def test_two_level_branches(self):
        ctx = linearization_context(two_level_sigma_x())
        w = ctx.weights
        gen_x = perturbation_generator(BasisLabel("X", 2, 1), ctx)
        np.testing.assert_allclose(gen_x, -PAULI["pauli_y"] / (w[1] - w[0]))
        gen_y = perturbation_generator(BasisLabel("Y", 2, 1), ctx)
        np.testing.assert_allclose(gen_y, PAULI["pauli_x"] / (w[1] - w[0]))

    def test_rotation_diagonalizes_perturbed_state(self, rng):
        # u = 1 + i eps F must diagonalize rho0 + eps V to O(eps^2)
        ctx = linearization_context(make_spec(3, rng))
        rho0 = np.diag(ctx.weights).astype(complex)
        eps = 1e-5
        for label in ctx.basis.labels:
            if label.kind == "Z":
                continue
            v = ctx.basis.matrix(label)
            f = perturbation_generator(label, ctx)
            u = np.eye(3) + 1j * eps * f
            rotated = u @ (rho0 + eps * v) @ u.conj().T
            off = rotated - np.diag(np.diag(rotated))
            assert np.abs(off).max() < 5 * eps**2 / ctx.weights.min()

    def test_z_gives_zero(self, rng):
        ctx = linearization_context(make_spec(3, rng))
        assert np.abs(perturbation_generator(BasisLabel("Z", 1), ctx)).max() == 0.0

    def test_degenerate_pair_raises(self, rng):
        # equal energies at levels 2 and 3 give equal weights for that pair
        h = np.diag([0.0, 1.0, 1.0]).astype(complex)
        spec = SystemSpec(3, h, gue(3, rng), 1.0, 0.2)
        ctx = linearization_context(spec)
        with pytest.raises(DegenerateSpectrum) as excinfo:
            perturbation_generator(BasisLabel("X", 3, 2), ctx)
        assert excinfo.value.label == BasisLabel("X", 3, 2)


class TestDARhoDEps:
    def test_finite_difference_oracle(self, rng):
        # every basis direction, against the a_rho central difference
        spec = make_spec(3, rng)
        ctx = linearization_context(spec)
        rho0 = np.diag(ctx.weights).astype(complex)
        a = random_hermitian(3, rng)
        h = 1e-6
        for label in ctx.basis.labels:
            v = ctx.basis.matrix(label)
            fd_val = (a_rho(a, rho0 + h * v) - a_rho(a, rho0 - h * v)) / (2 * h)
            analytic = d_a_rho_d_eps(a, label, ctx)
            assert np.abs(fd_val - analytic).max() < 1e-7

    def test_kernel_derivative_traceless(self, rng):
        from grabert.stability import _dcoef_matrix

        ctx = linearization_context(make_spec(4, rng))
        for l in range(1, 4):
            lam = ctx.basis.matrix(BasisLabel("Z", l))
            d = _dcoef_matrix(lam.diagonal().real, ctx)
            assert abs(np.trace(d)) < 1e-14
            assert np.abs(d - d.T).max() < 1e-14

    def test_commuting_diagonal_reduces_to_product_rule(self, rng):
        # diagonal A: entries d_nn A_nn with d_nn = nu_n, i.e. d(A rho)/d eps
        ctx = linearization_context(make_spec(3, rng))
        a = np.diag(rng.uniform(-1, 1, size=3)).astype(complex)
        lam = ctx.basis.matrix(BasisLabel("Z", 2))
        out = d_a_rho_d_eps(a, BasisLabel("Z", 2), ctx)
        np.testing.assert_allclose(out, a @ lam, atol=1e-14)


class TestJacobianFD:
    def test_zero_damping_recovers_unitary_block(self, rng):
        h, q = gue(3, rng), gue(3, rng)
        spec = SystemSpec(3, h, q, 1.0, 0.0)
        j_fd = jacobian_fd(spec, h=1e-7)
        blocks = jacobian_analytic(spec)
        assert np.abs(j_fd - blocks.j_u).max() < 1e-9

    def test_linear_mode_exact(self, rng):
        # the linear variant's damping term is constant, so its Jacobian is
        # exactly J_u - J_A and central differences carry no truncation error
        spec = make_spec(3, rng)
        blocks = jacobian_analytic(spec)
        j_fd = jacobian_fd(spec, h=1e-6, mode="linear", beta_prime=1.4)
        assert np.abs(j_fd - (blocks.j_u - blocks.j_a)).max() < 1e-9
        j_fd2 = jacobian_fd(spec, h=1e-4, mode="linear", beta_prime=1.4)
        assert np.abs(j_fd - j_fd2).max() < 1e-9

    def test_step_too_large(self, rng):
        spec = make_spec(3, rng, beta=3.0)
        ctx = linearization_context(spec)
        with pytest.raises(StepTooLarge):
            jacobian_fd(spec, h=ctx.weights.min())

    def test_rejects_nonpositive_step(self, rng):
        with pytest.raises(DomainError):
            jacobian_fd(make_spec(2, rng), h=0.0)


class TestJacobianAnalytic:
    def test_j_u_antisymmetric_and_real(self, rng):
        blocks = jacobian_analytic(make_spec(4, rng))
        assert np.abs(blocks.j_u + blocks.j_u.T).max() < 1e-12

    def test_j_a_diagonal_positive(self, rng):
        spec = make_spec(4, rng)
        blocks = jacobian_analytic(spec)
        assert blocks.j_a.diagonal().min() > 0.0

    def test_route_agreement(self, rng):
        for dim in (2, 3, 4):
            spec = SystemSpec(
                dim, gue(dim, rng), gue(dim, rng), beta=0.8, gamma_e=0.5
            )
            blocks = jacobian_analytic(spec)
            assert not blocks.degenerate
            j_an = blocks.j_u - blocks.j_a - blocks.j_b
            j_fd = jacobian_fd(spec, h=1e-6)
            assert np.abs(j_an - j_fd).max() < 1e-5

    def test_degenerate_columns_flagged(self, rng):
        h = np.diag([0.0, 1.0, 1.0]).astype(complex)
        spec = SystemSpec(3, h, gue(3, rng), 1.0, 0.2)
        blocks = jacobian_analytic(spec)
        assert BasisLabel("X", 3, 2) in blocks.degenerate
        assert BasisLabel("Y", 3, 2) in blocks.degenerate
        idx = build_basis(3).index_map[BasisLabel("X", 3, 2)]
        assert np.isnan(blocks.j_b[:, idx]).all()


class TestZetaAndG:
    def test_zeta_at_origin(self):
        assert zeta(0.0, -0.3) == 1.0

    def test_zeta_infinite_kappa_branch(self):
        eta = 0.4
        assert zeta(eta, 0.0) == pytest.approx(f_d(eta) / (1 - eta**2), rel=1e-14)

    def test_zeta_frozen_value(self):
        # (f_d(0.5)/0.75) * 1.5 = 2 f_d(0.5)
        assert zeta(0.5, -1.0) == pytest.approx(1.8204784532536748, abs=1e-14)

    def test_zeta_domain(self):
        with pytest.raises(DomainError):
            zeta(1.0, 0.0)

    def test_zeta_sign_property(self, rng):
        eta = rng.uniform(-0.99, 0.99, size=500)
        inv_kappa = -rng.uniform(0.0, 1.0, size=500)
        assert zeta(eta, inv_kappa).min() >= 0.0

    def test_g_limits(self):
        assert g_func(1.0, 1.0) == 1.0
        assert g_func(math.e, 1.0) == pytest.approx(1 / (math.e - 1), rel=1e-14)

    def test_g_two_forms_agree(self, rng):
        from grabert import cal_f

        r1 = np.exp(rng.uniform(-4, 4, size=1000))
        r2 = np.exp(rng.uniform(-4, 4, size=1000))
        keep = np.abs(np.log(r1 / r2)) > 1e-3
        r1, r2 = r1[keep], r2[keep]
        product = g_func(r1, r2)
        first = 1.0 - (cal_f(r1, 1.0) - cal_f(r2, 1.0)) / (r1 - r2) * np.log(r1)
        assert np.abs(product - first).max() < 1e-10
        assert product.min() >= 0.0

    def test_g_domain(self):
        with pytest.raises(DomainError):
            g_func(-1.0, 2.0)


class TestClosedFormDiagonals:
    def test_two_level_sigma_x_triple(self):
        spec = two_level_sigma_x(beta=1.0, gamma=0.1)
        ctx = linearization_context(spec)
        eta12 = math.tanh(0.5)
        fd12 = f_d(eta12)
        vals = closed_form_diagonals(spec)
        labels = list(ctx.basis.labels)
        assert vals[labels.index(BasisLabel("X", 2, 1))] == 0.0
        assert vals[labels.index(BasisLabel("Y", 2, 1))] == pytest.approx(
            4 * 0.1 / fd12, rel=1e-12
        )
        assert vals[labels.index(BasisLabel("Z", 1))] == pytest.approx(
            4 * 0.1 * fd12 / (1 - eta12**2), rel=1e-12
        )

    def test_infinite_temperature_reduces_to_linear_damping(self, rng):
        dim = 3
        h, q = gue(dim, rng), gue(dim, rng)
        spec = SystemSpec(dim, h, q, beta=1e-9, gamma_e=0.7)
        closed = closed_form_diagonals(spec)
        blocks = jacobian_analytic(spec)
        np.testing.assert_allclose(closed, blocks.j_a.diagonal(), atol=1e-8)

    def test_matches_fd_diagonal(self, rng):
        spec = SystemSpec(3, gue(3, rng), gue(3, rng), beta=0.9, gamma_e=0.6)
        closed = closed_form_diagonals(spec)
        j_fd = jacobian_fd(spec, h=1e-6)
        assert np.abs(closed + np.diag(j_fd)).max() < 1e-5

    def test_nonnegative(self, rng):
        for i in range(5):
            spec = make_spec(2 + i % 3, rng, beta=1.0 + i, gamma=0.3)
            assert closed_form_diagonals(spec).min() >= -1e-12


class TestStabilityReport:
    def test_random_specs_stable_or_marginal(self, rng):
        for dim in (2, 3, 4):
            report = stability_report(make_spec(dim, rng), include_fd=False)
            assert report.verdict in ("stable", "marginal")
            assert report.max_real_part <= 1e-9
            assert report.diag_closed_form.min() >= -1e-12

    def test_zero_damping_spectrum_imaginary(self, rng):
        spec = SystemSpec(3, gue(3, rng), gue(3, rng), 1.0, 0.0)
        report = stability_report(spec, include_fd=False)
        assert np.abs(report.eigenvalues.real).max() < 1e-10
        assert report.verdict == "marginal"

    def test_sigma_x_benchmark_marginal(self):
        report = stability_report(two_level_sigma_x(), include_fd=True)
        assert report.verdict == "marginal"
        assert report.min_diagonal == 0.0
        assert report.max_real_part < -1e-3  # spectrum itself decays
        assert report.route_discrepancies["analytic_vs_fd"] < 1e-8

    def test_degenerate_fallback_consistent(self, rng):
        h = np.diag([0.0, 1.0, 1.0]).astype(complex)
        spec = SystemSpec(3, h, gue(3, rng), 1.0, 0.2)
        report = stability_report(spec, include_fd=True)
        assert report.degenerate_labels
        assert not np.isnan(report.j_total).any()
        assert report.route_discrepancies["analytic_vs_fd"] < 1e-5
        assert report.verdict in ("stable", "marginal")

    def test_eigenvalues_sorted(self, rng):
        report = stability_report(make_spec(4, rng), include_fd=False)
        re = report.eigenvalues.real
        assert np.all(np.diff(re) <= 1e-15)

    def test_report_records_blocks(self, rng):
        spec = make_spec(3, rng)
        report = stability_report(spec, include_fd=True)
        rebuilt = report.j_u - report.j_a - report.j_b
        np.testing.assert_allclose(rebuilt, report.j_total)
        assert report.j_fd is not None
        assert report.fd_step == pytest.approx(1e-6)


def test_ladder_spec_all_directions_damped(rng):
    # connected coupling graph: every closed-form diagonal strictly positive
    spec = SystemSpec(
        4, np.diag([0.0, 0.31, 0.64, 1.0]).astype(complex), ladder(4), 1.0, 0.5
    )
    vals = closed_form_diagonals(spec)
    assert vals.min() > 0.05
    report = stability_report(spec, include_fd=False)
    assert report.verdict == "stable"
