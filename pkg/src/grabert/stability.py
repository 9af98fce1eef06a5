"""Fixed-point linearization: the Jacobian by three routes and a verdict.

Everything happens in the energy eigenbasis, where both H and the thermal
state rho_0 = diag(w_1..w_d) are diagonal (the coupling is conjugated
there first).  Perturbations are parametrized by Gell-Mann coordinates
kappa (see ``grabert.gellmann``); to first order they obey

    d kappa/dt = J kappa,      J = J_u - J_A - J_B.

Three independent evaluation routes are provided and cross-checked:

* ``jacobian_fd``            central finite differences of the full Theta
* ``jacobian_analytic``      perturbation theory of the eigensystem response
* ``closed_form_diagonals``  explicit formulas for diag(J_A + J_B)

``stability_report`` assembles the blocks, takes the spectrum of the
(non-normal) real J with a general QR eigensolver, and issues a verdict:
"unstable" if any eigenvalue has real part above tolerance, "stable" when
additionally every damping diagonal is strictly positive, and "marginal"
in between — a zero diagonal means the linearization cannot certify decay
in that direction, so such cases are deliberately not called stable.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import SystemSpec, _RHS
from .errors import DegenerateSpectrum, DomainError, StepTooLarge
from .gellmann import BasisLabel, GellMannBasis, build_basis, expand
from .spectral import commutator, f_d, kernel_matrix

DEGENERACY_TOL = 1e-10
DEFAULT_TOL_MARGIN = 1e-9


def _tanh_ratio(e):
    """f_D(eta) expressed through e where eta = -tanh(e/2): 2 tanh(e/2)/e.

    Immune to the eta -> +-1 saturation of the direct form at large |e|.
    """
    e = np.asarray(e, dtype=float)
    out = np.ones_like(e)
    nz = e != 0.0
    out[nz] = 2.0 * np.tanh(e[nz] / 2.0) / e[nz]
    return out


def _sinh_diff_ratio(e):
    """f_D'(eta) through e: 2(sinh e - e)/e^2, with a series below |e| = 0.01."""
    e = np.asarray(e, dtype=float)
    out = np.empty_like(e)
    small = np.abs(e) < 1e-2
    es = e[small]
    out[small] = es / 3.0 * (1.0 + es * es / 20.0)
    eb = e[~small]
    out[~small] = 2.0 * (np.sinh(eb) - eb) / (eb * eb)
    return out


def _sinh_ratio(e):
    """sinh(e)/e with the e -> 0 limit 1; equals f_D(eta)/(1 - eta^2)."""
    e = np.asarray(e, dtype=float)
    out = np.ones_like(e)
    nz = e != 0.0
    out[nz] = np.sinh(e[nz]) / e[nz]
    return out


def _expm1_ratio(t):
    """expm1(t)/t with the t -> 0 limit 1; this is (r-1)/log(r) at r = e^t."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    nz = t != 0.0
    out[nz] = np.expm1(t[nz]) / t[nz]
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class LinearizationContext:
    """Precomputed eigenbasis data for the linearization at the fixed point.

    ``energies`` ascend, so ``weights`` (Boltzmann) descend.  ``e`` holds
    beta*(E_n - E_m); ``eta = -tanh(e/2)`` equals the weight asymmetry
    (w_n - w_m)/(w_n + w_m); ``f`` and ``f_prime`` are f_D and its
    derivative at eta (computed through e so large energy splittings do not
    saturate); ``kernel`` is the pairwise logarithmic mean of the weights.
    """

    spec: SystemSpec = field(repr=False)
    energies: np.ndarray
    weights: np.ndarray
    coupling: np.ndarray = field(repr=False)
    e: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    f_prime: np.ndarray = field(repr=False)
    kernel: np.ndarray = field(repr=False)
    basis: GellMannBasis = field(repr=False)

    @property
    def dim(self):
        return self.spec.dim


def linearization_context(spec, basis=None):
    """Diagonalize H, thermalize, and tabulate every pairwise quantity."""
    energies, u = np.linalg.eigh(spec.hamiltonian)
    z = np.exp(-spec.beta * (energies - energies[0]))
    weights = z / z.sum()
    coupling = u.conj().T @ spec.coupling @ u
    e = spec.beta * (energies[:, None] - energies[None, :])
    eta = -np.tanh(e / 2.0)
    alpha = 0.5 * (weights[:, None] + weights[None, :])
    f = _tanh_ratio(e)
    f_prime = _sinh_diff_ratio(e)
    kern = kernel_matrix(weights)
    if basis is None:
        basis = build_basis(spec.dim)
    return LinearizationContext(
        spec=spec,
        energies=energies,
        weights=weights,
        coupling=coupling,
        e=e,
        eta=eta,
        alpha=alpha,
        f=f,
        f_prime=f_prime,
        kernel=kern,
        basis=basis,
    )


def perturbation_generator(label, ctx, degeneracy_tol=DEGENERACY_TOL):
    """Hermitian generator of the eigenbasis rotation for a basis perturbation.

    Convention: (1 + i eps F)(rho_0 + eps V)(1 - i eps F) is diagonal to
    O(eps^2), i.e. the eigenvector-column response is 1 - i eps F.
    Perturbing along X(n,m) gives F = -Y(n,m)/(w_n - w_m); along Y(n,m)
    gives F = +X(n,m)/(w_n - w_m); diagonal (Z) perturbations do not rotate
    the eigenbasis at first order.  Raises DegenerateSpectrum when the
    weight pair is too close for the division (callers fall back to finite
    differences there).
    """
    basis = ctx.basis
    if label.kind == "Z":
        return np.zeros((ctx.dim, ctx.dim), dtype=complex)
    w = ctx.weights
    gap = w[label.n - 1] - w[label.m - 1]
    if abs(gap) < degeneracy_tol * w.max():
        raise DegenerateSpectrum(
            f"weights for pair ({label.n},{label.m}) differ by {gap:.3e}",
            label=label,
            gap=float(gap),
        )
    if label.kind == "X":
        partner = basis.matrix(BasisLabel("Y", label.n, label.m))
        return -partner / gap
    partner = basis.matrix(BasisLabel("X", label.n, label.m))
    return partner / gap


def _dcoef_matrix(nu, ctx):
    """Entrywise derivative of the kernel along a diagonal perturbation.

    d_nm = ((nu_n + nu_m)/2)(F_nm - eta_nm F'_nm) + ((nu_n - nu_m)/2) F'_nm,
    the expanded form that stays finite when nu_n + nu_m = 0.
    """
    nsum = nu[:, None] + nu[None, :]
    ndiff = nu[:, None] - nu[None, :]
    return 0.5 * nsum * (ctx.f - ctx.eta * ctx.f_prime) + 0.5 * ndiff * ctx.f_prime


def d_a_rho_d_eps(a, label, ctx, degeneracy_tol=DEGENERACY_TOL):
    """Derivative of A_rho at the fixed point along a basis direction.

    For diagonal (Z) directions the kernel itself responds:
    (dF/d eps) o A.  For off-diagonal (X/Y) directions the eigenbasis
    rotates with anti-Hermitian generator S = -iF and

        dA_rho/d eps = F o [A, S] + [S, F o A].
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (ctx.dim, ctx.dim):
        raise DomainError(f"operand shape {a.shape} vs context dim {ctx.dim}")
    if label.kind == "Z":
        lam = ctx.basis.matrix(label)
        nu = lam.diagonal().real
        return _dcoef_matrix(nu, ctx) * a
    gen = perturbation_generator(label, ctx, degeneracy_tol=degeneracy_tol)
    s = -1j * gen
    ka = ctx.kernel * a
    return ctx.kernel * (a @ s - s @ a) + (s @ ka - ka @ s)


def _eigenbasis_spec(ctx):
    return SystemSpec(
        dim=ctx.dim,
        hamiltonian=np.diag(ctx.energies).astype(complex),
        coupling=ctx.coupling,
        beta=ctx.spec.beta,
        gamma_e=ctx.spec.gamma_e,
        hbar=ctx.spec.hbar,
    )


def _fd_columns(ctx, indices, h, mode="nonlinear", beta_prime=None):
    """Central-difference Jacobian columns J[:, b] for the given label indices."""
    espec = _eigenbasis_spec(ctx)
    rhs = _RHS(espec, mode=mode, beta_prime=beta_prime, clamp_tol=1e-12)
    rho0 = np.diag(ctx.weights).astype(complex)
    basis = ctx.basis
    cols = np.empty((len(basis), len(indices)))
    for j, b in enumerate(indices):
        lam = basis.matrices[b]
        plus = expand(rhs(rho0 + h * lam), basis)
        minus = expand(rhs(rho0 - h * lam), basis)
        cols[:, j] = (plus - minus) / (2.0 * h)
    return cols


def default_fd_step(weights):
    """min(1e-6, min weight / 10): keeps perturbed states positive."""
    return min(1e-6, float(weights.min()) / 10.0)


def jacobian_fd(spec, h=None, mode="nonlinear", beta_prime=None):
    """Full Jacobian from central differences of Theta around the fixed point.

    J_ab = [Tr(Theta(rho0 + h l_b) l_a) - Tr(Theta(rho0 - h l_b) l_a)]/(4h).
    The step must keep rho0 +- h l_b positive semidefinite, which holds for
    h <= min_n w_n / 10.
    """
    ctx = spec if isinstance(spec, LinearizationContext) else linearization_context(spec)
    if h is None:
        h = default_fd_step(ctx.weights)
    if h <= 0:
        raise DomainError(f"step must be positive, got {h!r}")
    if h > ctx.weights.min() / 10.0 * (1.0 + 1e-12):
        raise StepTooLarge(
            f"h={h:g} exceeds min weight/10 = {ctx.weights.min() / 10.0:.3e}; "
            "perturbed states would not stay positive"
        )
    return _fd_columns(ctx, range(len(ctx.basis)), h, mode=mode, beta_prime=beta_prime)


@dataclass(frozen=True)
class JacobianBlocks:
    """The three analytic blocks; columns hit by degeneracy are NaN in j_b."""

    j_u: np.ndarray
    j_a: np.ndarray
    j_b: np.ndarray
    degenerate: tuple


def _analytic_blocks(ctx, degeneracy_tol=DEGENERACY_TOL):
    basis = ctx.basis
    k = len(basis)
    espec = _eigenbasis_spec(ctx)
    ht = espec.hamiltonian
    qt = espec.coupling
    a_qh = commutator(qt, ht)
    j_u = np.empty((k, k))
    j_a = np.empty((k, k))
    j_b = np.full((k, k), np.nan)
    degenerate = []
    for b, (lam, lab) in enumerate(zip(basis.matrices, basis.labels)):
        j_u[:, b] = expand((1j / ctx.spec.hbar) * commutator(lam, ht), basis)
        j_a[:, b] = expand(
            ctx.spec.gamma_e * commutator(qt, commutator(qt, lam)), basis
        )
        try:
            deriv = d_a_rho_d_eps(a_qh, lab, ctx, degeneracy_tol=degeneracy_tol)
        except DegenerateSpectrum:
            degenerate.append(lab)
            continue
        j_b[:, b] = expand(
            ctx.spec.beta * ctx.spec.gamma_e * commutator(qt, deriv), basis
        )
    return JacobianBlocks(j_u, j_a, j_b, tuple(degenerate))


def jacobian_analytic(spec, degeneracy_tol=DEGENERACY_TOL):
    """Perturbation-theory Jacobian blocks J_u, J_A, J_B.

    Columns of J_B whose X/Y weight pair is (near-)degenerate are returned
    as NaN together with their labels; ``stability_report`` fills them from
    finite differences (Theta itself is smooth there).
    """
    ctx = spec if isinstance(spec, LinearizationContext) else linearization_context(spec)
    return _analytic_blocks(ctx, degeneracy_tol=degeneracy_tol)


def zeta(eta, inv_kappa):
    """(f_D(eta)/(1 - eta^2)) (1 - eta * inv_kappa).

    Parametrized by 1/kappa so the kappa -> infinity case (symmetric
    diagonal perturbations) is the plain inv_kappa = 0 evaluation.
    Non-negative whenever 0 <= -inv_kappa <= 1.
    """
    eta_arr = np.asarray(eta, dtype=float)
    if np.any(np.abs(eta_arr) >= 1.0):
        raise DomainError("zeta requires |eta| < 1")
    out = f_d(eta) / (1.0 - eta_arr**2) * (1.0 - eta_arr * np.asarray(inv_kappa, float))
    if np.ndim(out) == 0:
        return float(out)
    return out


def g_func(r1, r2):
    """Damping weight G(r1, r2) of a spectator level, in product form.

    G = [(r2-1)/(r2 log r2)] * [log(r1/r2)/((r1/r2) - 1)]; both factors are
    non-negative for positive arguments, each evaluated through the
    limit-safe helper expm1(t)/t.  G(1, 1) = 1.
    """
    r1_arr = np.asarray(r1, dtype=float)
    r2_arr = np.asarray(r2, dtype=float)
    if np.any(r1_arr <= 0.0) or np.any(r2_arr <= 0.0):
        raise DomainError("g_func requires positive arguments")
    l1 = np.log(r1_arr)
    l2 = np.log(r2_arr)
    out = _expm1_ratio(-l2) / _expm1_ratio(l1 - l2)
    if np.ndim(out) == 0:
        return float(out)
    return out


def closed_form_diagonals(spec):
    """diag(J_A + J_B) from the explicit per-label formulas.

    Z(l):    j_l = gamma_E sum_{n<m} zeta_nm nu_nm^2 |q_nm|^2 with the
             zeta nu^2 product expanded so nu_n + nu_m = 0 stays finite,
             and f_D(eta)/(1-eta^2) evaluated as sinh(e)/e.
    X/Y(n,m): relabel the pair to play the (2,1) role, then
             j/gamma_E = q_d^2 + 4 upsilon (Im/Re q_12)^2 + spectator sum of
             G-weighted |q|^2, with upsilon = 1/f_D(eta_12) >= 1.
    Every value is non-negative up to round-off.
    """
    ctx = spec if isinstance(spec, LinearizationContext) else linearization_context(spec)
    gamma = ctx.spec.gamma_e
    d = ctx.dim
    q = ctx.coupling
    abs_q2 = np.abs(q) ** 2
    ratio = _sinh_ratio(ctx.e)
    out = np.empty(len(ctx.basis))
    for idx, lab in enumerate(ctx.basis.labels):
        if lab.kind == "Z":
            nu = ctx.basis.matrices[idx].diagonal().real
            total = 0.0
            for n in range(d):
                for m in range(n + 1, d):
                    nd = nu[n] - nu[m]
                    if nd == 0.0:
                        continue  # term vanishes; skip so an overflowed ratio cannot make 0*inf
                    zeta_nu2 = ratio[n, m] * (
                        nd * nd - ctx.eta[n, m] * nd * (nu[n] + nu[m])
                    )
                    total += zeta_nu2 * abs_q2[n, m]
            out[idx] = gamma * total
        else:
            i, j = lab.n - 1, lab.m - 1  # pair levels, 0-based
            others = [k for k in range(d) if k not in (i, j)]
            # the pair plays the (1,2) role after relabeling m -> 1, n -> 2
            e12 = ctx.e[j, i]
            ups = 1.0 / float(_tanh_ratio(e12))
            qd = (q[j, j] - q[i, i]).real
            q12 = q[j, i]
            spectator = 0.0
            for k in others:
                g1 = _expm1_ratio(ctx.e[i, k]) / _expm1_ratio(ctx.e[i, j])
                g2 = _expm1_ratio(ctx.e[j, k]) / _expm1_ratio(ctx.e[j, i])
                spectator += g1 * abs_q2[j, k] + g2 * abs_q2[i, k]
            cross = q12.imag if lab.kind == "X" else q12.real
            out[idx] = gamma * (qd * qd + 4.0 * ups * cross * cross + spectator)
    return out


@dataclass(frozen=True)
class JacobianReport:
    """Everything the stability analysis produced for one system."""

    labels: tuple
    j_u: np.ndarray
    j_a: np.ndarray
    j_b: np.ndarray
    j_total: np.ndarray
    j_fd: Optional[np.ndarray]
    eigenvalues: np.ndarray
    diag_closed_form: np.ndarray
    max_real_part: float
    min_diagonal: float
    verdict: str
    route_discrepancies: dict
    degenerate_labels: tuple
    fd_step: Optional[float]


def stability_report(
    spec,
    include_fd=True,
    h=None,
    tol_margin=DEFAULT_TOL_MARGIN,
    degeneracy_tol=DEGENERACY_TOL,
):
    """Assemble J, its spectrum, the closed-form diagonals, and a verdict.

    The analytic route fills the Jacobian; degenerate X/Y columns fall back
    to finite differences.  With ``include_fd`` the full FD Jacobian is also
    computed and the maximal entrywise discrepancies between routes are
    recorded.  Verdict: "unstable" if max Re(eig) > tol_margin; "marginal"
    if |max Re| <= tol_margin or some damping diagonal is <= tol_margin
    (the positivity certificate is then inconclusive); "stable" otherwise.
    """
    ctx = linearization_context(spec)
    if h is None:
        h = default_fd_step(ctx.weights)
    blocks = _analytic_blocks(ctx, degeneracy_tol=degeneracy_tol)
    j_b = blocks.j_b.copy()
    if blocks.degenerate:
        idx = [ctx.basis.index_map[lab] for lab in blocks.degenerate]
        fd_cols = _fd_columns(ctx, idx, h)
        for j, b in enumerate(idx):
            j_b[:, b] = blocks.j_u[:, b] - blocks.j_a[:, b] - fd_cols[:, j]
    j_total = blocks.j_u - blocks.j_a - j_b

    j_fd = None
    if include_fd:
        j_fd = jacobian_fd(ctx, h=h)

    eigenvalues = np.linalg.eigvals(j_total)
    order = np.lexsort((-eigenvalues.imag, -eigenvalues.real))
    eigenvalues = eigenvalues[order]
    diag_closed = closed_form_diagonals(ctx)

    max_real = float(eigenvalues.real.max())
    min_diag = float(diag_closed.min())
    if max_real > tol_margin:
        verdict = "unstable"
    elif max_real >= -tol_margin or min_diag <= tol_margin:
        verdict = "marginal"
    else:
        verdict = "stable"

    nan = float("nan")
    discrepancies = {
        "analytic_vs_fd": float(np.abs(j_total - j_fd).max()) if j_fd is not None else nan,
        "closed_form_vs_fd_diag": (
            float(np.abs(diag_closed + np.diag(j_fd)).max()) if j_fd is not None else nan
        ),
        "closed_form_vs_analytic_diag": float(
            np.abs(diag_closed - np.diag(blocks.j_a + j_b)).max()
        ),
    }

    return JacobianReport(
        labels=ctx.basis.labels,
        j_u=blocks.j_u,
        j_a=blocks.j_a,
        j_b=j_b,
        j_total=j_total,
        j_fd=j_fd,
        eigenvalues=eigenvalues,
        diag_closed_form=diag_closed,
        max_real_part=max_real,
        min_diagonal=min_diag,
        verdict=verdict,
        route_discrepancies=discrepancies,
        degenerate_labels=blocks.degenerate,
        fd_step=float(h),
    )
