"""State evolution under the nonlinear thermal master equation.

The equation of motion is

    d rho/dt = Theta(rho) = Theta_u(rho) - Theta_A(rho) - Theta_B(rho)

with the unitary part Theta_u = (i/hbar)[rho, H], the linear damping
Theta_A = gamma_E [Q, [Q, rho]], and the state-dependent damping
Theta_B = beta gamma_E [Q, A_rho] where A = [Q, H] is weighted by the
state through the map of ``grabert.spectral.a_rho``.  The Boltzmann state
rho_0 = exp(-beta H)/Z is a fixed point, and the expectation of the
free-energy operator U_H = H + log(rho)/beta decreases monotonically along
solutions at the rate -beta gamma_E Tr(C_rho C), C = i[Q, U_H].

Units: k_B = 1 throughout and hbar defaults to 1 (a SystemSpec field);
beta carries inverse energy, gamma_E is a rate.

``integrate`` steps the equation with fixed-step RK4 or adaptive RK45,
re-Hermitizes after every accepted step, records scalar observables, and
aborts with PositivityBreach if an eigenvalue dives below tolerance.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .errors import (
    DimensionMismatch,
    DomainError,
    PositivityBreach,
    SingularState,
    StepSizeError,
)
from .spectral import (
    SpectralDecomposition,
    commutator,
    hermitian_part,
    require_hermitian,
)

LOG_FLOOR = 1e-300  # eigenvalue floor before taking log(rho) as a matrix
SINGULAR_TOL = 1e-14


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SystemSpec:
    """A closed problem instance: Hamiltonian, coupling, and rates."""

    dim: int
    hamiltonian: np.ndarray
    coupling: np.ndarray
    beta: float
    gamma_e: float
    hbar: float = 1.0

    def __post_init__(self):
        h = require_hermitian(self.hamiltonian, name="hamiltonian")
        q = require_hermitian(self.coupling, name="coupling")
        if h.shape != (self.dim, self.dim):
            raise DimensionMismatch(
                f"hamiltonian shape {h.shape} vs dim {self.dim}"
            )
        if q.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"coupling shape {q.shape} vs dim {self.dim}")
        for name in ("beta", "hbar"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be a finite positive number, got {val!r}")
        # gamma_e = 0 is admitted so purely unitary evolution stays expressible
        if not (
            isinstance(self.gamma_e, (int, float))
            and math.isfinite(self.gamma_e)
            and self.gamma_e >= 0
        ):
            raise DomainError(
                f"gamma_e must be a finite non-negative number, got {self.gamma_e!r}"
            )
        object.__setattr__(self, "hamiltonian", _readonly(h))
        object.__setattr__(self, "coupling", _readonly(q))


class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state with cached spectrum."""

    __slots__ = ("matrix", "_w", "_u")

    def __init__(self, matrix, herm_tol=1e-12, trace_tol=1e-10, positivity_tol=1e-8):
        m = require_hermitian(matrix, tol=herm_tol, name="density matrix")
        tr = m.trace().real
        if abs(tr - 1.0) > trace_tol:
            raise DomainError(f"trace {tr!r} differs from 1 beyond {trace_tol:g}")
        w, u = np.linalg.eigh(m)
        if w[0] < -positivity_tol:
            raise DomainError(f"negative eigenvalue {w[0]:.3e}")
        self.matrix = _readonly(m)
        self._w = w
        self._u = u

    @classmethod
    def _trusted(cls, matrix, w, u):
        """Internal constructor for states whose invariants were already checked."""
        self = object.__new__(cls)
        self.matrix = _readonly(matrix)
        self._w = w
        self._u = u
        return self

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def spectrum(self):
        return SpectralDecomposition(self._w, self._u)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, purity={np.vdot(self.matrix, self.matrix).real:.6f})"


def _state_matrix(rho):
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def _state_spectrum_pair(rho):
    if isinstance(rho, DensityMatrix):
        return rho.matrix, rho.spectrum
    m = np.asarray(rho, dtype=complex)
    w, u = np.linalg.eigh(hermitian_part(m))
    return m, SpectralDecomposition(w, u)


def _check_state_dim(m, spec):
    if m.shape != (spec.dim, spec.dim):
        raise DimensionMismatch(f"state shape {m.shape} vs system dim {spec.dim}")


def fixed_point(spec):
    """Boltzmann state exp(-beta H)/Z, diagonal in the H eigenbasis.

    Energies are shifted by their minimum before exponentiation so large
    beta*H cannot overflow.
    """
    energies, u = np.linalg.eigh(spec.hamiltonian)
    z = np.exp(-spec.beta * (energies - energies[0]))
    z /= z.sum()
    m = hermitian_part((u * z) @ u.conj().T)
    # eigh order of the state is ascending weights = descending energies
    return DensityMatrix._trusted(m, z[::-1].copy(), u[:, ::-1].copy())


def theta_u(rho, spec):
    """(i/hbar)[rho, H]: the unitary part of the evolution."""
    m = _state_matrix(rho)
    _check_state_dim(m, spec)
    return (1j / spec.hbar) * commutator(m, spec.hamiltonian)


def theta_A(rho, spec):
    """gamma_E [Q, [Q, rho]]: the state-linear damping term."""
    m = _state_matrix(rho)
    _check_state_dim(m, spec)
    q = spec.coupling
    return spec.gamma_e * commutator(q, commutator(q, m))


def theta_B(rho, spec, clamp_tol=1e-10):
    """beta gamma_E [Q, A_rho] with A = [Q, H]: the nonlinear damping term."""
    m, (w, u) = _state_spectrum_pair(rho)
    _check_state_dim(m, spec)
    if w.min() < -clamp_tol:
        raise DomainError(f"state eigenvalue {w.min():.3e} below -{clamp_tol:g}")
    w = np.where(w < 0.0, 0.0, w)
    q = spec.coupling
    inner = commutator(q, spec.hamiltonian)
    at = u.conj().T @ inner @ u
    weighted = u @ (kernels.kernel_from_weights(w) * at) @ u.conj().T
    return spec.beta * spec.gamma_e * commutator(q, weighted)


def theta_B_linear(rho, spec, beta_prime):
    """State-independent damping (beta'/hbar) gamma_E [Q, [Q, H]].

    Substituting this for the nonlinear term gives the linear variant of the
    master equation.
    """
    if not (math.isfinite(beta_prime) and beta_prime > 0):
        raise DomainError(f"beta_prime must be positive, got {beta_prime!r}")
    m = _state_matrix(rho)
    _check_state_dim(m, spec)
    q = spec.coupling
    return (beta_prime / spec.hbar) * spec.gamma_e * commutator(
        q, commutator(q, spec.hamiltonian)
    )


def theta(rho, spec, mode="nonlinear", beta_prime=None, clamp_tol=1e-10):
    """Full right-hand side Theta_u - Theta_A - Theta_B (or its linear variant)."""
    if mode == "nonlinear":
        damping = theta_B(rho, spec, clamp_tol=clamp_tol)
    elif mode == "linear":
        if beta_prime is None:
            raise DomainError("linear mode requires beta_prime")
        damping = theta_B_linear(rho, spec, beta_prime)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return theta_u(rho, spec) - theta_A(rho, spec) - damping


def helmholtz_operator(rho, spec):
    """Free-energy operator H + log(rho)/beta in spectral form.

    Eigenvalues below LOG_FLOOR are floored there before the log; the
    operator is a diagnostic near interior states, the physically meaningful
    scalar is ``free_energy`` (which uses the exact 0*log(0) = 0 rule).
    """
    m, (w, u) = _state_spectrum_pair(rho)
    _check_state_dim(m, spec)
    logs = np.log(np.maximum(w, LOG_FLOOR))
    return spec.hamiltonian + (u * (logs / spec.beta)) @ u.conj().T


def c_operator(rho, spec, singular_tol=SINGULAR_TOL):
    """i[Q, U_H]; vanishes exactly at the thermal fixed point.

    Raises SingularState when rho has an eigenvalue below ``singular_tol``
    (log rho, and with it C, stops being meaningful there).
    """
    m, (w, u) = _state_spectrum_pair(rho)
    _check_state_dim(m, spec)
    if w.min() < singular_tol:
        raise SingularState(
            f"state eigenvalue {w.min():.3e} below {singular_tol:g}; C is ill-defined"
        )
    logs = np.log(w)
    uh = spec.hamiltonian + (u * (logs / spec.beta)) @ u.conj().T
    return 1j * commutator(spec.coupling, uh)


def free_energy(rho, spec):
    """Tr(H rho) + beta^-1 sum_n w_n log w_n, with 0 log 0 = 0."""
    m, (w, _) = _state_spectrum_pair(rho)
    _check_state_dim(m, spec)
    energy = np.einsum("ij,ji->", spec.hamiltonian, m).real
    pos = w[w > 0.0]
    return float(energy + (pos @ np.log(pos)) / spec.beta)


class Observables(NamedTuple):
    purity: float
    entropy: float
    free_energy: float
    c_norm: float
    trace_error: float
    min_eig: float


def _observe(m, w, u, spec):
    purity = float(np.vdot(m, m).real)
    pos = w[w > 0.0]
    entropy = float(-(pos @ np.log(pos)))
    energy = np.einsum("ij,ji->", spec.hamiltonian, m).real
    fe = float(energy + (pos @ np.log(pos)) / spec.beta)
    if w.min() < SINGULAR_TOL:
        c_norm = math.nan  # flagged: C undefined at (near-)singular states
    else:
        uh = spec.hamiltonian + (u * (np.log(w) / spec.beta)) @ u.conj().T
        c = 1j * commutator(spec.coupling, uh)
        c_norm = float(np.linalg.norm(c))
    trace_error = abs(m.trace().real - 1.0)
    return Observables(purity, entropy, fe, c_norm, trace_error, float(w.min()))


def observables(rho, spec):
    """Scalar diagnostics of a state: purity, entropy, free energy, |C|, drift."""
    m, (w, u) = _state_spectrum_pair(rho)
    _check_state_dim(m, spec)
    return _observe(m, w, u, spec)


class _RHS:
    """Precomputed right-hand side for the time steppers.

    Evaluates Theta on raw state matrices with no per-call validation;
    eigenvalues slightly negative (down to ``clamp_tol``) are clamped so
    transient round-off at stage states cannot abort a step, and anything
    below that raises PositivityBreach.
    """

    def __init__(self, spec, mode="nonlinear", beta_prime=None, clamp_tol=1e-6):
        if mode not in ("nonlinear", "linear"):
            raise DomainError(f"unknown mode {mode!r}")
        if mode == "linear" and beta_prime is None:
            raise DomainError("linear mode requires beta_prime")
        self.h = spec.hamiltonian
        self.q = spec.coupling
        self.ihbar = 1j / spec.hbar
        self.gamma = spec.gamma_e
        self.beta_gamma = spec.beta * spec.gamma_e
        self.nonlinear = mode == "nonlinear"
        self.clamp_tol = clamp_tol
        # i[Q,H] is Hermitian; the nonlinear term weights [Q,H] = -i * (i[Q,H])
        self.iqh = 1j * commutator(self.q, self.h)
        if not self.nonlinear:
            if not (math.isfinite(beta_prime) and beta_prime > 0):
                raise DomainError(f"beta_prime must be positive, got {beta_prime!r}")
            self.const = (beta_prime / spec.hbar) * spec.gamma_e * commutator(
                self.q, commutator(self.q, self.h)
            )

    def __call__(self, m, spectrum=None):
        h, q = self.h, self.q
        out = self.ihbar * (m @ h - h @ m)
        c1 = q @ m - m @ q
        out -= self.gamma * (q @ c1 - c1 @ q)
        if self.nonlinear:
            if spectrum is None:
                w, u = np.linalg.eigh(m)
            else:
                w, u = spectrum
            if w[0] < -self.clamp_tol:
                raise PositivityBreach(
                    f"eigenvalue {w[0]:.3e} below -{self.clamp_tol:g} during stage evaluation",
                    min_eigenvalue=float(w[0]),
                )
            w = np.where(w < 0.0, 0.0, w)
            uh = u.conj().T
            at = uh @ self.iqh @ u
            weighted = u @ (kernels.kernel_from_weights(w) * at) @ uh
            b = -1j * weighted  # A_rho for A = [Q,H]
            out -= self.beta_gamma * (q @ b - b @ q)
        else:
            out = out - self.const
        return out


def default_timestep(spec):
    """0.01 * min(1/gamma_E, hbar/||H||_2); the spectral norm guards the phases."""
    hnorm = float(np.abs(np.linalg.eigvalsh(spec.hamiltonian)).max())
    scale = math.inf
    if spec.gamma_e > 0.0:
        scale = 1.0 / spec.gamma_e
    if hnorm > 0.0:
        scale = min(scale, spec.hbar / hnorm)
    if not math.isfinite(scale):
        raise DomainError("no timescale: both gamma_e and ||H|| are zero; pass dt")
    return 0.01 * scale


@dataclass
class Trajectory:
    """Time grid, states, and per-step scalar observables of one run."""

    times: np.ndarray
    states: list
    purity: np.ndarray
    entropy: np.ndarray
    free_energy: np.ndarray
    c_norm: np.ndarray
    trace_error: np.ndarray
    min_eig: np.ndarray
    max_hermiticity_drift: float = 0.0
    spec: Optional[SystemSpec] = field(default=None, repr=False)

    def __len__(self):
        return len(self.times)

    def columns(self):
        """Observable columns keyed by name, aligned with ``times``."""
        return {
            "t": self.times,
            "purity": self.purity,
            "entropy": self.entropy,
            "free_energy": self.free_energy,
            "c_norm": self.c_norm,
            "trace_error": self.trace_error,
            "min_eig": self.min_eig,
        }


class _Recorder:
    def __init__(self, spec, record_states):
        self.spec = spec
        self.record_states = record_states
        self.times = []
        self.states = []
        self.rows = []

    def add(self, t, m, w, u):
        self.times.append(t)
        if self.record_states:
            self.states.append(DensityMatrix._trusted(m, w, u))
        self.rows.append(_observe(m, w, u, self.spec))

    def build(self, spec, herm_drift):
        cols = np.array(self.rows, dtype=float).reshape(len(self.rows), 6)
        return Trajectory(
            times=np.asarray(self.times, dtype=float),
            states=self.states,
            purity=cols[:, 0],
            entropy=cols[:, 1],
            free_energy=cols[:, 2],
            c_norm=cols[:, 3],
            trace_error=cols[:, 4],
            min_eig=cols[:, 5],
            max_hermiticity_drift=herm_drift,
            spec=spec,
        )


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (
    5179 / 57600,
    0.0,
    7571 / 16695,
    393 / 640,
    -92097 / 339200,
    187 / 2100,
    1 / 40,
)


def integrate(
    rho0,
    spec,
    t_final,
    dt=None,
    method="rk4",
    mode="nonlinear",
    beta_prime=None,
    renormalize=False,
    positivity_tol=1e-6,
    atol=1e-9,
    dt_min=None,
    record_states=True,
):
    """Propagate a state to ``t_final`` recording observables at every step.

    ``method`` is "rk4" (fixed step ``dt``, default from ``default_timestep``)
    or "rk45" (adaptive Dormand-Prince with absolute error tolerance
    ``atol``).  After every accepted step the state is exactly
    re-Hermitized; the pre-symmetrization drift is tracked in
    ``Trajectory.max_hermiticity_drift``.  Trace renormalization is off by
    default so conservation stays observable.  A state eigenvalue below
    ``-positivity_tol`` aborts with PositivityBreach carrying the partial
    trajectory.
    """
    if t_final <= 0:
        raise DomainError(f"t_final must be positive, got {t_final!r}")
    if isinstance(rho0, DensityMatrix):
        m = rho0.matrix.copy()
    else:
        m = DensityMatrix(rho0).matrix.copy()
    _check_state_dim(m, spec)
    if dt is None:
        dt = default_timestep(spec)
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt!r}")

    rhs = _RHS(spec, mode=mode, beta_prime=beta_prime, clamp_tol=positivity_tol)
    rec = _Recorder(spec, record_states)
    herm_drift = 0.0

    def finish_step(t, m_raw):
        nonlocal herm_drift
        drift = float(np.linalg.norm(m_raw - m_raw.conj().T))
        herm_drift = max(herm_drift, drift)
        m_new = hermitian_part(m_raw)
        if renormalize:
            m_new = m_new / m_new.trace().real
        w, u = np.linalg.eigh(m_new)
        if w[0] < -positivity_tol:
            raise PositivityBreach(
                f"eigenvalue {w[0]:.3e} at t={t:.6g}",
                time=t,
                min_eigenvalue=float(w[0]),
                trajectory=rec.build(spec, herm_drift),
            )
        rec.add(t, m_new, w, u)
        return m_new, (w, u)

    w0, u0 = np.linalg.eigh(m)
    if w0[0] < -positivity_tol:
        raise PositivityBreach(
            f"initial eigenvalue {w0[0]:.3e}", time=0.0, min_eigenvalue=float(w0[0])
        )
    rec.add(0.0, m, w0, u0)
    spectrum = (w0, u0)

    try:
        if method == "rk4":
            n_steps = max(1, int(math.ceil(t_final / dt - 1e-12)))
            t = 0.0
            for k in range(n_steps):
                # last step is shortened so the grid lands exactly on t_final
                step = min(dt, t_final - t)
                k1 = rhs(m, spectrum)
                k2 = rhs(m + (0.5 * step) * k1)
                k3 = rhs(m + (0.5 * step) * k2)
                k4 = rhs(m + step * k3)
                m_raw = m + (step / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
                t = t_final if k == n_steps - 1 else t + step
                m, spectrum = finish_step(t, m_raw)
        elif method == "rk45":
            if dt_min is None:
                dt_min = 1e-12 * dt
            t = 0.0
            step = dt
            while t < t_final - 1e-12 * t_final:
                step = min(step, t_final - t)
                ks = [rhs(m, spectrum)]
                for i in range(1, 7):
                    y = m
                    for a_ij, kj in zip(_DP_A[i], ks):
                        y = y + (step * a_ij) * kj
                    ks.append(rhs(y))
                m5 = m
                err = np.zeros_like(m)
                for b5, b4, kj in zip(_DP_B5, _DP_B4, ks):
                    m5 = m5 + (step * b5) * kj
                    err = err + (step * (b5 - b4)) * kj
                err_norm = float(np.linalg.norm(err))
                if err_norm <= atol:
                    t += step
                    m, spectrum = finish_step(t, m5)
                factor = 0.9 * (atol / err_norm) ** 0.2 if err_norm > 0 else 5.0
                step *= min(5.0, max(0.2, factor))
                if step < dt_min:
                    raise StepSizeError(
                        f"step size {step:.3e} fell below dt_min={dt_min:.3e} "
                        f"while holding atol={atol:g}"
                    )
        else:
            raise DomainError(f"unknown integration method {method!r}")
    except PositivityBreach as breach:
        if breach.trajectory is None:
            breach.trajectory = rec.build(spec, herm_drift)
        if breach.time is None:
            breach.time = rec.times[-1]
        raise

    return rec.build(spec, herm_drift)


def flag_limit_cycle(trajectory, window_fraction=0.25, plateau_tol=1e-9, c_floor=1e-5):
    """Heuristic flag: free energy has plateaued while C stays away from zero.

    Along a genuine relaxation both the free energy and |C| decay together;
    a plateau in the free energy with |C| bounded away from zero is the
    signature that would make a periodic orbit possible, so it is flagged
    (never proven) for inspection.
    """
    n = len(trajectory)
    if n < 4:
        return False
    k = max(2, int(n * window_fraction))
    fe = trajectory.free_energy[-k:]
    cn = trajectory.c_norm[-k:]
    plateau = (fe.max() - fe.min()) <= plateau_tol
    away = np.all(np.isnan(cn)) or float(np.nanmin(cn)) >= c_floor
    return bool(plateau and away)
