"""Built-in verification suite: every acceptance check as a callable.

Each criterion function returns (passed, detail); ``run_all`` executes them
in order with timing and prints one PASS/FAIL line per criterion.  The
pytest acceptance module drives the same functions, so the CLI ``selftest``
subcommand and the test suite certify identical properties on identical
frozen seeds.  The criterion for CLI determinism checks byte-identical
``jacobian`` output here; the companion requirement that ``selftest``
itself exits 0 is exercised from the test suite in a subprocess.
"""

import json
import tempfile
import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import presets
from .dynamics import (
    SystemSpec,
    c_operator,
    fixed_point,
    free_energy,
    integrate,
    theta,
)
from .gellmann import BasisLabel, build_basis, expand, reconstruct
from .spectral import a_rho, cal_f, f_d, quadrature_a_rho
from .stability import (
    closed_form_diagonals,
    g_func,
    jacobian_analytic,
    jacobian_fd,
    stability_report,
    zeta,
)

ROOT_SEED = 20260809


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed: float


def _rng(*path):
    return np.random.default_rng(np.random.SeedSequence([ROOT_SEED, *path]))


def _boltzmann_weights(spec):
    energies = np.linalg.eigvalsh(spec.hamiltonian)
    z = np.exp(-spec.beta * (energies - energies[0]))
    return z / z.sum()


@lru_cache(maxsize=None)
def _ensemble_full():
    """100 generic systems: d in 2..6, beta in [0.1, 5], gamma in [0.01, 1]."""
    specs = []
    for i in range(100):
        rng = _rng(1, i)
        d = 2 + i % 5
        h = presets.gue(d, rng)
        q = presets.gue(d, rng)
        beta = rng.uniform(0.1, 5.0)
        gamma = rng.uniform(0.01, 1.0)
        specs.append(SystemSpec(d, h, q, beta, gamma))
    return tuple(specs)


@lru_cache(maxsize=None)
def _ensemble_jacobian():
    """50 non-degenerate systems with min Boltzmann weight >= 1e-2.

    The weight floor keeps the h = 1e-6 central difference of the kernel
    inside its truncation budget (third derivatives grow like 1/w^3).
    """
    specs = []
    trial = 0
    while len(specs) < 50:
        rng = _rng(3, trial)
        trial += 1
        d = 2 + len(specs) % 3
        h = presets.gue(d, rng)
        q = presets.gue(d, rng)
        beta = rng.uniform(0.1, 5.0)
        gamma = rng.uniform(0.01, 1.0)
        spec = SystemSpec(d, h, q, beta, gamma)
        w = _boltzmann_weights(spec)
        if w.min() < 1e-2:
            continue
        gaps = np.abs(w[:, None] - w[None, :])[~np.eye(d, dtype=bool)]
        if gaps.min() < 1e-6 * w.max():
            continue
        specs.append(spec)
    return tuple(specs)


@lru_cache(maxsize=None)
def _jacobian_pairs():
    """(analytic J, FD J at h=1e-6) for the Jacobian ensemble."""
    pairs = []
    for spec in _ensemble_jacobian():
        blocks = jacobian_analytic(spec)
        if blocks.degenerate:
            raise AssertionError("jacobian ensemble hit a degenerate pair")
        j_an = blocks.j_u - blocks.j_a - blocks.j_b
        j_fd = jacobian_fd(spec, h=1e-6)
        pairs.append((spec, j_an, j_fd))
    return tuple(pairs)


@lru_cache(maxsize=None)
def _trajectory_batch():
    """20 relaxation runs (rk4, default dt, t_final = 20/gamma)."""
    out = []
    for i in range(20):
        rng = _rng(6, i)
        d = 2 + i % 3
        h = presets.gue(d, rng)
        q = presets.gue(d, rng)
        beta = rng.uniform(0.5, 1.5)
        gamma = rng.uniform(0.5, 1.0)
        spec = SystemSpec(d, h, q, beta, gamma)
        rho0 = presets.interior_state(d, rng)
        traj = integrate(rho0, spec, t_final=20.0 / gamma, method="rk4")
        out.append((spec, traj))
    return tuple(out)


def criterion_fixed_point_residual():
    """Theta(rho_0) vanishes across the full random ensemble."""
    worst = 0.0
    for spec in _ensemble_full():
        rho0 = fixed_point(spec)
        residual = float(np.linalg.norm(theta(rho0, spec)))
        qnorm = float(np.abs(np.linalg.eigvalsh(spec.coupling)).max())
        hnorm = float(np.abs(np.linalg.eigvalsh(spec.hamiltonian)).max())
        scale = 1.0 + spec.beta * spec.gamma_e * qnorm**2 * hnorm
        worst = max(worst, residual / (1e-10 * scale))
    return worst <= 1.0, f"max residual / (1e-10 * scale) = {worst:.3e}"


def criterion_a_rho_oracle():
    """Closed form vs 64-node quadrature on interior states."""
    worst = 0.0
    for i in range(100):
        rng = _rng(2, i)
        d = 2 + i % 5
        a = presets.gue(d, rng)
        rho = presets.interior_state(d, rng)
        diff = float(np.linalg.norm(a_rho(a, rho) - quadrature_a_rho(a, rho, nodes=64)))
        worst = max(worst, diff)
    return worst <= 1e-9, f"max Frobenius difference = {worst:.3e}"


def criterion_jacobian_routes():
    """Analytic J agrees with central differences entrywise to 1e-5."""
    worst = 0.0
    for _, j_an, j_fd in _jacobian_pairs():
        worst = max(worst, float(np.abs(j_an - j_fd).max()))
    return worst <= 1e-5, f"max entrywise |J_analytic - J_fd| = {worst:.3e}"


def criterion_closed_form_diagonals():
    """Explicit j-values match -diag(J_fd) and are non-negative."""
    worst = 0.0
    most_negative = 0.0
    for spec, _, j_fd in _jacobian_pairs():
        closed = closed_form_diagonals(spec)
        worst = max(worst, float(np.abs(closed + np.diag(j_fd)).max()))
        most_negative = min(most_negative, float(closed.min()))
    ok = worst <= 1e-5 and most_negative >= -1e-12
    return ok, f"max diag diff = {worst:.3e}, min value = {most_negative:.3e}"


def _marginal_benchmark_report():
    spec = SystemSpec(
        2,
        np.diag([0.0, 1.0]).astype(complex),
        presets.PAULI["pauli_x"],
        beta=1.0,
        gamma_e=0.1,
    )
    return spec, stability_report(spec, include_fd=True)


def criterion_spectral_stability():
    """max Re eig(J) <= 1e-9 everywhere; the real-sigma_x case is marginal."""
    worst = -np.inf
    verdicts_ok = True
    for spec in _ensemble_full():
        report = stability_report(spec, include_fd=False)
        worst = max(worst, report.max_real_part)
        verdicts_ok &= report.verdict in ("stable", "marginal")
    spec2, bench = _marginal_benchmark_report()
    basis = build_basis(2)
    jx = bench.diag_closed_form[basis.index_map[BasisLabel("X", 2, 1)]]
    bench_ok = bench.verdict == "marginal" and jx == 0.0
    ok = worst <= 1e-9 and verdicts_ok and bench_ok
    return ok, (
        f"max Re eig = {worst:.3e}; sigma_x benchmark verdict={bench.verdict}, "
        f"j_X={jx!r}"
    )


def _directional_free_energy_rate(rho, spec):
    """d<U_H>/dt by Richardson-extrapolated differences along the flow."""
    direction = theta(rho, spec)
    scale = max(1.0, float(np.linalg.norm(direction)))
    m = rho.matrix

    def diff(s):
        return (
            free_energy(m + s * direction, spec) - free_energy(m - s * direction, spec)
        ) / (2.0 * s)

    s = 1e-5 / scale
    d1 = diff(s)
    d2 = diff(s / 2.0)
    return (4.0 * d2 - d1) / 3.0


def criterion_free_energy_descent():
    """Monotone free energy per step plus the dissipation-rate identity."""
    worst_increase = -np.inf
    worst_rel = 0.0
    checked = 0
    for spec, traj in _trajectory_batch():
        worst_increase = max(worst_increase, float(np.diff(traj.free_energy).max()))
        n = len(traj)
        for k in sorted({max(1, n // 20), n // 10, n // 6, n // 4, n // 3}):
            rho = traj.states[k]
            if rho.spectrum.eigenvalues.min() < 1e-8:
                continue
            c = c_operator(rho, spec)
            expected = -spec.beta * spec.gamma_e * float(
                np.einsum("ij,ji->", a_rho(c, rho), c).real
            )
            if abs(expected) < 1e-9:
                continue
            numeric = _directional_free_energy_rate(rho, spec)
            worst_rel = max(worst_rel, abs(numeric - expected) / abs(expected))
            checked += 1
    ok = worst_increase <= 1e-10 and worst_rel <= 1e-6 and checked >= 40
    return ok, (
        f"max per-step increase = {worst_increase:.3e}, "
        f"max relative rate error = {worst_rel:.3e} over {checked} points"
    )


def criterion_conservation_positivity():
    """Trace, Hermiticity, purity, and positivity budgets along trajectories."""
    worst_trace = 0.0
    worst_herm = 0.0
    worst_purity = 0.0
    worst_eig = 0.0
    for _, traj in _trajectory_batch():
        worst_trace = max(worst_trace, float(traj.trace_error.max()))
        worst_herm = max(worst_herm, traj.max_hermiticity_drift)
        worst_purity = max(worst_purity, float(traj.purity.max()))
        worst_eig = min(worst_eig, float(traj.min_eig.min()))
    ok = (
        worst_trace <= 1e-9
        and worst_herm <= 1e-11
        and worst_purity <= 1.0 + 1e-9
        and worst_eig >= -1e-6
    )
    return ok, (
        f"trace error {worst_trace:.2e}, herm drift {worst_herm:.2e}, "
        f"purity max {worst_purity:.12f}, min eig {worst_eig:.2e}"
    )


def criterion_equilibrium_convergence():
    """Generic connected coupling relaxes interior states onto rho_0."""
    spec = SystemSpec(
        4,
        np.diag([0.0, 0.31, 0.64, 1.0]).astype(complex),
        presets.ladder(4),
        beta=1.0,
        gamma_e=0.5,
    )
    rho0 = fixed_point(spec)
    worst_dist = 0.0
    worst_cnorm = 0.0
    for i in range(10):
        start = presets.interior_state(4, _rng(8, i))
        traj = integrate(start, spec, t_final=50.0 / spec.gamma_e, method="rk4")
        dist = float(np.linalg.norm(traj.states[-1].matrix - rho0.matrix))
        worst_dist = max(worst_dist, dist)
        worst_cnorm = max(worst_cnorm, float(traj.c_norm[-1]))
    ok = worst_dist < 1e-6 and worst_cnorm < 1e-4
    return ok, f"max final distance = {worst_dist:.3e}, max final |C| = {worst_cnorm:.3e}"


def criterion_basis_correctness():
    """Orthonormality to 1e-14 for d in 2..8 and exact coordinate round-trips."""
    worst_gram = 0.0
    worst_round = 0.0
    for d in range(2, 9):
        basis = build_basis(d)
        k = len(basis)
        expected = d * (d - 1) // 2
        if (
            sum(lab.kind == "X" for lab in basis.labels) != expected
            or sum(lab.kind == "Y" for lab in basis.labels) != expected
            or sum(lab.kind == "Z" for lab in basis.labels) != d - 1
        ):
            return False, f"wrong subset counts at d={d}"
        gram = np.einsum("aij,bji->ab", basis.stacked, basis.stacked).real / 2.0
        worst_gram = max(worst_gram, float(np.abs(gram - np.eye(k)).max()))
        rng = _rng(9, d)
        m = presets.gue(d, rng)
        m = m - np.trace(m) / d * np.eye(d)
        err = float(np.abs(reconstruct(expand(m, basis), basis) - m).max())
        worst_round = max(worst_round, err)
    ok = worst_gram <= 1e-14 and worst_round <= 1e-12
    return ok, f"max Gram deviation = {worst_gram:.2e}, max round-trip = {worst_round:.2e}"


def criterion_special_functions():
    """Shape of f_D plus the sign/identity properties of upsilon, zeta, G."""
    half = np.linspace(0.0, 1.0, 5001)
    grid = np.concatenate([-half[::-1], half[1:]])  # sign-symmetric 10^4-point grid
    f = f_d(grid)
    problems = []
    if f_d(0.0) != 1.0 or f[0] != 0.0 or f[-1] != 0.0:
        problems.append("endpoint/origin values")
    if float(np.abs(f_d(half) - f_d(-half)).max()) > 1e-15:
        problems.append("evenness")
    if f.min() < 0.0 or f.max() > 1.0 + 1e-15:
        problems.append("range [0, 1]")
    interior = grid[1:-1]
    ups = 1.0 / f_d(interior)
    if ups.min() < 1.0 - 1e-12:
        problems.append("upsilon >= 1")
    rng = _rng(10)
    eta = rng.uniform(-0.999, 0.999, size=10000)
    inv_kappa = -rng.uniform(0.0, 1.0, size=10000)
    zvals = zeta(eta, inv_kappa)
    if zvals.min() < 0.0:
        problems.append("zeta >= 0")
    r1 = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=20000))
    r2 = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=20000))
    keep = np.abs(np.log(r1 / r2)) >= 1e-3
    r1, r2 = r1[keep][:10000], r2[keep][:10000]
    product_form = g_func(r1, r2)
    first_form = 1.0 - (cal_f(r1, 1.0) - cal_f(r2, 1.0)) / (r1 - r2) * np.log(r1)
    gap = float(np.abs(product_form - first_form).max())
    if product_form.min() < 0.0:
        problems.append("G >= 0")
    if gap > 1e-10:
        problems.append(f"G forms differ by {gap:.2e}")
    return not problems, "; ".join(problems) if problems else f"G form gap = {gap:.2e}"


_TWO_LEVEL_CONFIG = {
    "dimension": 2,
    "hamiltonian": {"preset": "diag", "values": [0.0, 1.0]},
    "coupling_q": {"preset": "pauli_x"},
    "beta": 1.0,
    "gamma_e": 0.1,
}


def criterion_cli_determinism():
    """Repeated `jacobian` runs produce byte-identical CSV files."""
    import contextlib
    import io

    from .cli import run_command

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cfg_path = tmp / "two_level.json"
        cfg_path.write_text(json.dumps(_TWO_LEVEL_CONFIG), encoding="utf-8")
        outputs = []
        codes = []
        for run in ("run1", "run2"):
            out = tmp / run
            with contextlib.redirect_stdout(io.StringIO()):
                codes.append(run_command(["jacobian", str(cfg_path), "--out", str(out)]))
            outputs.append(
                {
                    name: (out / name).read_bytes()
                    for name in ("jacobian.csv", "spectrum.csv", "diagonals.csv")
                }
            )
        identical = outputs[0] == outputs[1]
        ok = codes == [0, 0] and identical
        return ok, f"exit codes {codes}, byte-identical = {identical}"


RUNTIME_LIMITS = {
    "fixed-point-residual": 10.0,
    "a-rho-oracle-equivalence": 5.0,
    "jacobian-route-agreement": 30.0,
    "closed-form-diagonals": 30.0,
    "free-energy-descent": 60.0,
}

CRITERIA = (
    ("fixed-point-residual", criterion_fixed_point_residual),
    ("a-rho-oracle-equivalence", criterion_a_rho_oracle),
    ("jacobian-route-agreement", criterion_jacobian_routes),
    ("closed-form-diagonals", criterion_closed_form_diagonals),
    ("spectral-stability", criterion_spectral_stability),
    ("free-energy-descent", criterion_free_energy_descent),
    ("conservation-positivity", criterion_conservation_positivity),
    ("equilibrium-convergence", criterion_equilibrium_convergence),
    ("basis-correctness", criterion_basis_correctness),
    ("special-function-properties", criterion_special_functions),
    ("cli-determinism", criterion_cli_determinism),
)


def run_check(name):
    func = dict(CRITERIA)[name]
    start = time.perf_counter()
    try:
        passed, detail = func()
    except Exception as exc:  # a crashed criterion is a failed criterion
        passed, detail = False, f"raised {exc!r}"
    elapsed = time.perf_counter() - start
    limit = RUNTIME_LIMITS.get(name)
    if limit is not None and elapsed > limit:
        passed = False
        detail += f" [runtime {elapsed:.1f}s exceeded {limit:.0f}s budget]"
    return CheckResult(name, passed, detail, elapsed)


def run_all(quiet=False):
    """Run every criterion, printing one PASS/FAIL line each."""
    results = []
    for name, _ in CRITERIA:
        result = run_check(name)
        results.append(result)
        if not quiet:
            status = "PASS" if result.passed else "FAIL"
            print(f"{status}  {name}  ({result.elapsed:.2f}s)  {result.detail}")
    return results
