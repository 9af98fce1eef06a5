"""Config parsing, validation paths, and sweep materialization."""

import json

import numpy as np
import pytest

from grabert import ParseError, ValidationError, parse_config
from grabert.config import (
    ScenarioConfig,
    SweepConfig,
    build_initial_state,
    build_system,
    resolve_t_final,
    sweep_point,
    with_seed,
)

MINIMAL = {
    "dimension": 2,
    "hamiltonian": {"preset": "diag", "values": [0, 1]},
    "coupling_q": {"preset": "pauli_x"},
    "beta": 1.0,
    "gamma_e": 0.1,
}


def dense(matrix):
    return [[[z.real, z.imag] for z in row] for row in np.asarray(matrix, complex)]


def test_minimal_two_level():
    cfg = parse_config(json.dumps(MINIMAL))
    assert isinstance(cfg, ScenarioConfig)
    spec = build_system(cfg)
    np.testing.assert_array_equal(spec.hamiltonian, np.diag([0.0, 1.0]))
    np.testing.assert_array_equal(spec.coupling, [[0, 1], [1, 0]])
    assert cfg.mode == "nonlinear"
    assert resolve_t_final(cfg) == pytest.approx(100.0)


def test_parse_error_has_location():
    with pytest.raises(ParseError) as excinfo:
        parse_config(b'{"dimension": 2,,}')
    assert excinfo.value.lineno == 1
    assert excinfo.value.colno is not None


def test_negative_beta_flagged_at_path():
    bad = dict(MINIMAL, beta=-1.0)
    with pytest.raises(ValidationError) as excinfo:
        parse_config(json.dumps(bad))
    assert any(path == "beta" for path, _ in excinfo.value.errors)


def test_non_hermitian_dense_matrix_names_pair():
    m = [[[0.0, 0.0], [1.0, 0.5]], [[1.0, 0.5], [0.0, 0.0]]]  # (0,1) vs (1,0) clash
    bad = dict(MINIMAL, hamiltonian=m)
    with pytest.raises(ValidationError) as excinfo:
        parse_config(json.dumps(bad))
    message = str(excinfo.value)
    assert "hamiltonian" in message and "(0,1)" in message


def test_dense_matrix_roundtrip(rng):
    from conftest import random_hermitian

    h = random_hermitian(3, rng)
    q = random_hermitian(3, rng)
    payload = dict(
        MINIMAL,
        dimension=3,
        hamiltonian=dense(h),
        coupling_q=dense(q),
        initial_state=dense(np.eye(3) / 3),
    )
    cfg = parse_config(json.dumps(payload))
    spec = build_system(cfg)
    np.testing.assert_allclose(spec.hamiltonian, h, atol=1e-15)
    state = build_initial_state(cfg, spec)
    np.testing.assert_allclose(state.matrix, np.eye(3) / 3)


def test_initial_state_presets():
    for preset in ("thermal", "maximally_mixed", "pure:1", "random:7"):
        cfg = parse_config(json.dumps(dict(MINIMAL, initial_state=preset)))
        spec = build_system(cfg)
        state = build_initial_state(cfg, spec)
        assert state.matrix.trace().real == pytest.approx(1.0, abs=1e-12)


def test_bad_initial_state_index():
    bad = dict(MINIMAL, initial_state="pure:5")
    with pytest.raises(ValidationError) as excinfo:
        parse_config(json.dumps(bad))
    assert any("initial_state" in path for path, _ in excinfo.value.errors)


def test_linear_mode_requires_beta_prime():
    with pytest.raises(ValidationError):
        parse_config(json.dumps(dict(MINIMAL, mode="linear")))
    cfg = parse_config(json.dumps(dict(MINIMAL, mode="linear", beta_prime=2.0)))
    assert cfg.beta_prime == 2.0
    with pytest.raises(ValidationError):
        parse_config(json.dumps(dict(MINIMAL, beta_prime=2.0)))  # nonlinear + beta_prime


def test_unknown_fields_and_bad_integrator():
    bad = dict(MINIMAL, typo_field=1, integrator={"method": "leapfrog"})
    with pytest.raises(ValidationError) as excinfo:
        parse_config(json.dumps(bad))
    paths = [path for path, _ in excinfo.value.errors]
    assert "typo_field" in paths
    assert "integrator.method" in paths


def test_preset_colon_seed():
    cfg = parse_config(
        json.dumps(dict(MINIMAL, hamiltonian={"preset": "random_gue:9"}))
    )
    assert cfg.hamiltonian.seed == 9
    other = parse_config(
        json.dumps(dict(MINIMAL, hamiltonian={"preset": "random_gue", "seed": 9}))
    )
    np.testing.assert_array_equal(
        build_system(cfg).hamiltonian, build_system(other).hamiltonian
    )


def test_with_seed_override():
    cfg = parse_config(
        json.dumps(
            dict(
                MINIMAL,
                hamiltonian={"preset": "random_gue", "seed": 1},
                initial_state="random:3",
            )
        )
    )
    reseeded = with_seed(cfg, 42)
    assert reseeded.hamiltonian.seed == 42
    assert reseeded.initial_state == "random:44"
    assert reseeded.coupling_q == cfg.coupling_q  # pauli preset untouched


class TestSweep:
    BASE = {
        "base": dict(
            MINIMAL,
            hamiltonian={"preset": "random_gue", "seed": 0},
            coupling_q={"preset": "ladder_q"},
        ),
        "axis": "beta",
        "values": [0.5, 1.0, 2.0],
        "task": "stability",
    }

    def test_valid_sweep(self):
        sweep = parse_config(json.dumps(self.BASE))
        assert isinstance(sweep, SweepConfig)
        point = sweep_point(sweep, 2.0)
        assert point.beta == 2.0

    def test_empty_values(self):
        bad = dict(self.BASE, values=[])
        with pytest.raises(ValidationError) as excinfo:
            parse_config(json.dumps(bad))
        assert any(path == "values" for path, _ in excinfo.value.errors)

    def test_dimension_sweep_needs_generic_presets(self):
        bad = dict(self.BASE, axis="dimension", values=[2, 3, 4])
        bad["base"] = dict(MINIMAL)  # pauli_x is dimension-locked
        with pytest.raises(ValidationError) as excinfo:
            parse_config(json.dumps(bad))
        assert any("coupling_q" in path for path, _ in excinfo.value.errors)

    def test_dimension_sweep_materializes(self):
        ok = dict(self.BASE, axis="dimension", values=[2, 4])
        sweep = parse_config(json.dumps(ok))
        for value in (2, 4):
            spec = build_system(sweep_point(sweep, value))
            assert spec.dim == value

    def test_seed_sweep(self):
        ok = dict(self.BASE, axis="seed", values=[1, 2])
        sweep = parse_config(json.dumps(ok))
        s1 = build_system(sweep_point(sweep, 1))
        s2 = build_system(sweep_point(sweep, 2))
        assert np.abs(s1.hamiltonian - s2.hamiltonian).max() > 1e-3

    def test_bad_axis_and_task(self):
        bad = dict(self.BASE, axis="temperature", task="plot")
        with pytest.raises(ValidationError) as excinfo:
            parse_config(json.dumps(bad))
        paths = [path for path, _ in excinfo.value.errors]
        assert "axis" in paths and "task" in paths

    def test_base_errors_prefixed(self):
        bad = dict(self.BASE)
        bad["base"] = dict(bad["base"], gamma_e=-2.0)
        with pytest.raises(ValidationError) as excinfo:
            parse_config(json.dumps(bad))
        assert any(path == "base.gamma_e" for path, _ in excinfo.value.errors)
