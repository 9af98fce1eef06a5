"""JSON scenario/sweep configuration: schema, validation, materialization.

One JSON document describes either a single scenario (system + initial
state + integrator + outputs) or a sweep (a base scenario plus an axis and
a list of values).  Complex numbers are encoded as [re, im] pairs, so a
dense matrix is a [row][col][re, im] nested list.  Matrices may instead be
given as presets ({"preset": "diag", "values": [...]}, "pauli_x",
"random_gue" with a seed, "ladder_q"), which keeps sweeps over dimension
or seed well-defined.
"""

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import presets
from .dynamics import DensityMatrix, SystemSpec
from .errors import GrabertError, ParseError, ValidationError

MATRIX_PRESETS = ("diag", "pauli_x", "pauli_y", "pauli_z", "random_gue", "ladder_q")
DIMENSION_GENERIC_PRESETS = ("random_gue", "ladder_q")
STATE_PRESETS = ("thermal", "maximally_mixed")  # plus pure:k and random:seed
OBSERVABLE_NAMES = (
    "purity",
    "entropy",
    "free_energy",
    "c_norm",
    "trace_error",
    "min_eig",
)
SWEEP_AXES = ("beta", "gamma_e", "dimension", "seed")


@dataclass(frozen=True)
class MatrixSpec:
    """A matrix given either as a preset (name + params) or dense payload."""

    preset: Optional[str] = None
    values: Optional[tuple] = None  # diag entries
    seed: Optional[int] = None  # random_gue
    dense: Optional[np.ndarray] = None

    def materialize(self, dim):
        if self.dense is not None:
            return self.dense
        if self.preset == "diag":
            return np.diag(np.asarray(self.values, dtype=float)).astype(complex)
        if self.preset in ("pauli_x", "pauli_y", "pauli_z"):
            return presets.PAULI[self.preset]
        if self.preset == "random_gue":
            return presets.gue(dim, self.seed if self.seed is not None else 0)
        if self.preset == "ladder_q":
            return presets.ladder(dim)
        raise GrabertError(f"unmaterializable matrix spec {self!r}")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: Optional[float] = None  # None -> default_timestep(spec)
    t_final: Optional[float] = None  # None -> 10/gamma_e


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "."
    observables: tuple = OBSERVABLE_NAMES
    dump_states: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    dimension: int
    hamiltonian: MatrixSpec
    coupling_q: MatrixSpec
    beta: float
    gamma_e: float
    hbar: float = 1.0
    mode: str = "nonlinear"
    beta_prime: Optional[float] = None
    initial_state: object = "thermal"  # preset string or ndarray
    integrator: IntegratorConfig = IntegratorConfig()
    outputs: OutputConfig = OutputConfig()


@dataclass(frozen=True)
class SweepConfig:
    base: ScenarioConfig
    axis: str
    values: tuple
    task: str  # "stability" | "simulate"


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _decode_complex_matrix(payload, path, errors):
    arr = None
    try:
        arr = np.asarray(payload, dtype=float)
    except (ValueError, TypeError):
        pass
    if arr is None or arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        errors.append((path, "dense matrix must be a [row][col][re, im] nested list"))
        return None
    if not np.isfinite(arr).all():
        errors.append((path, "dense matrix contains non-finite entries"))
        return None
    return arr[..., 0] + 1j * arr[..., 1]


def _check_hermitian_payload(m, path, errors):
    dev = np.abs(m - m.conj().T)
    if dev.size and dev.max() > 1e-12 * max(1.0, np.abs(m).max()):
        k, l = np.unravel_index(int(dev.argmax()), dev.shape)
        errors.append(
            (path, f"matrix is not Hermitian: entries ({k},{l}) and ({l},{k}) mismatch")
        )
        return False
    return True


def _validate_matrix(payload, dim, path, errors):
    if isinstance(payload, dict):
        preset = payload.get("preset")
        if not isinstance(preset, str):
            errors.append((path + ".preset", "preset name (string) is required"))
            return None
        seed = payload.get("seed")
        if ":" in preset:
            preset, _, tail = preset.partition(":")
            try:
                seed = int(tail)
            except ValueError:
                errors.append((path + ".preset", f"bad seed suffix {tail!r}"))
                return None
        if preset not in MATRIX_PRESETS:
            errors.append((path + ".preset", f"unknown preset {preset!r}"))
            return None
        if preset == "diag":
            values = payload.get("values")
            if (
                not isinstance(values, list)
                or len(values) != dim
                or not all(_is_number(v) for v in values)
            ):
                errors.append(
                    (path + ".values", f"diag preset needs {dim} finite numbers")
                )
                return None
            return MatrixSpec(preset="diag", values=tuple(float(v) for v in values))
        if preset in ("pauli_x", "pauli_y", "pauli_z"):
            if dim != 2:
                errors.append((path, f"{preset} preset requires dimension 2"))
                return None
            return MatrixSpec(preset=preset)
        if preset == "random_gue":
            if seed is None:
                seed = 0
            if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
                errors.append((path + ".seed", "seed must be a non-negative integer"))
                return None
            return MatrixSpec(preset="random_gue", seed=seed)
        return MatrixSpec(preset="ladder_q")
    if isinstance(payload, list):
        m = _decode_complex_matrix(payload, path, errors)
        if m is None:
            return None
        if m.shape != (dim, dim):
            errors.append((path, f"matrix shape {m.shape} does not match dimension {dim}"))
            return None
        if not _check_hermitian_payload(m, path, errors):
            return None
        return MatrixSpec(dense=m)
    errors.append((path, "expected a preset object or a dense matrix"))
    return None


def _validate_initial_state(payload, dim, path, errors):
    if isinstance(payload, str):
        if payload in STATE_PRESETS:
            return payload
        if payload.startswith("pure:"):
            try:
                k = int(payload.split(":", 1)[1])
            except ValueError:
                errors.append((path, f"bad pure-state index in {payload!r}"))
                return None
            if not 0 <= k < dim:
                errors.append((path, f"pure-state index {k} outside [0, {dim})"))
                return None
            return payload
        if payload.startswith("random:"):
            try:
                int(payload.split(":", 1)[1])
            except ValueError:
                errors.append((path, f"bad seed in {payload!r}"))
                return None
            return payload
        errors.append((path, f"unknown initial-state preset {payload!r}"))
        return None
    if isinstance(payload, list):
        m = _decode_complex_matrix(payload, path, errors)
        if m is None:
            return None
        if m.shape != (dim, dim):
            errors.append((path, f"state shape {m.shape} does not match dimension {dim}"))
            return None
        try:
            DensityMatrix(m)
        except GrabertError as exc:
            errors.append((path, f"not a valid density matrix: {exc}"))
            return None
        return m
    errors.append((path, "expected a preset string or a dense matrix"))
    return None


def _require_positive(data, key, errors, prefix, default=None, required=True):
    if key not in data or data[key] is None:
        if required and default is None:
            errors.append((prefix + key, "required positive number is missing"))
        return default
    val = data[key]
    if not _is_number(val) or val <= 0:
        errors.append((prefix + key, f"must be a finite positive number, got {val!r}"))
        return default
    return float(val)


def _validate_scenario(data, errors, prefix=""):
    if not isinstance(data, dict):
        errors.append((prefix.rstrip(".") or "<root>", "expected a JSON object"))
        return None

    dim = data.get("dimension")
    if not isinstance(dim, int) or isinstance(dim, bool) or not 2 <= dim <= 64:
        errors.append((prefix + "dimension", f"must be an integer in [2, 64], got {dim!r}"))
        return None

    ham = None
    if "hamiltonian" not in data:
        errors.append((prefix + "hamiltonian", "required field is missing"))
    else:
        ham = _validate_matrix(data["hamiltonian"], dim, prefix + "hamiltonian", errors)
    coup = None
    if "coupling_q" not in data:
        errors.append((prefix + "coupling_q", "required field is missing"))
    else:
        coup = _validate_matrix(data["coupling_q"], dim, prefix + "coupling_q", errors)

    beta = _require_positive(data, "beta", errors, prefix)
    gamma = _require_positive(data, "gamma_e", errors, prefix)
    hbar = _require_positive(data, "hbar", errors, prefix, default=1.0, required=False)

    mode = data.get("mode", "nonlinear")
    beta_prime = None
    if mode not in ("nonlinear", "linear"):
        errors.append((prefix + "mode", f"must be 'nonlinear' or 'linear', got {mode!r}"))
    elif mode == "linear":
        beta_prime = _require_positive(data, "beta_prime", errors, prefix)
    elif data.get("beta_prime") is not None:
        errors.append((prefix + "beta_prime", "only meaningful in linear mode"))

    initial = "thermal"
    if "initial_state" in data:
        initial = _validate_initial_state(
            data["initial_state"], dim, prefix + "initial_state", errors
        )

    integ = IntegratorConfig()
    if "integrator" in data:
        block = data["integrator"]
        if not isinstance(block, dict):
            errors.append((prefix + "integrator", "expected an object"))
        else:
            method = block.get("method", "rk4")
            if method not in ("rk4", "rk45"):
                errors.append(
                    (prefix + "integrator.method", f"must be 'rk4' or 'rk45', got {method!r}")
                )
                method = "rk4"
            dt = None
            if block.get("dt") is not None:
                dt = _require_positive(block, "dt", errors, prefix + "integrator.")
            t_final = None
            if block.get("t_final") is not None:
                t_final = _require_positive(block, "t_final", errors, prefix + "integrator.")
            integ = IntegratorConfig(method=method, dt=dt, t_final=t_final)

    outputs = OutputConfig()
    if "outputs" in data:
        block = data["outputs"]
        if not isinstance(block, dict):
            errors.append((prefix + "outputs", "expected an object"))
        else:
            directory = block.get("directory", ".")
            if not isinstance(directory, str):
                errors.append((prefix + "outputs.directory", "must be a string"))
                directory = "."
            obs = block.get("observables")
            if obs is None:
                obs = OBSERVABLE_NAMES
            elif not isinstance(obs, list) or not set(obs) <= set(OBSERVABLE_NAMES):
                errors.append(
                    (
                        prefix + "outputs.observables",
                        f"must be a subset of {list(OBSERVABLE_NAMES)}",
                    )
                )
                obs = OBSERVABLE_NAMES
            dump = block.get("dump_states", False)
            if not isinstance(dump, bool):
                errors.append((prefix + "outputs.dump_states", "must be a boolean"))
                dump = False
            outputs = OutputConfig(directory=directory, observables=tuple(obs), dump_states=dump)

    known = {
        "dimension",
        "hamiltonian",
        "coupling_q",
        "beta",
        "gamma_e",
        "hbar",
        "mode",
        "beta_prime",
        "initial_state",
        "integrator",
        "outputs",
    }
    for key in data:
        if key not in known:
            errors.append((prefix + key, "unknown field"))

    if errors or ham is None or coup is None or beta is None or gamma is None:
        return None
    cfg = ScenarioConfig(
        dimension=dim,
        hamiltonian=ham,
        coupling_q=coup,
        beta=beta,
        gamma_e=gamma,
        hbar=hbar,
        mode=mode,
        beta_prime=beta_prime,
        initial_state=initial,
        integrator=integ,
        outputs=outputs,
    )
    try:
        build_system(cfg)
    except GrabertError as exc:
        errors.append((prefix.rstrip(".") or "<root>", f"system construction failed: {exc}"))
        return None
    return cfg


def _validate_sweep(data, errors):
    base_payload = data.get("base")
    base = _validate_scenario(base_payload, errors, prefix="base.")
    axis = data.get("axis")
    if axis not in SWEEP_AXES:
        errors.append(("axis", f"must be one of {list(SWEEP_AXES)}, got {axis!r}"))
    values = data.get("values")
    if not isinstance(values, list) or not values:
        errors.append(("values", "must be a non-empty list"))
        values = []
    elif axis in ("dimension", "seed"):
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in values):
            errors.append(("values", f"{axis} sweep values must be integers"))
        elif axis == "dimension" and not all(2 <= v <= 64 for v in values):
            errors.append(("values", "dimensions must lie in [2, 64]"))
    else:
        if not all(_is_number(v) and v > 0 for v in values):
            errors.append(("values", f"{axis} sweep values must be positive numbers"))
    task = data.get("task")
    if task not in ("stability", "simulate"):
        errors.append(("task", f"must be 'stability' or 'simulate', got {task!r}"))
    if base is not None and axis == "dimension":
        for name, spec in (("hamiltonian", base.hamiltonian), ("coupling_q", base.coupling_q)):
            if spec.dense is not None or spec.preset not in DIMENSION_GENERIC_PRESETS:
                errors.append(
                    (
                        "base." + name,
                        "dimension sweeps need a dimension-generic preset "
                        f"({'/'.join(DIMENSION_GENERIC_PRESETS)})",
                    )
                )
        if not isinstance(base.initial_state, str):
            errors.append(("base.initial_state", "dimension sweeps need a preset state"))
    for key in data:
        if key not in {"base", "axis", "values", "task"}:
            errors.append((key, "unknown field"))
    if errors or base is None:
        return None
    return SweepConfig(base=base, axis=axis, values=tuple(values), task=task)


def parse_config(text):
    """Parse and validate a JSON config; returns ScenarioConfig or SweepConfig.

    Raises ParseError for malformed JSON (with line/column) and
    ValidationError carrying every field-path-qualified problem found.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            lineno=exc.lineno,
            colno=exc.colno,
        ) from exc
    errors = []
    if isinstance(data, dict) and ("base" in data or "axis" in data or "task" in data):
        cfg = _validate_sweep(data, errors)
    else:
        cfg = _validate_scenario(data, errors)
    if errors:
        raise ValidationError(errors)
    assert cfg is not None
    return cfg


def build_system(cfg):
    """Materialize the SystemSpec of a scenario."""
    return SystemSpec(
        dim=cfg.dimension,
        hamiltonian=cfg.hamiltonian.materialize(cfg.dimension),
        coupling=cfg.coupling_q.materialize(cfg.dimension),
        beta=cfg.beta,
        gamma_e=cfg.gamma_e,
        hbar=cfg.hbar,
    )


def build_initial_state(cfg, spec):
    """Materialize the initial DensityMatrix of a scenario."""
    if isinstance(cfg.initial_state, str):
        return presets.initial_state(cfg.initial_state, spec)
    return DensityMatrix(cfg.initial_state)


def resolve_t_final(cfg):
    if cfg.integrator.t_final is not None:
        return cfg.integrator.t_final
    return 10.0 / cfg.gamma_e


def with_seed(cfg, seed):
    """Override every seedable preset (random_gue matrices, random: state)."""
    updates = {}
    if cfg.hamiltonian.preset == "random_gue":
        updates["hamiltonian"] = dataclasses.replace(cfg.hamiltonian, seed=seed)
    if cfg.coupling_q.preset == "random_gue":
        updates["coupling_q"] = dataclasses.replace(cfg.coupling_q, seed=seed + 1)
    if isinstance(cfg.initial_state, str) and cfg.initial_state.startswith("random:"):
        updates["initial_state"] = f"random:{seed + 2}"
    return dataclasses.replace(cfg, **updates) if updates else cfg


def sweep_point(sweep, value):
    """The scenario at one sweep value."""
    base = sweep.base
    if sweep.axis == "beta":
        return dataclasses.replace(base, beta=float(value))
    if sweep.axis == "gamma_e":
        return dataclasses.replace(base, gamma_e=float(value))
    if sweep.axis == "dimension":
        return dataclasses.replace(base, dimension=int(value))
    if sweep.axis == "seed":
        return with_seed(base, int(value))
    raise GrabertError(f"unknown sweep axis {sweep.axis!r}")
