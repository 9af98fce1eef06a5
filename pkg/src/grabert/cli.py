"""Command-line front end: simulate, jacobian, scan, selftest.

Exit codes: 0 success (verdict stable/marginal for ``jacobian``), 1 JSON
parse error, 2 config validation error, 3 positivity breach during
integration, 4 unstable verdict, 5 Jacobian route discrepancy above
tolerance, 6 internal error (also: any selftest failure).

All numeric CSV output uses the shortest round-trip decimal representation
of the underlying binary64 value, so repeated runs of the same config are
byte-identical and files reload losslessly.
"""

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ScenarioConfig,
    SweepConfig,
    build_initial_state,
    build_system,
    parse_config,
    resolve_t_final,
    sweep_point,
    with_seed,
)
from .dynamics import integrate
from .errors import GrabertError, ParseError, PositivityBreach, ValidationError
from .stability import stability_report

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_POSITIVITY = 3
EXIT_UNSTABLE = 4
EXIT_ROUTE_MISMATCH = 5
EXIT_INTERNAL = 6


def _fmt(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _load_config(path):
    with open(path, "rb") as fh:
        return parse_config(fh.read())


def _out_dir(cfg, override):
    directory = Path(override) if override else Path(cfg.outputs.directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _write_trajectory(traj, cfg, directory):
    names = [n for n in ("purity", "entropy", "free_energy", "c_norm", "trace_error", "min_eig")
             if n in cfg.outputs.observables]
    cols = traj.columns()
    header = ["t"] + names
    rows = [
        [_fmt(cols[name][i]) for name in header]
        for i in range(len(traj))
    ]
    _write_csv(directory / "trajectory.csv", header, rows)
    if cfg.outputs.dump_states and traj.states:
        states = np.stack([s.matrix for s in traj.states])
        np.savez(directory / "states.npz", times=traj.times, states=states)


def _cmd_simulate(args):
    cfg = _load_config(args.config)
    if not isinstance(cfg, ScenarioConfig):
        raise ValidationError([("<root>", "simulate expects a scenario config, not a sweep")])
    if args.seed is not None:
        cfg = with_seed(cfg, args.seed)
    spec = build_system(cfg)
    rho0 = build_initial_state(cfg, spec)
    directory = _out_dir(cfg, args.out)
    try:
        traj = integrate(
            rho0,
            spec,
            t_final=resolve_t_final(cfg),
            dt=cfg.integrator.dt,
            method=cfg.integrator.method,
            mode=cfg.mode,
            beta_prime=cfg.beta_prime,
        )
    except PositivityBreach as breach:
        if breach.trajectory is not None:
            _write_trajectory(breach.trajectory, cfg, directory)
        print(f"positivity breach: {breach}", file=sys.stderr)
        return EXIT_POSITIVITY
    _write_trajectory(traj, cfg, directory)
    return EXIT_OK


def _write_jacobian_outputs(report, directory):
    labels = [str(lab) for lab in report.labels]
    header = ["label"] + labels
    rows = [
        [labels[a]] + [_fmt(v) for v in report.j_total[a]]
        for a in range(len(labels))
    ]
    _write_csv(directory / "jacobian.csv", header, rows)
    _write_csv(
        directory / "spectrum.csv",
        ["re", "im"],
        [[_fmt(ev.real), _fmt(ev.imag)] for ev in report.eigenvalues],
    )
    fd_diag = (
        -np.diag(report.j_fd)
        if report.j_fd is not None
        else np.diag(report.j_a + report.j_b)
    )
    _write_csv(
        directory / "diagonals.csv",
        ["label", "closed_form", "fd_value", "abs_diff"],
        [
            [labels[a], _fmt(report.diag_closed_form[a]), _fmt(fd_diag[a]),
             _fmt(abs(report.diag_closed_form[a] - fd_diag[a]))]
            for a in range(len(labels))
        ],
    )


def _cmd_jacobian(args):
    cfg = _load_config(args.config)
    if not isinstance(cfg, ScenarioConfig):
        raise ValidationError([("<root>", "jacobian expects a scenario config, not a sweep")])
    if args.seed is not None:
        cfg = with_seed(cfg, args.seed)
    spec = build_system(cfg)
    directory = _out_dir(cfg, args.out)
    report = stability_report(spec, include_fd=True)
    _write_jacobian_outputs(report, directory)
    print(
        f"verdict={report.verdict} max_real_part={_fmt(report.max_real_part)} "
        f"min_diagonal={_fmt(report.min_diagonal)}"
    )
    mismatch = max(
        report.route_discrepancies["analytic_vs_fd"],
        report.route_discrepancies["closed_form_vs_fd_diag"],
    )
    if mismatch > args.tol:
        print(
            f"route discrepancy {mismatch:.3e} exceeds tolerance {args.tol:g}",
            file=sys.stderr,
        )
        return EXIT_ROUTE_MISMATCH
    if report.verdict == "unstable":
        return EXIT_UNSTABLE
    return EXIT_OK


def _cmd_scan(args):
    cfg = _load_config(args.config)
    if not isinstance(cfg, SweepConfig):
        raise ValidationError([("<root>", "scan expects a sweep config")])
    base = cfg
    if args.seed is not None:
        base = SweepConfig(
            base=with_seed(cfg.base, args.seed),
            axis=cfg.axis,
            values=cfg.values,
            task=cfg.task,
        )
    directory = _out_dir(base.base, args.out)
    rows = []
    if base.task == "stability":
        header = ["value", "max_real_part", "min_diag", "verdict"]
        for value in base.values:
            point = sweep_point(base, value)
            report = stability_report(build_system(point), include_fd=False)
            rows.append(
                [_fmt(value), _fmt(report.max_real_part), _fmt(report.min_diagonal),
                 report.verdict]
            )
    else:
        header = ["value", "final_free_energy", "final_c_norm", "final_purity", "status"]
        for value in base.values:
            point = sweep_point(base, value)
            spec = build_system(point)
            rho0 = build_initial_state(point, spec)
            try:
                traj = integrate(
                    rho0,
                    spec,
                    t_final=resolve_t_final(point),
                    dt=point.integrator.dt,
                    method=point.integrator.method,
                    mode=point.mode,
                    beta_prime=point.beta_prime,
                    record_states=False,
                )
                rows.append(
                    [_fmt(value), _fmt(traj.free_energy[-1]), _fmt(traj.c_norm[-1]),
                     _fmt(traj.purity[-1]), "ok"]
                )
            except PositivityBreach:
                rows.append([_fmt(value), "nan", "nan", "nan", "positivity_breach"])
    _write_csv(directory / "scan.csv", header, rows)
    return EXIT_OK


def _cmd_selftest(args):
    from .selftest import run_all

    results = run_all()
    return EXIT_OK if all(r.passed for r in results) else EXIT_INTERNAL


def run_command(argv=None):
    """Dispatch a CLI invocation; returns the process exit code."""
    parser = argparse.ArgumentParser(
        prog="grabert",
        description="Nonlinear thermal master-equation simulator and "
        "fixed-point stability certifier.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate a scenario, write trajectory.csv")
    p_sim.add_argument("config")
    p_sim.add_argument("--out", default=None, help="output directory override")
    p_sim.add_argument("--seed", type=int, default=None, help="override preset seeds")
    p_sim.set_defaults(func=_cmd_simulate)

    p_jac = sub.add_parser(
        "jacobian", help="stability analysis; writes jacobian/spectrum/diagonals CSVs"
    )
    p_jac.add_argument("config")
    p_jac.add_argument("--out", default=None)
    p_jac.add_argument("--seed", type=int, default=None)
    p_jac.add_argument(
        "--tol", type=float, default=1e-5, help="route-discrepancy tolerance"
    )
    p_jac.set_defaults(func=_cmd_jacobian)

    p_scan = sub.add_parser("scan", help="run a sweep, write scan.csv")
    p_scan.add_argument("config")
    p_scan.add_argument("--out", default=None)
    p_scan.add_argument("--seed", type=int, default=None)
    p_scan.set_defaults(func=_cmd_scan)

    p_self = sub.add_parser("selftest", help="run the bundled verification suite")
    p_self.set_defaults(func=_cmd_selftest)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors / --version
        code = exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
        return code
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        for path, reason in exc.errors:
            print(f"invalid config at {path}: {reason}", file=sys.stderr)
        return EXIT_VALIDATION
    except PositivityBreach as exc:
        print(f"positivity breach: {exc}", file=sys.stderr)
        return EXIT_POSITIVITY
    except FileNotFoundError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GrabertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
