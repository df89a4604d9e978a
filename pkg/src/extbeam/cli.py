"""Command-line front end: reproducible experiment runs emitting CSV + manifest.

Every file-producing command writes a JSON manifest next to its outputs
recording the exact sub-command argv, the model parameters, the integrator
knobs and the seed, so `extbeam rerun <manifest>` reproduces the same CSV
bytes.  Numeric CSV fields carry 17 significant digits.

Exit codes: 0 success, 2 usage/validation error, 3 numeric failure.
The only environment override is EXTBEAM_THREADS (worker threads for
grid/ensemble evaluation).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .csvio import fmt, write_csv_atomic, write_json_atomic
from .dynamics import (IntegratorConfig, IntegrationError, ModalState,
                       basin_classify, decay_rate, integrate, random_state,
                       write_energy_csv, write_trajectory_csv)
from .modal import BeamParams, ExtbeamError
from .stability import (n_k_index, stability_map, stability_rows_at_k,
                        write_stability_map_csv)
from .statics import (bifurcation_sweep, enumerate_stationary, is_resonant,
                      solve_static_forced, stationary_rows, write_bifurcation_csv,
                      STATIONARY_HEADER)

USAGE_ERROR = 2
NUMERIC_ERROR = 3


def thread_count() -> int:
    raw = os.environ.get("EXTBEAM_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parse_floats(text: str):
    if not text.strip():
        return []
    return [float(tok) for tok in text.split(",")]


def _parse_range(text: str):
    """min:max:steps range specifier used by the map command."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX:STEPS, got {text!r}")
    return float(parts[0]), float(parts[1]), int(parts[2])


def _beam_params(args) -> BeamParams:
    if getattr(args, "load", None) is not None:
        if args.beta is not None:
            raise SystemExit(_usage("--beta and --load are mutually exclusive"))
        beta = -args.load
    elif args.beta is not None:
        beta = args.beta
    else:
        raise SystemExit(_usage("one of --beta or --load is required"))
    f_modes = tuple(_parse_floats(getattr(args, "f_modes", "") or ""))
    return BeamParams(beta=beta, k=args.k, delta=getattr(args, "delta", 1.0),
                      f_modes=f_modes)


def _usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return USAGE_ERROR


def _manifest(args, command: str, params: BeamParams | None, extra: dict) -> dict:
    payload = {
        "tool": "extbeam",
        "version": __version__,
        "command": command,
        "argv": list(args.raw_argv),
        "seed": getattr(args, "seed", None),
        "output_path": getattr(args, "out", None),
    }
    if params is not None:
        payload["params"] = {"beta": params.beta, "k": params.k,
                             "delta": params.delta, "f_modes": list(params.f_modes)}
    payload.update(extra)
    return payload


def _emit_manifest(path_prefix: str, manifest: dict) -> None:
    write_json_atomic(path_prefix + ".manifest.json", manifest)


def _integrator_config(args) -> IntegratorConfig:
    return IntegratorConfig(
        t_end=args.t_end, rel_tol=args.rel_tol, abs_tol=args.abs_tol,
        sample_interval=args.sample_interval, eps_phi=args.eps_phi,
        max_step=args.max_step)


def _initial_state(args, n_modes: int) -> ModalState:
    if args.random:
        if args.seed is None:
            raise SystemExit(_usage("--random requires --seed"))
        return random_state(args.energy, n_modes, args.seed)
    a = _parse_floats(args.a or "")
    v = _parse_floats(args.v or "")
    if not a and not v:
        raise SystemExit(_usage("initial data required: --a/--v or --random"))
    size = max(len(a), len(v), 1)
    if size > n_modes:
        raise SystemExit(_usage(f"initial data has {size} modes but --n-modes "
                                f"is {n_modes}"))
    av = np.zeros(n_modes)
    vv = np.zeros(n_modes)
    av[:len(a)] = a
    vv[:len(v)] = v
    return ModalState(t=0.0, a=av, v=vv)


def _add_param_flags(p: argparse.ArgumentParser, with_load: bool = True):
    p.add_argument("--beta", type=float, default=None,
                   help="axial coefficient (negative = compression)")
    if with_load:
        p.add_argument("--load", type=float, default=None,
                       help="axial load P; equivalent to --beta=-P")
    p.add_argument("--k", type=float, required=True, help="foundation stiffness")
    p.add_argument("--delta", type=float, default=1.0, help="damping constant")
    p.add_argument("--f-modes", default="", help="comma-separated load coefficients")


def _add_sim_flags(p: argparse.ArgumentParser):
    p.add_argument("--a", default="", help="comma-separated initial amplitudes")
    p.add_argument("--v", default="", help="comma-separated initial velocities")
    p.add_argument("--random", action="store_true",
                   help="seeded random initial data on an energy sphere")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--energy", type=float, default=1.0,
                   help="energy of --random initial data")
    p.add_argument("--n-modes", type=int, default=16)
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--abs-tol", type=float, default=0.0)
    p.add_argument("--max-step", type=float, default=float("inf"))
    p.add_argument("--sample-interval", type=float, default=0.05)
    p.add_argument("--eps-phi", type=float, default=None)


def cmd_critical(args) -> int:
    if args.k < 0:
        return _usage(f"--k must be >= 0, got {args.k}")
    from .stability import bar_beta, beta_c
    report = {
        "k": args.k,
        "beta_c": beta_c(args.k),
        "bar_beta": bar_beta(args.k),
        "n_k": n_k_index(args.k),
        "resonant": is_resonant(args.k),
    }
    print(json.dumps(report, sort_keys=True))
    if args.out:
        write_json_atomic(args.out, report)
        _emit_manifest(args.out, _manifest(args, "critical", None, {"report": report}))
    return 0


def cmd_stationary(args) -> int:
    try:
        params = _beam_params(args)
    except (ValueError, ExtbeamError) as exc:
        return _usage(str(exc))
    stat_set = enumerate_stationary(params)
    if stat_set.kind == "ResonantContinuum":
        cont = stat_set.continuum
        payload = {"kind": stat_set.kind,
                   "ell": cont.ell, "n": cont.n, "mu": cont.mu,
                   "constraint_c": cont.constraint_c}
        print(json.dumps(payload, sort_keys=True))
        if args.out:
            write_json_atomic(args.out, payload)
            _emit_manifest(args.out, _manifest(args, "stationary", params, payload))
        return 0
    rows = stationary_rows(stat_set)
    if args.out:
        write_csv_atomic(args.out, STATIONARY_HEADER, rows)
        _emit_manifest(args.out, _manifest(args, "stationary", params,
                                           {"kind": stat_set.kind,
                                            "count": stat_set.count}))
    else:
        print(",".join(STATIONARY_HEADER))
        for row in rows:
            print(",".join(fmt(c) for c in row))
    return 0


def cmd_simulate(args) -> int:
    try:
        params = _beam_params(args)
        config = _integrator_config(args)
        initial = _initial_state(args, args.n_modes)
    except (ValueError, ExtbeamError) as exc:
        return _usage(str(exc))
    try:
        traj = integrate(initial, params, config)
    except IntegrationError as exc:
        manifest = _manifest(args, "simulate", params,
                             {"status": "failed", "error": str(exc),
                              "config": _config_dict(config)})
        _emit_manifest(args.out, manifest)
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_ERROR
    write_trajectory_csv(args.out + "_trajectory.csv", traj)
    write_energy_csv(args.out + "_energy.csv", traj)
    _emit_manifest(args.out, _manifest(args, "simulate", params,
                                       {"status": "ok",
                                        "config": _config_dict(config),
                                        "n_steps": traj.n_steps,
                                        "n_rejected": traj.n_rejected}))
    print(json.dumps({"samples": traj.n_samples, "n_steps": traj.n_steps,
                      "E_final": float(traj.E[-1])}, sort_keys=True))
    return 0


def cmd_decay(args) -> int:
    try:
        params = _beam_params(args)
        config = _integrator_config(args)
        initial = _initial_state(args, args.n_modes)
    except (ValueError, ExtbeamError) as exc:
        return _usage(str(exc))
    try:
        traj = integrate(initial, params, config)
        estimate = decay_rate(traj, window=args.window)
    except (IntegrationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_ERROR
    fit = {"rate": estimate.rate,
           "linear_fit_residual": estimate.linear_fit_residual,
           "underflow": estimate.underflow,
           "E_initial": float(traj.E[0]), "E_final": float(traj.E[-1])}
    write_energy_csv(args.out + "_energy.csv", traj)
    _emit_manifest(args.out, _manifest(args, "decay", params,
                                       {"config": _config_dict(config),
                                        "window": args.window, "fit": fit}))
    print(json.dumps(fit, sort_keys=True))
    return 0


def cmd_basin(args) -> int:
    try:
        params = _beam_params(args)
        config = _integrator_config(args)
        initial = _initial_state(args, args.n_modes)
        traj = integrate(initial, params, config)
        outcome = basin_classify(initial, params, config, trajectory=traj)
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_ERROR
    except (ValueError, ExtbeamError) as exc:
        return _usage(str(exc))
    settle = outcome.settle_time if np.isfinite(outcome.settle_time) else None
    payload = {"limit": outcome.limit, "mode": outcome.mode, "sign": outcome.sign,
               "settle_time": settle,
               "final_distance": outcome.final_distance}
    if args.out:
        write_trajectory_csv(args.out + "_trajectory.csv", traj)
        write_energy_csv(args.out + "_energy.csv", traj)
        _emit_manifest(args.out, _manifest(args, "basin", params,
                                           {"config": _config_dict(config),
                                            "outcome": payload}))
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_map(args) -> int:
    beta_min, beta_max, beta_steps = args.beta
    k_min, k_max, k_steps = args.k
    if beta_steps < 2 or k_steps < 2:
        return _usage("map grids need at least 2 steps per axis")
    if k_min < 0:
        return _usage("--k range must be >= 0")
    workers = thread_count()
    if workers > 1:
        ks = np.linspace(k_min, k_max, k_steps)
        betas = np.linspace(beta_min, beta_max, beta_steps)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(lambda k: stability_rows_at_k(float(k), betas), ks))
        rows = [row for col in columns for row in col]
    else:
        rows = stability_map((beta_min, beta_max), (k_min, k_max),
                             (k_steps, beta_steps))
    write_stability_map_csv(args.out, rows)
    _emit_manifest(args.out, _manifest(args, "map", None,
                                       {"beta": list(args.beta), "k": list(args.k)}))
    print(json.dumps({"rows": len(rows), "out": args.out}, sort_keys=True))
    return 0


def cmd_bifurcation(args) -> int:
    if args.k < 0:
        return _usage(f"--k must be >= 0, got {args.k}")
    if args.steps < 2:
        return _usage("--steps must be >= 2")
    rows = bifurcation_sweep(args.k, args.beta_min, args.beta_max, args.steps)
    write_bifurcation_csv(args.out, rows)
    _emit_manifest(args.out, _manifest(args, "bifurcation", None,
                                       {"k": args.k, "beta_min": args.beta_min,
                                        "beta_max": args.beta_max,
                                        "steps": args.steps}))
    print(json.dumps({"rows": len(rows), "out": args.out}, sort_keys=True))
    return 0


def cmd_rerun(args) -> int:
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
        argv = manifest["argv"]
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        return _usage(f"cannot read manifest {args.manifest}: {exc}")
    if args.out is not None:
        argv = list(argv)
        for flag in ("--out", "-o"):
            if flag in argv:
                argv[argv.index(flag) + 1] = args.out
    return main(argv)


def _config_dict(config: IntegratorConfig) -> dict:
    max_step = config.max_step if np.isfinite(config.max_step) else None
    return {"t_end": config.t_end, "rel_tol": config.rel_tol,
            "abs_tol": config.abs_tol, "max_step": max_step,
            "sample_interval": config.sample_interval, "eps_phi": config.eps_phi}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extbeam",
        description="Extensible-beam buckling, stability and dynamics toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("critical", help="critical loads at one stiffness")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("stationary", help="enumerate unforced equilibria")
    _add_param_flags(p)
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("simulate", help="integrate one trajectory")
    _add_param_flags(p)
    _add_sim_flags(p)
    p.add_argument("--out", "-o", required=True, help="output path prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decay", help="integrate and fit the energy decay rate")
    _add_param_flags(p)
    _add_sim_flags(p)
    p.add_argument("--window", type=float, default=0.5)
    p.add_argument("--out", "-o", required=True, help="output path prefix")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("basin", help="classify which equilibrium an orbit reaches")
    _add_param_flags(p)
    _add_sim_flags(p)
    p.add_argument("--out", "-o", default=None, help="output path prefix")
    p.set_defaults(func=cmd_basin)

    p = sub.add_parser("map", help="classify a (beta, k) grid")
    p.add_argument("--beta", type=_parse_range, required=True,
                   help="beta range MIN:MAX:STEPS")
    p.add_argument("--k", type=_parse_range, required=True,
                   help="k range MIN:MAX:STEPS")
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("bifurcation", help="branch amplitudes over a beta sweep")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--beta-min", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_bifurcation)

    p = sub.add_parser("rerun", help="replay a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", "-o", default=None, help="redirect outputs")
    p.set_defaults(func=cmd_rerun)

    return parser


def _merge_dash_values(argv):
    """Join flag/value pairs whose value starts with '-' into --flag=value.

    argparse only recognises bare negative numbers after a flag; values
    like '-120:0:160' or '-0.01,0' would otherwise be mistaken for option
    strings.
    """
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and nxt is not None
                and nxt.startswith("-") and not nxt.startswith("--")
                and nxt != "-o" and len(nxt) > 1):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    argv = _merge_dash_values(list(argv))
    parser = build_parser()
    args = parser.parse_args(argv)
    args.raw_argv = list(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except ExtbeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_ERROR


if __name__ == "__main__":
    sys.exit(main())
