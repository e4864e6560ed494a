"""Command-line interface: ``mechsqueeze <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or parameter error, 2 unstable or otherwise
outside the physical domain, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import default_jobs
from .dynamics import simulate_ensemble, simulate_trajectory
from .errors import SqueezeError, UnstableParameters
from .model import DEFAULT_THETA, PhysicalParams, SystemParams, derived, is_stable, to_db, validate
from .optimize import optimal_detuning, optimal_measurement
from .steadystate import (
    bae_variance,
    conditional_steady_state,
    principal_variances,
    unconditional_steady_state,
    v0,
)
from .sweep import SweepSpec, run_sweep, write_csv, write_fig2, write_fig3

DB_LABEL = "squeezing dB, positive = below zero-point"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model parameters (rates in units of gamma unless --gamma is changed)")
    g.add_argument("--gamma", type=float, default=1.0, help="mechanical damping rate")
    g.add_argument("--chi", type=float, default=None, help="parametric nonlinearity (default 0)")
    g.add_argument("--delta", type=float, default=0.0, help="pump half-detuning")
    g.add_argument("--theta", type=float, default=DEFAULT_THETA, help="drive phase in radians (default pi/4)")
    g.add_argument("--mu", type=float, default=0.0, help="measurement strength")
    g.add_argument("--eta", type=float, default=1.0, help="detection efficiency in [0, 1]")
    g.add_argument("--n", type=float, default=0.0, dest="n_thermal", help="mean bath phonon number")
    g.add_argument("--optimize-delta", action="store_true", help="replace --delta by the optimal detuning")
    ph = p.add_argument_group("device parameters (alternative to --chi; sets gamma = 1)")
    ph.add_argument("--omega-m", type=float, help="mechanical angular frequency")
    ph.add_argument("--quality", type=float, help="mechanical quality factor")
    ph.add_argument("--spring-mod-ratio", type=float, help="spring constant modulation depth k_r/k_0")


def _params_from_args(args) -> SystemParams:
    physical = [args.omega_m, args.quality, args.spring_mod_ratio]
    if any(v is not None for v in physical):
        if any(v is None for v in physical):
            raise _UsageError("--omega-m, --quality and --spring-mod-ratio must be given together")
        if args.chi is not None:
            raise _UsageError("--chi cannot be combined with device parameters")
        if args.gamma != 1.0:
            raise _UsageError("--gamma cannot be combined with device parameters (gamma is the unit)")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            dev = PhysicalParams(args.omega_m, args.quality, args.spring_mod_ratio)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        params = dev.to_system(delta=args.delta, mu=args.mu, eta=args.eta, n_thermal=args.n_thermal, theta=args.theta)
    else:
        params = SystemParams(
            gamma=args.gamma,
            chi=0.0 if args.chi is None else args.chi,
            delta=args.delta,
            theta=args.theta,
            mu=args.mu,
            eta=args.eta,
            n_thermal=args.n_thermal,
        )
    validate(params)
    if args.optimize_delta:
        params = params.replace(delta=optimal_detuning(params).delta_opt)
    return params


class _UsageError(Exception):
    pass


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python numbers, NaN to None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if math.isnan(x) else x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(_clean(payload), indent=1, sort_keys=True) + "\n")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


# Subcommands ----------------------------------------------------------------


def steady_report(params: SystemParams, feedback_gain: float = 0.0) -> dict:
    """Everything ``steady`` prints, as a dictionary."""
    cov = conditional_steady_state(params)
    v_min, v_max, angle = principal_variances(cov)
    unc = unconditional_steady_state(params, feedback_gain)
    u_min, _, _ = principal_variances(unc)
    return {
        "params": params.to_dict(),
        "feedback_gain": feedback_gain,
        "stable": True,
        "v_x": cov.v_x,
        "v_y": cov.v_y,
        "c": cov.c,
        "det": cov.det,
        "v_db": to_db(cov.v_x),
        "v_min": v_min,
        "v_max": v_max,
        "minor_axis_angle": angle,
        "v0": v0(params),
        "bae_variance": bae_variance(params),
        "chi_prime": derived(params).chi_prime,
        "unconditional_v_x": unc.v_x,
        "unconditional_v_min": u_min,
        "solver": cov.info.method,
        "residual": cov.info.residual,
    }


def cmd_steady(args) -> int:
    params = _params_from_args(args)
    if not is_stable(params):
        print(f"unstable: chi^2 >= delta^2 + gamma^2 ({params.chi**2:g} >= {params.delta**2 + params.gamma**2:g})")
        print(f"parameters: {json.dumps(params.to_dict())}")
        if args.out:
            _write_json(args.out, {"params": params.to_dict(), "stable": False})
        return UnstableParameters.exit_code
    report = steady_report(params, args.feedback_gain)
    print(f"V_X  = {_fmt(report['v_x'])}")
    print(f"V_Y  = {_fmt(report['v_y'])}")
    print(f"C    = {_fmt(report['c'])}")
    print(f"detV = {_fmt(report['det'])}")
    print(f"dB   = {report['v_db']:.4f}  ({DB_LABEL})")
    print(f"principal variances = {_fmt(report['v_min'])}, {_fmt(report['v_max'])} (minor axis at {report['minor_axis_angle']:.6f} rad)")
    print(f"V0 = {_fmt(report['v0'])}, BAE = {_fmt(report['bae_variance'])}, chi' = {_fmt(report['chi_prime'])}")
    print(f"unconditional V_X = {_fmt(report['unconditional_v_x'])} (feedback gain {args.feedback_gain:g})")
    print(f"delta = {_fmt(params.delta)}, stable = yes, residual = {report['residual']:.3e} ({report['solver']})")
    if args.out:
        _write_json(args.out, report)
    return 0


def cmd_optimize(args) -> int:
    params = _params_from_args(args)
    if args.mu_range:
        res = optimal_measurement(params, tuple(args.mu_range), args.points_per_decade, args.jobs)
        params = params.replace(mu=res.mu_opt, delta=res.delta_opt)
    else:
        res = optimal_detuning(params)
        params = params.replace(delta=res.delta_opt)
    if res.mu_opt is not None:
        print(f"mu_opt    = {_fmt(res.mu_opt)}")
    print(f"delta_opt = {_fmt(res.delta_opt)}")
    print(f"V_X_opt   = {_fmt(res.v_x_opt)}")
    print(f"dB        = {res.v_db:.4f}  ({DB_LABEL})")
    print(f"evaluations = {res.evaluations}")
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.out:
        _write_json(args.out, {"params": params.to_dict(), "result": res.to_dict()})
    return 0


def cmd_fig2(args) -> int:
    paths = write_fig2(args.out, mu=args.mu, eta=args.eta, points=args.points, jobs=args.jobs)
    for p in paths:
        print(p)
    return 0


def cmd_fig3(args) -> int:
    panels = "abcd" if args.panel == "all" else args.panel
    for p in write_fig3(args.out, panels=panels, grid=args.grid, jobs=args.jobs):
        print(p)
    return 0


def cmd_sweep(args) -> int:
    spec = SweepSpec.load(args.spec)
    result = run_sweep(spec, args.jobs)
    out = Path(args.out)
    if out.suffix == ".json":
        result.write_json(out)
    else:
        result.write_csv(out)
    n_unstable = sum(not row["stable"] for row in result.rows)
    print(f"{len(result.rows)} points written to {out} ({n_unstable} unstable)")
    return 0


def cmd_simulate(args) -> int:
    params = _params_from_args(args)
    header = {"package": "mechsqueeze", "version": __version__}
    if args.ensemble:
        summary = simulate_ensemble(
            params, args.ensemble, t_final=args.t_final, dt=args.dt, seed=args.seed, feedback_gain=args.feedback_gain
        )
        payload = {"provenance": header, "params": params.to_dict(), "ensemble": summary.to_dict()}
        z = summary.z_scores
        print(f"ensemble of {args.ensemble}: z-scores xx={z[0, 0]:.3f} yy={z[1, 1]:.3f} xy={z[0, 1]:.3f}")
        print(f"unconditional estimate V_X = {_fmt(summary.unconditional[0, 0])}, predicted {_fmt(summary.predicted[0, 0])}")
        if args.out:
            if Path(args.out).suffix == ".csv":
                cols = ("entry", "estimate", "predicted", "standard_error", "z_score")
                rows = [
                    [i * 2 + j, summary.unconditional[i, j], summary.predicted[i, j], summary.standard_error[i, j], z[i, j]]
                    for i, j in ((0, 0), (1, 1), (0, 1))
                ]
                write_csv(args.out, cols, rows, {"provenance": header, "params": params.to_dict(),
                                                 "ensemble": {k: v for k, v in summary.to_dict().items() if not isinstance(v, list)},
                                                 "entry": "0 = xx, 3 = yy, 1 = xy"})
            else:
                _write_json(args.out, payload)
        return 0
    rec = simulate_trajectory(
        params, t_final=args.t_final, dt=args.dt, seed=args.seed, feedback_gain=args.feedback_gain
    )
    print(f"{len(rec.times) - 1} steps of dt = {_fmt(rec.dt)}; final mean = ({_fmt(rec.means[-1, 0])}, {_fmt(rec.means[-1, 1])})")
    if args.out:
        if Path(args.out).suffix == ".csv":
            n = len(rec.times)
            record = np.full((n, 2), np.nan)
            if rec.record is not None:
                record[:-1] = rec.record
            table = np.column_stack([rec.times, rec.means, rec.covariances, record])
            cols = ("t", "mean_x", "mean_y", "v_x", "v_y", "c", "record_x", "record_y")
            meta = {"seed": rec.seed, "feedback_gain": rec.feedback_gain, "dt": rec.dt}
            write_csv(args.out, cols, table.tolist(), {"provenance": header, "params": params.to_dict(), "run": meta})
        else:
            _write_json(args.out, {"provenance": header, **rec.to_dict()})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mechsqueeze", description="Conditional squeezing of a parametrically driven, measured oscillator.")
    parser.add_argument("--version", action="version", version=f"mechsqueeze {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("steady", help="steady-state covariance at one parameter point")
    _add_param_flags(p)
    p.add_argument("--feedback-gain", type=float, default=0.0, help="feedback gain for the unconditional state")
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("optimize", help="optimal detuning, optionally jointly with measurement strength")
    _add_param_flags(p)
    p.add_argument("--mu-range", type=float, nargs=2, metavar=("LO", "HI"), help="also optimize mu over [LO, HI]")
    p.add_argument("--points-per-decade", type=int, default=50)
    p.add_argument("--jobs", type=int, default=default_jobs())
    p.add_argument("--out", help="write the result as JSON")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("fig2", help="optimal squeezing versus normalized nonlinearity")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mu", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--points", type=int, default=60, help="chi' grid size")
    p.add_argument("--jobs", type=int, default=default_jobs())
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("fig3", help="squeezing maps over measurement strength and N or eta")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--panel", choices=["a", "b", "c", "d", "all"], default="all")
    p.add_argument("--grid", type=int, default=60, help="points per axis")
    p.add_argument("--jobs", type=int, default=default_jobs())
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("sweep", help="evaluate an objective on a grid from a JSON spec")
    p.add_argument("spec", help="sweep specification (JSON)")
    p.add_argument("--out", required=True, help="result path; .json for JSON, otherwise CSV")
    p.add_argument("--jobs", type=int, default=default_jobs())
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="stochastic conditional trajectories")
    _add_param_flags(p)
    p.add_argument("--feedback-gain", type=float, default=0.0)
    p.add_argument("--t-final", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=None, help="time step (default: stability guard)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ensemble", type=int, default=0, metavar="N", help="simulate N trajectories and summarize")
    p.add_argument("--out", help=".json or .csv output")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except UnstableParameters as exc:
        print(str(exc))
        return exc.exit_code
    except SqueezeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
