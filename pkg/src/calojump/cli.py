"""Command-line interface.

Subcommands: rates, trajectory, ensemble, master-eq, fig2, fig3, fig4.
All physical parameters are entered in units of omega (e.g. --kappa 0.001
means 0.001*omega). Every flag has a config-file equivalent key (flag name
with dashes replaced by underscores) in a flat JSON object; command-line
flags win over config-file values. Exit codes: 0 success, 1 usage error,
2 numerical/domain error; errors go to stderr with an error_code= prefix.
"""

import argparse
import json
import math
import os
import sys

from .errors import CalojumpError, UsageError
from .experiments import (
    FIG2_INSET_CSV, FIG2_MAIN_CSV, FIG3_EI_VALUES, FIG3_INSET_CSV,
    FIG3_K_VALUES, FIG3_MAIN_CSV, FIG4_K_VALUES, FIG4_MAIN_CSV,
    FIG2_K_VALUES, SweepSpec, driven_energy_transfer, rates_sweep,
    steady_state_power, suggest_grid,
)
from .master_equation import HybridState, evolve, write_distribution_csv, write_series_csv
from .model import EnergyGrid, ModelConfig, QubitPureState
from .rates import build_rate_table, write_rate_table_csv
from .trajectory import (
    TrajectoryState, run_ensemble, run_trajectory, write_ensemble_summary_csv,
    write_event_log_csv,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_PHYS_FLAGS = (
    ("kappa", float, "qubit-calorimeter coupling rate, units of omega", 0.001),
    ("lambda", float, "drive amplitude, units of omega", 0.0),
    ("n-osc", int, "number of resonant calorimeter oscillators", 10),
    ("k", float, "measurement-noise variance, units of omega^2", 0.0),
    ("n-cutoff", int, "noise-bath level cutoff N_C", 100),
    ("gamma", float, "calorimeter loss rate, units of omega", 0.0),
)


def _add_phys(p: _Parser):
    for name, typ, help_, _default in _PHYS_FLAGS:
        p.add_argument(f"--{name}", type=typ, default=None, help=help_,
                       dest=name.replace("-", "_"))


def _add_common(p: _Parser):
    p.add_argument("--config", default=None,
                   help="flat JSON config file; flags override its keys")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--workers", type=int, default=None,
                   help="trajectory worker threads (default $CALOJUMP_WORKERS or 1)")


def _parse_grid(text: str) -> EnergyGrid:
    try:
        lo, hi = text.split(":")
        return EnergyGrid(int(lo), int(hi))
    except ValueError as exc:
        raise UsageError(f"--grid expects MIN:MAX integers, got {text!r}") from exc


def _load_config(path):
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a flat JSON object")
    return data


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """Config-file values fill flags the user left unset; unknown keys are
    rejected. Returns the fully resolved option dict."""
    resolved = dict(vars(args))
    resolved.pop("func", None)
    cfg_path = resolved.pop("config", None)
    if cfg_path:
        file_vals = _load_config(cfg_path)
        known = set(resolved) | set(defaults)
        unknown = sorted(set(file_vals) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for key, val in file_vals.items():
            if resolved.get(key) is None:
                resolved[key] = val
    for key, val in defaults.items():
        if resolved.get(key) is None:
            resolved[key] = val
    return resolved


_PHYS_DEFAULTS = {name.replace("-", "_"): default for name, _t, _h, default in _PHYS_FLAGS}


def _model_config(opts: dict) -> ModelConfig:
    return ModelConfig(
        omega=1.0,
        kappa=float(opts["kappa"]),
        lambda_drive=float(opts["lambda"]),
        n_osc=int(opts["n_osc"]),
        k_noise=float(opts["k"]),
        n_cutoff=int(opts["n_cutoff"]),
        gamma_loss=float(opts["gamma"]),
    )


def _initial_state(opts: dict) -> TrajectoryState:
    psi = QubitPureState.excited() if opts["psi"] == "excited" else QubitPureState.ground()
    return TrajectoryState(psi=psi, e_index=int(opts["e_init"]))


def _resolve_grid(opts: dict, cfg: ModelConfig) -> EnergyGrid:
    if opts.get("grid"):
        return _parse_grid(opts["grid"])
    return suggest_grid(cfg, int(opts["e_init"]), float(opts["t_final"]), float(opts["dt"]))


def _cmd_rates(args):
    opts = _merge(args, {**_PHYS_DEFAULTS, "grid": "0:50", "out": "rates.csv",
                         "seed": 0, "workers": None})
    cfg = _model_config(opts)
    grid = _parse_grid(opts["grid"])
    table = build_rate_table(cfg, grid)
    write_rate_table_csv(table, opts["out"])
    print(f"wrote {opts['out']}")
    return 0


def _cmd_trajectory(args):
    opts = _merge(args, {**_PHYS_DEFAULTS, "dt": 0.03, "t_final": 100.0,
                         "e_init": 0, "psi": "ground", "sample_every": 100,
                         "grid": None, "out": "trajectory_events.csv",
                         "seed": 0, "workers": None})
    cfg = _model_config(opts)
    grid = _resolve_grid(opts, cfg)
    table = build_rate_table(cfg, grid)
    rec = run_trajectory(cfg, _initial_state(opts), table, float(opts["dt"]),
                         float(opts["t_final"]), int(opts["seed"]),
                         sample_stride=int(opts["sample_every"]))
    write_event_log_csv(rec, opts["out"])
    print(f"wrote {opts['out']} ({len(rec.events)} events, delta_e={rec.delta_e})")
    return 0


def _cmd_ensemble(args):
    opts = _merge(args, {**_PHYS_DEFAULTS, "dt": 0.03, "t_final": 100.0,
                         "e_init": 0, "psi": "ground", "sample_every": 100,
                         "grid": None, "out": "ensemble_summary.csv",
                         "n_traj": 1000, "seed": 0, "workers": None})
    cfg = _model_config(opts)
    grid = _resolve_grid(opts, cfg)
    table = build_rate_table(cfg, grid)
    res = run_ensemble(cfg, table, _initial_state(opts), float(opts["dt"]),
                       float(opts["t_final"]), int(opts["seed"]),
                       int(opts["n_traj"]), sample_stride=int(opts["sample_every"]),
                       workers=opts["workers"])
    write_ensemble_summary_csv(res.statistics(), opts["out"])
    print(f"wrote {opts['out']}")
    return 0


def _cmd_master_eq(args):
    opts = _merge(args, {**_PHYS_DEFAULTS, "dt": 0.03, "t_final": 100.0,
                         "e_init": 0, "psi": "ground", "record_every": 100,
                         "grid": None, "out": "master_eq_series.csv",
                         "dist_out": None, "seed": 0, "workers": None})
    cfg = _model_config(opts)
    grid = _resolve_grid(opts, cfg)
    table = build_rate_table(cfg, grid)
    psi = QubitPureState.excited() if opts["psi"] == "excited" else QubitPureState.ground()
    state = HybridState.pure(grid, int(opts["e_init"]), psi)
    steps = int(round(float(opts["t_final"]) / float(opts["dt"])))
    _final, times, rows = evolve(state, table, cfg, float(opts["dt"]), steps,
                                 record_every=int(opts["record_every"]))
    write_series_csv(times, rows, opts["out"])
    if opts["dist_out"]:
        write_distribution_csv(times, rows, grid, opts["dist_out"])
        print(f"wrote {opts['out']} and {opts['dist_out']}")
    else:
        print(f"wrote {opts['out']}")
    return 0


def _parse_values(text, fallback):
    if text is None:
        return fallback
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _outdir(opts) -> str:
    out_dir = opts["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _cmd_fig2(args):
    opts = _merge(args, {**_PHYS_DEFAULTS, "out_dir": ".", "seed": 0,
                         "inset": False, "k_values": None, "workers": None})
    base = _model_config(opts)
    k_values = _parse_values(opts["k_values"], FIG2_K_VALUES)
    spec = SweepSpec(parameter="k", values=k_values, base=base,
                     ensemble_size=1, dt=0.03,
                     master_seed=int(opts["seed"]))
    out_dir = _outdir(opts)
    if opts["inset"]:
        path = os.path.join(out_dir, FIG2_INSET_CSV)
        rates_sweep(spec, inset=True).write_csv(path)
    else:
        path = os.path.join(out_dir, FIG2_MAIN_CSV)
        rates_sweep(spec).write_csv(path)
    print(f"wrote {path}")
    return 0


def _cmd_fig3(args):
    opts = _merge(args, {**_PHYS_DEFAULTS, "lambda": 0.05, "out_dir": ".",
                         "seed": 0, "inset": False, "n_traj": 10_000,
                         "dt": 0.03, "periods": 5.0, "k_values": None,
                         "e_values": None, "workers": None})
    base = _model_config(opts)
    out_dir = _outdir(opts)
    if opts["inset"]:
        values = _parse_values(opts["e_values"], FIG3_EI_VALUES)
        spec = SweepSpec(parameter="E_initial", values=values, base=base,
                         ensemble_size=int(opts["n_traj"]), dt=float(opts["dt"]),
                         horizon_periods=float(opts["periods"]),
                         master_seed=int(opts["seed"]), workers=opts["workers"])
        path = os.path.join(out_dir, FIG3_INSET_CSV)
    else:
        values = _parse_values(opts["k_values"], FIG3_K_VALUES)
        spec = SweepSpec(parameter="k", values=values, base=base,
                         ensemble_size=int(opts["n_traj"]), dt=float(opts["dt"]),
                         horizon_periods=float(opts["periods"]),
                         master_seed=int(opts["seed"]), workers=opts["workers"])
        path = os.path.join(out_dir, FIG3_MAIN_CSV)
    driven_energy_transfer(spec).write_csv(path)
    print(f"wrote {path}")
    return 0


def _cmd_fig4(args):
    opts = _merge(args, {**_PHYS_DEFAULTS, "lambda": 0.05, "gamma": 0.0005,
                         "out_dir": ".", "seed": 0, "n_traj": 1500,
                         "dt": 0.03, "k_values": None, "window_periods": 20.0,
                         "burn_in": None, "workers": None})
    base = _model_config(opts)
    values = _parse_values(opts["k_values"], FIG4_K_VALUES)
    spec = SweepSpec(parameter="k", values=values, base=base,
                     ensemble_size=int(opts["n_traj"]), dt=float(opts["dt"]),
                     master_seed=int(opts["seed"]), workers=opts["workers"])
    out_dir = _outdir(opts)
    path = os.path.join(out_dir, FIG4_MAIN_CSV)
    burn_in = float(opts["burn_in"]) if opts["burn_in"] is not None else None
    steady_state_power(spec, window_periods=float(opts["window_periods"]),
                       burn_in=burn_in).write_csv(path)
    print(f"wrote {path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="calojump",
                     description="Driven-qubit calorimetric jump simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", parents=[], help="export a rate table as CSV")
    _add_phys(p)
    _add_common(p)
    p.add_argument("--grid", default=None, help="energy index range MIN:MAX")
    p.add_argument("--out", default=None, help="output CSV path")
    p.set_defaults(func=_cmd_rates)

    p = sub.add_parser("trajectory", help="single seeded trajectory event log")
    _add_phys(p)
    _add_common(p)
    p.add_argument("--dt", type=float, default=None, help="time step, units 1/omega")
    p.add_argument("--t-final", type=float, default=None, help="horizon, units 1/omega")
    p.add_argument("--e-init", type=int, default=None, help="initial measured energy index")
    p.add_argument("--psi", choices=("ground", "excited"), default=None,
                   help="initial qubit state")
    p.add_argument("--sample-every", type=int, default=None,
                   help="sampling stride in steps")
    p.add_argument("--grid", default=None, help="energy index range MIN:MAX (default auto)")
    p.add_argument("--out", default=None, help="output CSV path")
    p.set_defaults(func=_cmd_trajectory)

    p = sub.add_parser("ensemble", help="trajectory ensemble summary")
    _add_phys(p)
    _add_common(p)
    p.add_argument("--dt", type=float, default=None, help="time step, units 1/omega")
    p.add_argument("--t-final", type=float, default=None, help="horizon, units 1/omega")
    p.add_argument("--e-init", type=int, default=None, help="initial measured energy index")
    p.add_argument("--psi", choices=("ground", "excited"), default=None,
                   help="initial qubit state")
    p.add_argument("--sample-every", type=int, default=None,
                   help="sampling stride in steps")
    p.add_argument("--n-traj", type=int, default=None, help="ensemble size")
    p.add_argument("--grid", default=None, help="energy index range MIN:MAX (default auto)")
    p.add_argument("--out", default=None, help="output CSV path")
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("master-eq", help="deterministic hybrid evolution time series")
    _add_phys(p)
    _add_common(p)
    p.add_argument("--dt", type=float, default=None, help="RK4 step, units 1/omega")
    p.add_argument("--t-final", type=float, default=None, help="horizon, units 1/omega")
    p.add_argument("--e-init", type=int, default=None, help="initial measured energy index")
    p.add_argument("--psi", choices=("ground", "excited"), default=None,
                   help="initial qubit state")
    p.add_argument("--record-every", type=int, default=None,
                   help="recording stride in steps")
    p.add_argument("--grid", default=None, help="energy index range MIN:MAX (default auto)")
    p.add_argument("--out", default=None, help="time-series CSV path")
    p.add_argument("--dist-out", default=None,
                   help="optional energy-distribution CSV path")
    p.set_defaults(func=_cmd_master_eq)

    p = sub.add_parser("fig2", help="rates vs k dataset (use --inset for the "
                                    "perfect-measurement rates vs E)")
    _add_phys(p)
    _add_common(p)
    p.add_argument("--out-dir", default=None, help="output directory")
    p.add_argument("--inset", action="store_true", default=None,
                   help="write the inset dataset instead of the main panel")
    p.add_argument("--k-values", default=None,
                   help="comma-separated k list, units of omega^2")
    p.set_defaults(func=_cmd_fig2)

    p = sub.add_parser("fig3", help="driven energy-transfer dataset (use --inset "
                                    "for the initial-energy sweep at k=0)")
    _add_phys(p)
    _add_common(p)
    p.add_argument("--out-dir", default=None, help="output directory")
    p.add_argument("--inset", action="store_true", default=None,
                   help="sweep E_initial at k=0 instead of k")
    p.add_argument("--n-traj", type=int, default=None, help="ensemble size per point")
    p.add_argument("--dt", type=float, default=None, help="time step, units 1/omega")
    p.add_argument("--periods", type=float, default=None,
                   help="drive horizon in Rabi periods pi/lambda")
    p.add_argument("--k-values", default=None,
                   help="comma-separated k list, units of omega^2")
    p.add_argument("--e-values", default=None,
                   help="comma-separated initial-energy list for --inset")
    p.set_defaults(func=_cmd_fig3)

    p = sub.add_parser("fig4", help="steady-state power dataset")
    _add_phys(p)
    _add_common(p)
    p.add_argument("--out-dir", default=None, help="output directory")
    p.add_argument("--n-traj", type=int, default=None, help="ensemble size per point")
    p.add_argument("--dt", type=float, default=None, help="time step, units 1/omega")
    p.add_argument("--k-values", default=None,
                   help="comma-separated k list, units of omega^2")
    p.add_argument("--window-periods", type=float, default=None,
                   help="steady-state averaging window, Rabi periods")
    p.add_argument("--burn-in", type=float, default=None,
                   help="burn-in time, units 1/omega (default 6/gamma)")
    p.set_defaults(func=_cmd_fig4)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error_code={exc.code}: {exc}", file=sys.stderr)
        return 1
    except CalojumpError as exc:
        print(f"error_code={exc.code}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
