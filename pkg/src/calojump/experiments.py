"""Scripted drivers that regenerate the three headline datasets as CSV:

* rates_sweep          - jump rates at E=0 vs noise variance k, one series
                         per noise cutoff (inset: perfect-measurement rates vs E)
* driven_energy_transfer - mean measured-energy change after a fixed number
                         of drive periods vs k (inset: vs initial energy at k=0)
* steady_state_power   - steady-state power estimates with and without the
                         measurement-error correction, vs k

Every CSV starts with '#'-prefixed metadata lines (config, seed, ensemble
size, dt, versions) so outputs are self-describing and reproducible
byte-for-byte from the same master seed.
"""

import csv
import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import DomainError, StationarityError
from .kernels import backend
from .model import EnergyGrid, ModelConfig, QubitPureState
from .rates import build_rate_table, expected_energy, rate_down, rate_up
from .trajectory import TrajectoryState, mean_stderr, run_ensemble

__all__ = [
    "SweepSpec",
    "SweepResult",
    "rates_sweep",
    "driven_energy_transfer",
    "steady_state_power",
    "suggest_grid",
    "FIG2_MAIN_CSV", "FIG2_INSET_CSV", "FIG3_MAIN_CSV", "FIG3_INSET_CSV",
    "FIG4_MAIN_CSV",
    "FIG2_K_VALUES", "FIG3_K_VALUES", "FIG3_EI_VALUES", "FIG4_K_VALUES",
]

FIG2_MAIN_CSV = "fig2_rates.csv"
FIG2_INSET_CSV = "fig2_inset.csv"
FIG3_MAIN_CSV = "fig3_transfer.csv"
FIG3_INSET_CSV = "fig3_inset.csv"
FIG4_MAIN_CSV = "fig4_power.csv"

FIG2_K_VALUES = tuple(np.logspace(-2.0, 6.0, 97))
FIG2_CUTOFFS = (100, 500, 1000)
FIG3_K_VALUES = (0.0,) + tuple(np.logspace(0.0, 4.0, 9)) + (1e5, 1e6)
FIG3_EI_VALUES = (0.0, 5.0, 10.0, 20.0, 40.0, 80.0)
FIG4_K_VALUES = (0.0, 1.0, 4.0, 16.0, 64.0)


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep: which knob, its values, and the run budget."""

    parameter: str  # "k" | "E_initial" | "N_C"
    values: tuple
    base: ModelConfig
    ensemble_size: int = 10_000
    dt: float = 0.03
    horizon_periods: float | None = None
    horizon_t: float | None = None
    master_seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        if self.parameter not in ("k", "E_initial", "N_C"):
            raise DomainError(f"unknown sweep parameter {self.parameter!r}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DomainError("sweep value list is empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise DomainError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", vals)
        if self.ensemble_size < 1:
            raise DomainError("ensemble_size must be >= 1")
        if self.dt <= 0:
            raise DomainError("dt must be > 0")

    def resolve_horizon(self) -> float:
        """Total simulated time; `horizon_periods` counts Rabi periods
        pi/lambda of the rotating-frame drive."""
        if self.horizon_t is not None:
            return float(self.horizon_t)
        if self.horizon_periods is None:
            raise DomainError("spec needs horizon_periods or horizon_t")
        lam = self.base.lambda_drive
        if lam <= 0:
            raise DomainError("horizon in periods requires a nonzero drive")
        return self.horizon_periods * math.pi / lam


@dataclass(frozen=True)
class SweepResult:
    schema: str
    columns: tuple
    rows: tuple  # tuples of numbers
    meta: tuple  # ordered (key, value) pairs

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            for key, value in self.meta:
                f.write(f"# {key}: {value}\n")
            w = csv.writer(f)
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([_fmt_cell(c) for c in row])


def _fmt_cell(c) -> str:
    if isinstance(c, (int, np.integer)):
        return str(int(c))
    return f"{float(c):.17g}"


def _base_meta(schema: str, spec: SweepSpec, **extra) -> list:
    cfgdict = dataclasses.asdict(spec.base)
    meta = [
        ("schema", schema),
        ("package_version", __version__),
        ("kernel_backend", backend()),
        ("config", json.dumps(cfgdict, sort_keys=True)),
        ("parameter", spec.parameter),
        ("values", json.dumps([float(v) for v in spec.values])),
        ("ensemble_size", spec.ensemble_size),
        ("dt", _fmt_cell(spec.dt)),
        ("master_seed", spec.master_seed),
    ]
    if spec.horizon_periods is not None:
        meta.append(("horizon_periods", _fmt_cell(spec.horizon_periods)))
    if spec.horizon_t is not None or spec.horizon_periods is not None:
        try:
            meta.append(("t_final", _fmt_cell(spec.resolve_horizon())))
        except DomainError:
            pass
    meta.extend(extra.items())
    return meta


def suggest_grid(cfg: ModelConfig, e_init: int, t_final: float,
                 dt: float = 0.03) -> EnergyGrid:
    """Energy grid sized so trajectories stay inside it for the horizon.

    Floor is the measurement floor (-n_cutoff for noisy measurement, 0 for
    perfect). The ceiling uses the emission-only growth bound without loss,
    or the loss-balance level plus a wide fluctuation margin with loss; in
    both cases escapes remain hard errors rather than silent truncation.
    """
    floor = 0 if cfg.k_noise == 0 else -cfg.n_cutoff
    nc = cfg.n_cutoff if cfg.k_noise > 0 else 0
    if cfg.kappa == 0:
        return EnergyGrid(min(floor, e_init), max(e_init + 1, 1))
    if cfg.gamma_loss > 0:
        balance = cfg.kappa * cfg.n_osc / cfg.gamma_loss
        margin = 10.0 * math.sqrt(balance + cfg.n_osc + nc) + 40.0
        n_max = e_init + math.ceil(balance + margin)
    else:
        a = e_init + cfg.n_osc + nc
        growth = a * math.expm1(cfg.kappa * t_final)
        n_max = e_init + math.ceil(growth + 10.0 * math.sqrt(growth + 1.0)) + 20
    # keep the top of the grid inside the first-order stability guard
    if cfg.k_noise > 0:
        stab_cap = math.floor(0.05 / (dt * cfg.kappa)) - cfg.n_osc - nc
    else:
        stab_cap = math.floor(0.05 / (dt * cfg.kappa)) - cfg.n_osc
    n_max = min(n_max, max(stab_cap, e_init + 10))
    return EnergyGrid(min(floor, e_init), max(n_max, e_init + 10))


def rates_sweep(spec: SweepSpec, n_cutoff_values=FIG2_CUTOFFS,
                inset: bool = False, inset_e_max: int = 50) -> SweepResult:
    """Rates at E=0 vs k for several noise cutoffs; in inset mode the
    perfect-measurement (k=0) rates vs energy index."""
    if inset:
        cfg = spec.base.replace(k_noise=0.0)
        rows = tuple(
            (float(e), rate_up(e, cfg), rate_down(e, cfg))
            for e in range(0, inset_e_max + 1)
        )
        meta = _base_meta("calojump.fig2_inset.v1", spec,
                         inset_e_max=inset_e_max)
        return SweepResult(
            schema="calojump.fig2_inset.v1",
            columns=("E_over_omega", "gamma_up", "gamma_down"),
            rows=rows, meta=tuple(meta),
        )
    if spec.parameter != "k":
        raise DomainError("rates_sweep sweeps parameter 'k'")
    rows = []
    for k in spec.values:
        for nc in n_cutoff_values:
            cfg = spec.base.replace(k_noise=float(k), n_cutoff=int(nc))
            rows.append((float(k), int(nc), rate_up(0, cfg), rate_down(0, cfg)))
    meta = _base_meta("calojump.fig2_rates.v1", spec,
                      n_cutoff_values=json.dumps([int(v) for v in n_cutoff_values]))
    return SweepResult(
        schema="calojump.fig2_rates.v1",
        columns=("k_over_omega2", "N_C", "gamma_up", "gamma_down"),
        rows=tuple(rows), meta=tuple(meta),
    )


def _delta_e_ensemble(cfg: ModelConfig, e_init: int, spec: SweepSpec,
                      t_final: float, point_seed: int):
    grid = suggest_grid(cfg, e_init, t_final, spec.dt)
    table = build_rate_table(cfg, grid)
    init = TrajectoryState(psi=QubitPureState.ground(), e_index=e_init)
    n_steps = int(round(t_final / spec.dt))
    res = run_ensemble(cfg, table, init, spec.dt, t_final, point_seed,
                       spec.ensemble_size, sample_stride=max(n_steps, 1),
                       workers=spec.workers)
    return mean_stderr(res.delta_e)


def driven_energy_transfer(spec: SweepSpec) -> SweepResult:
    """Mean measured-energy change over the drive horizon.

    parameter "k": sweep the noise variance at E_initial = 0.
    parameter "E_initial": sweep the initial energy at k = 0 (inset mode).
    """
    t_final = spec.resolve_horizon()
    rows = []
    if spec.parameter == "k":
        for i, k in enumerate(spec.values):
            cfg = spec.base.replace(k_noise=float(k))
            mean, stderr = _delta_e_ensemble(cfg, 0, spec, t_final,
                                             _point_seed(spec.master_seed, i))
            rows.append((float(k), mean, stderr))
        schema = "calojump.fig3_transfer.v1"
        columns = ("k_over_omega2", "mean_dE_over_omega", "stderr")
    elif spec.parameter == "E_initial":
        cfg = spec.base.replace(k_noise=0.0)
        for i, e_i in enumerate(spec.values):
            if e_i != int(e_i) or e_i < 0:
                raise DomainError(f"E_initial values must be non-negative integers, got {e_i}")
            mean, stderr = _delta_e_ensemble(cfg, int(e_i), spec, t_final,
                                             _point_seed(spec.master_seed, i))
            rows.append((float(e_i), mean, stderr))
        schema = "calojump.fig3_inset.v1"
        columns = ("E_i_over_omega", "mean_dE_over_omega", "stderr")
    else:
        raise DomainError("driven_energy_transfer sweeps 'k' or 'E_initial'")
    meta = _base_meta(schema, spec)
    return SweepResult(schema=schema, columns=columns, rows=tuple(rows),
                       meta=tuple(meta))


def _point_seed(master_seed: int, index: int) -> int:
    # distinct Philox key families per sweep point, reproducible from the master seed
    return (int(master_seed) << 16) + index


def _window_mean(e_mat: np.ndarray, times: np.ndarray, t_lo: float, t_hi: float):
    """Per-trajectory time averages of E over sample times in (t_lo, t_hi]."""
    sel = (times > t_lo) & (times <= t_hi)
    if not np.any(sel):
        raise DomainError("empty averaging window")
    return e_mat[:, sel].mean(axis=1)


def steady_state_power(spec: SweepSpec, window_periods: float = 20.0,
                       burn_in: float | None = None) -> SweepResult:
    """Steady-state measured energy and power estimates per k value.

    Runs each ensemble to the end of burn_in + averaging window, requires
    the two-half-window drift criterion (means differing by less than two
    combined standard errors), then reports E_s (time- and ensemble-average
    over the window), the corrected power gamma*<E>(E_s) with <E>
    interpolated linearly onto the rate table, and the naive gamma*E_s.
    """
    if spec.parameter != "k":
        raise DomainError("steady_state_power sweeps parameter 'k'")
    cfg0 = spec.base
    if cfg0.gamma_loss <= 0:
        raise DomainError("steady_state_power requires gamma_loss > 0")
    if cfg0.lambda_drive <= 0:
        raise DomainError("steady_state_power requires a drive")
    window = window_periods * math.pi / cfg0.lambda_drive
    if burn_in is None:
        # the E-relaxation rate is gamma times the local slope of <E>(E),
        # which drops below 1 for strong noise; 8/gamma keeps margin
        burn_in = 8.0 / cfg0.gamma_loss
    t_final = burn_in + window

    rows = []
    for i, k in enumerate(spec.values):
        cfg = cfg0.replace(k_noise=float(k))
        grid = suggest_grid(cfg, 0, t_final, spec.dt)
        table = build_rate_table(cfg, grid)
        init = TrajectoryState(psi=QubitPureState.ground(), e_index=0)
        n_steps = int(round(t_final / spec.dt))
        stride = max(1, int(round(3.0 / spec.dt)))  # sample every ~3/omega
        res = run_ensemble(cfg, table, init, spec.dt, t_final,
                           _point_seed(spec.master_seed, i), spec.ensemble_size,
                           sample_stride=stride, workers=spec.workers)
        times = res.sample_times
        t_end = float(times[-1])
        half = 0.5 * window
        m1 = _window_mean(res.e, times, t_end - window, t_end - half)
        m2 = _window_mean(res.e, times, t_end - half, t_end)
        mu1, se1 = mean_stderr(m1)
        mu2, se2 = mean_stderr(m2)
        drift = abs(mu1 - mu2)
        bound = 2.0 * math.hypot(se1, se2)
        if drift > bound:
            raise StationarityError(
                f"k={k}: half-window means drift by {drift:.4g} "
                f"(> 2 combined stderr = {bound:.4g}); increase burn_in"
            )
        full = _window_mean(res.e, times, t_end - window, t_end)
        e_s, stderr = mean_stderr(full)
        if cfg.k_noise == 0:
            e_of_meas = e_s  # <E> is the identity under perfect measurement
        else:
            e_of_meas = float(np.interp(e_s, grid.indices(), table.expected_e))
        gamma = cfg.gamma_loss
        rows.append((float(k), e_s, gamma * e_of_meas, gamma * e_s, stderr))

    meta = _base_meta("calojump.fig4_power.v1", spec,
                      window_periods=_fmt_cell(window_periods),
                      burn_in=_fmt_cell(burn_in),
                      t_final_total=_fmt_cell(t_final))
    return SweepResult(
        schema="calojump.fig4_power.v1",
        columns=("k_over_omega2", "E_s_over_omega", "P_s_corrected",
                 "P_s_naive", "stderr"),
        rows=tuple(rows), meta=tuple(meta),
    )
