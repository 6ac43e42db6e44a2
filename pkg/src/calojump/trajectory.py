"""Monte Carlo engine for the coupled stochastic evolution of (psi, E):
nonlinear deterministic drift between jumps, Poisson up/down jumps with
energy-dependent rates, and an optional Poisson loss process.

Randomness is counter-based: trajectory j of an ensemble with master seed
s draws its uniforms from Philox keyed (s, j), so ensembles reproduce
bit-for-bit regardless of scheduling, and the ensemble reduction is an
ordered fold over the trajectory index.
"""

import enum
import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, GridEscapeError, RefusalError
from .model import ModelConfig, QubitPureState
from .rates import RateTable

__all__ = [
    "TrajectoryState",
    "JumpKind",
    "JumpEvent",
    "TrajectoryRecord",
    "drift_step",
    "advance",
    "run_trajectory",
    "run_ensemble",
    "EnsembleResult",
    "EnsembleSeries",
    "ensemble_statistics",
    "first_event_times",
    "write_event_log_csv",
    "write_ensemble_summary_csv",
    "default_workers",
]


@dataclass(frozen=True)
class TrajectoryState:
    psi: QubitPureState
    e_index: int
    t: float = 0.0


class JumpKind(enum.Enum):
    DOWN = "down"
    UP = "up"
    LOSS = "loss"


_KIND_BY_CODE = {kernels.EV_DOWN: JumpKind.DOWN, kernels.EV_UP: JumpKind.UP,
                 kernels.EV_LOSS: JumpKind.LOSS}


@dataclass(frozen=True)
class JumpEvent:
    time: float
    kind: JumpKind
    e_index_after: int


@dataclass(frozen=True)
class TrajectoryRecord:
    """Full record of one stochastic realization; replaying (master_seed,
    traj_index) with the same config reproduces it bit-for-bit."""

    config: ModelConfig
    master_seed: int
    traj_index: int
    dt: float
    sample_stride: int
    events: tuple
    sample_times: np.ndarray
    sample_cg: np.ndarray
    sample_ce: np.ndarray
    sample_e: np.ndarray
    e_init: int
    e_final: int
    psi_final: QubitPureState
    t_final: float
    floor_suppressed: int = 0

    @property
    def delta_e(self) -> int:
        return self.e_final - self.e_init

    def event_counts(self):
        c = {JumpKind.DOWN: 0, JumpKind.UP: 0, JumpKind.LOSS: 0}
        for ev in self.events:
            c[ev.kind] += 1
        return c


def _trajectory_rng(master_seed: int, traj_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[master_seed, traj_index]))


def mean_stderr(values) -> tuple[float, float]:
    """Sample mean and standard error (stddev/sqrt(M), ddof=1; 0 for M=1)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("empty sample")
    mean = float(v.mean())
    stderr = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return mean, stderr


def _check_guards(table: RateTable, cfg: ModelConfig, dt: float):
    gmax = float((table.gamma_down + table.gamma_up).max())
    if dt * gmax > 0.1:
        raise RefusalError(
            f"stability guard: dt*(gamma_down+gamma_up) reaches {dt * gmax:.4g} > 0.1"
        )
    if cfg.gamma_loss > 0:
        lmax = dt * cfg.gamma_loss * float(table.expected_e.max())
        if lmax > 0.1:
            raise RefusalError(f"stability guard: dt*gamma_loss*max<E> = {lmax:.4g} > 0.1")


def drift_step(state: TrajectoryState, table: RateTable, cfg: ModelConfig,
               dt: float) -> QubitPureState:
    """One explicit Euler step of the normalized no-jump evolution."""
    off = table.grid.offset(state.e_index)
    g_up = float(table.gamma_up[off])
    g_dn = float(table.gamma_down[off])
    if dt * (g_up + g_dn) > 0.1:
        raise RefusalError(
            f"stability guard: dt*(gamma_down+gamma_up) = {dt * (g_up + g_dn):.4g} > 0.1"
        )
    gr, gi = state.psi.cg.real, state.psi.cg.imag
    er, ei = state.psi.ce.real, state.psi.ce.imag
    pg = gr * gr + gi * gi
    pe = er * er + ei * ei
    lam = cfg.lambda_drive
    a = 0.5 * (g_dn * pe - g_up * (1.0 - pg))
    b = 0.5 * (g_up * pg - g_dn * (1.0 - pe))
    ngr = gr + dt * (lam * ei + a * gr)
    ngi = gi + dt * (-lam * er + a * gi)
    ner = er + dt * (lam * gi + b * er)
    nei = ei + dt * (-lam * gr + b * ei)
    inv = 1.0 / math.sqrt(ngr * ngr + ngi * ngi + ner * ner + nei * nei)
    return QubitPureState(complex(ngr * inv, ngi * inv), complex(ner * inv, nei * inv))


def advance(state: TrajectoryState, table: RateTable, cfg: ModelConfig, dt: float,
            rng) -> tuple:
    """One stochastic step: draws one uniform, fires at most one event.

    Returns (new_state, JumpEvent | None). `rng` is anything with a
    .random() method returning a uniform in [0, 1).
    """
    off = table.grid.offset(state.e_index)
    g_up = float(table.gamma_up[off])
    g_dn = float(table.gamma_down[off])
    if dt * (g_up + g_dn) > 0.1:
        raise RefusalError(
            f"stability guard: dt*(gamma_down+gamma_up) = {dt * (g_up + g_dn):.4g} > 0.1"
        )
    if cfg.gamma_loss > 0:
        pl = dt * cfg.gamma_loss * float(table.expected_e[off])
        if pl > 0.1:
            raise RefusalError(f"stability guard: dt*gamma_loss*<E> = {pl:.4g} > 0.1")

    u = float(rng.random())
    uniforms = np.array([u])
    samp_cg = np.empty(2, dtype=complex)
    samp_ce = np.empty(2, dtype=complex)
    samp_e = np.empty(2, dtype=np.int64)
    ev_step = np.empty(4, dtype=np.int64)
    ev_kind = np.empty(4, dtype=np.int8)
    ev_e_after = np.empty(4, dtype=np.int64)
    status, steps_done, n_ev, _, _, gr, gi, er, ei, e_off = kernels.run_steps(
        state.psi.cg.real, state.psi.cg.imag, state.psi.ce.real, state.psi.ce.imag,
        off, table.gamma_up, table.gamma_down, table.expected_e,
        cfg.lambda_drive, cfg.gamma_loss, dt, 1, 1, 0, uniforms,
        samp_cg, samp_ce, samp_e, ev_step, ev_kind, ev_e_after,
    )
    if status == kernels.STATUS_ESCAPE_HIGH or status == kernels.STATUS_ESCAPE_LOW:
        raise GridEscapeError(
            f"energy index left grid [{table.grid.n_min}, {table.grid.n_max}] "
            f"at t={state.t:.6g}"
        )
    new_state = TrajectoryState(
        psi=QubitPureState(complex(gr, gi), complex(er, ei)),
        e_index=table.grid.n_min + e_off,
        t=state.t + dt,
    )
    event = None
    if n_ev:
        event = JumpEvent(time=state.t + dt, kind=_KIND_BY_CODE[int(ev_kind[0])],
                          e_index_after=table.grid.n_min + int(ev_e_after[0]))
    return new_state, event


@dataclass
class _RawRun:
    steps_done: int
    n_ev: int
    ev_step: np.ndarray
    ev_kind: np.ndarray
    ev_e_after: np.ndarray
    samp_cg: np.ndarray
    samp_ce: np.ndarray
    samp_e: np.ndarray
    n_samp: int
    floor_suppressed: int
    final_psi: QubitPureState
    final_e_off: int


def _run_kernel_once(psi: QubitPureState, e_off: int, table: RateTable,
                     cfg: ModelConfig, dt: float, n_steps: int, sample_stride: int,
                     max_events: int, uniforms: np.ndarray,
                     master_seed: int, traj_index: int) -> _RawRun:
    nsamp_cap = n_steps // sample_stride + 2
    exp_ev = dt * n_steps * (
        float(table.gamma_down[e_off] + table.gamma_up[e_off])
        + cfg.gamma_loss * float(table.expected_e[e_off])
    )
    cap = max(64, int(2.0 * exp_ev + 10.0 * math.sqrt(exp_ev + 1.0) + 32))
    if max_events > 0:
        cap = max_events
    while True:
        samp_cg = np.empty(nsamp_cap, dtype=complex)
        samp_ce = np.empty(nsamp_cap, dtype=complex)
        samp_e = np.empty(nsamp_cap, dtype=np.int64)
        ev_step = np.empty(cap, dtype=np.int64)
        ev_kind = np.empty(cap, dtype=np.int8)
        ev_e_after = np.empty(cap, dtype=np.int64)
        status, steps_done, n_ev, n_samp, suppressed, gr, gi, er, ei, e_off_out = (
            kernels.run_steps(
                psi.cg.real, psi.cg.imag, psi.ce.real, psi.ce.imag, e_off,
                table.gamma_up, table.gamma_down, table.expected_e,
                cfg.lambda_drive, cfg.gamma_loss, dt, n_steps, sample_stride,
                max_events, uniforms,
                samp_cg, samp_ce, samp_e, ev_step, ev_kind, ev_e_after,
            )
        )
        if status == kernels.STATUS_EVENT_OVERFLOW:
            cap *= 2
            continue
        if status in (kernels.STATUS_ESCAPE_HIGH, kernels.STATUS_ESCAPE_LOW):
            side = "above" if status == kernels.STATUS_ESCAPE_HIGH else "below"
            raise GridEscapeError(
                f"trajectory (master_seed={master_seed}, index={traj_index}) escaped "
                f"{side} grid [{table.grid.n_min}, {table.grid.n_max}] at "
                f"t={(steps_done + 1) * dt:.6g}"
            )
        return _RawRun(
            steps_done=steps_done, n_ev=n_ev,
            ev_step=ev_step[:n_ev].copy(), ev_kind=ev_kind[:n_ev].copy(),
            ev_e_after=ev_e_after[:n_ev].copy(),
            samp_cg=samp_cg[:n_samp].copy(), samp_ce=samp_ce[:n_samp].copy(),
            samp_e=samp_e[:n_samp].copy(), n_samp=n_samp,
            floor_suppressed=suppressed,
            final_psi=QubitPureState(complex(gr, gi), complex(er, ei)),
            final_e_off=e_off_out,
        )


def run_trajectory(cfg: ModelConfig, init: TrajectoryState, table: RateTable,
                   dt: float, t_final: float, seed: int,
                   sample_stride: int = 1, traj_index: int = 0) -> TrajectoryRecord:
    """Simulate one seeded realization from init.t to t_final."""
    if dt <= 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    _check_guards(table, cfg, dt)
    n_steps = int(round((t_final - init.t) / dt))
    if n_steps < 0:
        raise DomainError("t_final is before the initial time")
    e_off = table.grid.offset(init.e_index)
    psi = init.psi.normalized()
    uniforms = _trajectory_rng(seed, traj_index).random(n_steps)
    raw = _run_kernel_once(psi, e_off, table, cfg, dt, n_steps, sample_stride,
                           0, uniforms, seed, traj_index)
    n_min = table.grid.n_min
    events = tuple(
        JumpEvent(time=init.t + (int(s) + 1) * dt, kind=_KIND_BY_CODE[int(k)],
                  e_index_after=n_min + int(e))
        for s, k, e in zip(raw.ev_step, raw.ev_kind, raw.ev_e_after)
    )
    sample_times = init.t + dt * sample_stride * np.arange(raw.n_samp)
    return TrajectoryRecord(
        config=cfg, master_seed=seed, traj_index=traj_index, dt=dt,
        sample_stride=sample_stride, events=events,
        sample_times=sample_times, sample_cg=raw.samp_cg, sample_ce=raw.samp_ce,
        sample_e=raw.samp_e + n_min, e_init=init.e_index,
        e_final=n_min + raw.final_e_off, psi_final=raw.final_psi,
        t_final=init.t + raw.steps_done * dt,
        floor_suppressed=raw.floor_suppressed,
    )


def default_workers() -> int:
    env = os.environ.get("CALOJUMP_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise RefusalError(f"CALOJUMP_WORKERS must be an integer, got {env!r}")
        if n < 1:
            raise RefusalError("CALOJUMP_WORKERS must be >= 1")
        return n
    return 1


@dataclass(frozen=True)
class EnsembleSeries:
    """Time series of ensemble statistics on the shared sampling comb."""

    times: np.ndarray
    n_traj: int
    mean_excited: np.ndarray
    stderr_excited: np.ndarray
    mean_e: np.ndarray
    stderr_e: np.ndarray
    hist_probs: np.ndarray  # (S, G) over grid offsets
    hist_stderr: np.ndarray
    n_min: int


@dataclass(frozen=True)
class EnsembleResult:
    """Per-trajectory reductions of an ensemble run (rows ordered by
    trajectory index)."""

    config: ModelConfig
    master_seed: int
    dt: float
    sample_stride: int
    n_steps: int
    sample_times: np.ndarray
    pe: np.ndarray  # (M, S) excited population at sample times
    e: np.ndarray  # (M, S) measured energy index at sample times
    delta_e: np.ndarray  # (M,)
    n_down: np.ndarray
    n_up: np.ndarray
    n_loss: np.ndarray
    floor_suppressed: np.ndarray
    n_min: int
    n_max: int
    records: tuple = field(default=(), repr=False)

    def statistics(self) -> EnsembleSeries:
        return _series_from_matrices(self.sample_times, self.pe, self.e,
                                     self.n_min, self.n_max)


def _series_from_matrices(times, pe, e_mat, n_min, n_max) -> EnsembleSeries:
    m = pe.shape[0]
    mean_pe = pe.mean(axis=0)
    mean_e = e_mat.mean(axis=0)
    if m > 1:
        se_pe = pe.std(axis=0, ddof=1) / math.sqrt(m)
        se_e = e_mat.std(axis=0, ddof=1) / math.sqrt(m)
    else:
        se_pe = np.zeros_like(mean_pe)
        se_e = np.zeros_like(mean_e)
    size = n_max - n_min + 1
    counts = np.zeros((times.size, size), dtype=np.int64)
    off = e_mat - n_min
    for s in range(times.size):
        counts[s] = np.bincount(off[:, s], minlength=size)
    probs = counts / m
    hist_se = np.sqrt(probs * (1.0 - probs) / m)
    return EnsembleSeries(times=times, n_traj=m, mean_excited=mean_pe,
                          stderr_excited=se_pe, mean_e=mean_e, stderr_e=se_e,
                          hist_probs=probs, hist_stderr=hist_se, n_min=n_min)


def run_ensemble(cfg: ModelConfig, table: RateTable, init: TrajectoryState,
                 dt: float, t_final: float, master_seed: int, n_traj: int,
                 sample_stride: int, workers: int | None = None,
                 keep_records: bool = False) -> EnsembleResult:
    """Run n_traj independent trajectories (Philox streams keyed by index)
    and reduce them in index order."""
    if n_traj < 1:
        raise DomainError("n_traj must be >= 1")
    _check_guards(table, cfg, dt)
    workers = workers or default_workers()
    n_steps = int(round((t_final - init.t) / dt))
    # samples at steps 0, stride, 2*stride, ... plus the post-final state
    # when n_steps is a stride multiple: always n_steps // stride + 1 of them
    n_samp = n_steps // sample_stride + 1
    times = init.t + dt * sample_stride * np.arange(n_samp)
    e_off0 = table.grid.offset(init.e_index)
    psi0 = init.psi.normalized()

    pe = np.empty((n_traj, n_samp))
    e_mat = np.empty((n_traj, n_samp), dtype=np.int64)
    delta_e = np.empty(n_traj, dtype=np.int64)
    n_down = np.empty(n_traj, dtype=np.int64)
    n_up = np.empty(n_traj, dtype=np.int64)
    n_loss = np.empty(n_traj, dtype=np.int64)
    suppressed = np.empty(n_traj, dtype=np.int64)
    records = [None] * n_traj if keep_records else None

    def work(j: int):
        uniforms = _trajectory_rng(master_seed, j).random(n_steps)
        raw = _run_kernel_once(psi0, e_off0, table, cfg, dt, n_steps,
                               sample_stride, 0, uniforms, master_seed, j)
        if raw.n_samp != n_samp:
            raise DomainError(
                f"sample count mismatch: {raw.n_samp} != {n_samp}"
            )
        ce = raw.samp_ce
        pe[j] = ce.real**2 + ce.imag**2
        e_mat[j] = raw.samp_e + table.grid.n_min
        delta_e[j] = (table.grid.n_min + raw.final_e_off) - init.e_index
        n_down[j] = int((raw.ev_kind == kernels.EV_DOWN).sum())
        n_up[j] = int((raw.ev_kind == kernels.EV_UP).sum())
        n_loss[j] = int((raw.ev_kind == kernels.EV_LOSS).sum())
        suppressed[j] = raw.floor_suppressed
        if keep_records:
            n_min = table.grid.n_min
            events = tuple(
                JumpEvent(time=init.t + (int(s) + 1) * dt,
                          kind=_KIND_BY_CODE[int(k)], e_index_after=n_min + int(e))
                for s, k, e in zip(raw.ev_step, raw.ev_kind, raw.ev_e_after)
            )
            records[j] = TrajectoryRecord(
                config=cfg, master_seed=master_seed, traj_index=j, dt=dt,
                sample_stride=sample_stride, events=events,
                sample_times=times.copy(), sample_cg=raw.samp_cg,
                sample_ce=raw.samp_ce, sample_e=raw.samp_e + n_min,
                e_init=init.e_index, e_final=n_min + raw.final_e_off,
                psi_final=raw.final_psi, t_final=init.t + raw.steps_done * dt,
                floor_suppressed=raw.floor_suppressed,
            )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(n_traj)))
    else:
        for j in range(n_traj):
            work(j)

    return EnsembleResult(
        config=cfg, master_seed=master_seed, dt=dt, sample_stride=sample_stride,
        n_steps=n_steps, sample_times=times, pe=pe, e=e_mat, delta_e=delta_e,
        n_down=n_down, n_up=n_up, n_loss=n_loss, floor_suppressed=suppressed,
        n_min=table.grid.n_min, n_max=table.grid.n_max,
        records=tuple(records) if keep_records else (),
    )


def ensemble_statistics(records, sample_times=None) -> EnsembleSeries:
    """Unbiased ensemble means and standard errors over a record collection.

    All records must share config, dt, stride and sampling comb; mixed
    collections are rejected.
    """
    records = list(records)
    if not records:
        raise DomainError("empty record collection")
    ref = records[0]
    for r in records[1:]:
        if (r.config != ref.config or r.dt != ref.dt
                or r.sample_stride != ref.sample_stride
                or r.sample_times.shape != ref.sample_times.shape
                or not np.array_equal(r.sample_times, ref.sample_times)):
            raise DomainError("records with mixed config or sampling combs")
    times = ref.sample_times
    if sample_times is not None:
        sel = np.searchsorted(times, sample_times)
        if np.any(sel >= times.size) or np.any(~np.isclose(times[sel], sample_times)):
            raise DomainError("requested sample times not on the record comb")
    else:
        sel = np.arange(times.size)
    pe = np.stack([np.abs(r.sample_ce[sel]) ** 2 for r in records])
    e_mat = np.stack([r.sample_e[sel] for r in records])
    n_min = int(e_mat.min())
    n_max = int(e_mat.max())
    return _series_from_matrices(times[sel], pe, e_mat, n_min, n_max)


def first_event_times(cfg: ModelConfig, table: RateTable, init: TrajectoryState,
                      dt: float, t_final: float, master_seed: int,
                      n_traj: int) -> np.ndarray:
    """Time of the first jump for each trajectory (NaN if none fired)."""
    _check_guards(table, cfg, dt)
    n_steps = int(round((t_final - init.t) / dt))
    e_off0 = table.grid.offset(init.e_index)
    psi0 = init.psi.normalized()
    out = np.full(n_traj, np.nan)
    for j in range(n_traj):
        uniforms = _trajectory_rng(master_seed, j).random(n_steps)
        raw = _run_kernel_once(psi0, e_off0, table, cfg, dt, n_steps,
                               max(1, n_steps), 1, uniforms, master_seed, j)
        if raw.n_ev:
            out[j] = init.t + (int(raw.ev_step[0]) + 1) * dt
    return out


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_event_log_csv(record: TrajectoryRecord, out) -> None:
    """Event log: seed, t_omega, kind, e_index_after."""
    close = False
    if not hasattr(out, "write"):
        out = open(out, "w", newline="")
        close = True
    try:
        w = csv.writer(out)
        w.writerow(["seed", "t_omega", "kind", "e_index_after"])
        for ev in record.events:
            w.writerow([record.master_seed, _fmt(ev.time), ev.kind.value,
                        ev.e_index_after])
    finally:
        if close:
            out.close()


def write_ensemble_summary_csv(series: EnsembleSeries, out) -> None:
    """Summary: t_omega, mean_excited, stderr_excited, mean_E_over_omega,
    stderr_E_over_omega."""
    close = False
    if not hasattr(out, "write"):
        out = open(out, "w", newline="")
        close = True
    try:
        w = csv.writer(out)
        w.writerow(["t_omega", "mean_excited", "stderr_excited",
                    "mean_E_over_omega", "stderr_E_over_omega"])
        for i in range(series.times.size):
            w.writerow([_fmt(series.times[i]), _fmt(series.mean_excited[i]),
                        _fmt(series.stderr_excited[i]), _fmt(series.mean_e[i]),
                        _fmt(series.stderr_e[i])])
    finally:
        if close:
            out.close()
