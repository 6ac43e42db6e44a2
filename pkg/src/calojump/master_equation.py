"""Deterministic integrator for the energy-resolved qubit master equation.

The state is a family of unnormalized 2x2 blocks rho(n), one per measured
energy index n; tr rho(n) is the probability of measuring energy n*omega
and the total trace over the grid is 1. Per block, in the frame rotating
at the qubit frequency,

    d rho(n)/dt = -i [lam*(s+ + s-), rho(n)]
                  + gu(n+1) s+ rho(n+1) s-  -  gu(n)/2 {s- s+, rho(n)}
                  + gd(n-1) s- rho(n-1) s+  -  gd(n)/2 {s+ s-, rho(n)}

with out-of-grid neighbor blocks treated as zero. Emission moves
probability mass up the energy axis, absorption moves it down; the
interior flow conserves trace exactly and only grid truncation leaks.

Integration is fixed-step classical RK4 (a trace-preserving linear
generator stays trace-preserving under any Runge-Kutta combination), with
re-hermitization each step.
"""

import csv
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, RefusalError
from .model import EnergyGrid, ModelConfig, QubitPureState, SIGMA_X
from .rates import RateTable

__all__ = [
    "HybridState",
    "Observables",
    "apply_generator",
    "evolve",
    "observables",
    "write_series_csv",
    "write_distribution_csv",
]

_BOUNDARY_LEAK_TOL = 1e-10


@dataclass(frozen=True)
class HybridState:
    """Energy-indexed family of unnormalized qubit blocks, shape (G, 2, 2)."""

    grid: EnergyGrid
    blocks: np.ndarray

    def __post_init__(self):
        blocks = np.ascontiguousarray(self.blocks, dtype=complex)
        if blocks.shape != (len(self.grid), 2, 2):
            raise DomainError(
                f"blocks must have shape ({len(self.grid)}, 2, 2), got {blocks.shape}"
            )
        object.__setattr__(self, "blocks", blocks)

    @staticmethod
    def pure(grid: EnergyGrid, e_index: int, psi: QubitPureState) -> "HybridState":
        """All probability mass at one energy index, qubit in a pure state."""
        blocks = np.zeros((len(grid), 2, 2), dtype=complex)
        blocks[grid.offset(e_index)] = psi.density_matrix()
        return HybridState(grid=grid, blocks=blocks)

    def total_trace(self) -> float:
        return float(np.einsum("nii->", self.blocks).real)

    def validate(self, herm_tol=1e-12, eig_tol=1e-10, trace_tol=1e-8):
        """Hermiticity / positivity / normalization checks (raises on failure)."""
        b = self.blocks
        herm = np.max(np.abs(b - b.conj().transpose(0, 2, 1)))
        if herm > herm_tol:
            raise DomainError(f"block hermiticity violated by {herm:.3g}")
        if min_block_eigenvalue(self) < -eig_tol:
            raise DomainError(f"negative block eigenvalue {min_block_eigenvalue(self):.3g}")
        if abs(self.total_trace() - 1.0) > trace_tol:
            raise DomainError(f"total trace {self.total_trace()} differs from 1")


def min_block_eigenvalue(state: HybridState) -> float:
    """Smallest eigenvalue over all 2x2 blocks (closed form for hermitian 2x2)."""
    b = state.blocks
    a = b[:, 0, 0].real
    d = b[:, 1, 1].real
    off = np.abs(b[:, 0, 1])
    half_tr = 0.5 * (a + d)
    rad = np.sqrt((0.5 * (a - d)) ** 2 + off**2)
    return float(np.min(half_tr - rad))


class Observables(NamedTuple):
    total_trace: float
    excited_population: float
    energy_distribution: np.ndarray
    mean_measured_energy: float


def observables(state: HybridState) -> Observables:
    """Trace, excited-state population, measured-energy distribution and its
    mean (in units of omega, normalized by the total trace)."""
    dist = np.einsum("nii->n", state.blocks).real
    total = float(dist.sum())
    excited = float(state.blocks[:, 1, 1].real.sum())
    n = state.grid.indices()
    mean_e = float((n * dist).sum() / total) if total != 0 else 0.0
    return Observables(total, excited, dist, mean_e)


def _rate_views(state: HybridState, table: RateTable):
    if table.grid != state.grid:
        raise DomainError(
            f"state grid {state.grid} does not match rate-table grid {table.grid}"
        )
    return table.gamma_up, table.gamma_down


def apply_generator(state: HybridState, table: RateTable, cfg: ModelConfig,
                    t: float = 0.0) -> np.ndarray:
    """Right-hand side of the master equation; returns derivative blocks.

    The rotating-frame drive lam*(s+ + s-) is time-independent, so t is
    unused in this frame.
    """
    gu, gd = _rate_views(state, table)
    rho = state.blocks
    out = np.empty_like(rho)

    # -i [H, rho] with H = lambda * sigma_x
    if cfg.lambda_drive != 0.0:
        h = cfg.lambda_drive * SIGMA_X
        np.matmul(h, rho, out=out)
        out -= rho @ h
        out *= -1j
    else:
        out[:] = 0.0

    # gain from the block one energy step above: absorption (s+ rho s-)
    # maps (g,g) population up; s+ rho s- keeps only the gg entry at (e,e)
    out[:-1, 1, 1] += gu[1:] * rho[1:, 0, 0]
    # gain from one step below: emission (s- rho s+)
    out[1:, 0, 0] += gd[:-1] * rho[:-1, 1, 1]

    # anticommutator sinks; {P_g, rho} and {P_e, rho} written out per entry
    out[:, 0, 0] -= gu * rho[:, 0, 0]
    out[:, 1, 1] -= gd * rho[:, 1, 1]
    half = 0.5 * (gu + gd)
    out[:, 0, 1] -= half * rho[:, 0, 1]
    out[:, 1, 0] -= half * rho[:, 1, 0]
    return out


def evolve(state: HybridState, table: RateTable, cfg: ModelConfig, dt: float,
           steps: int, record_every: int = 0):
    """Fixed-step RK4 for `steps` steps of size dt.

    Refuses dt * max(gamma_down) > 0.1. With record_every = r > 0, returns
    (final_state, times, observables_rows) sampled every r steps (including
    t = 0 and, when steps is a multiple of r, the final time); otherwise
    returns the final state. Warns if the boundary blocks accumulate more
    than 1e-10 trace (grid too small for the horizon).
    """
    gmax = float(table.gamma_down.max())
    if dt * gmax > 0.1:
        raise RefusalError(
            f"stability guard: dt*max(gamma_down) = {dt * gmax:.4g} exceeds 0.1"
        )
    if steps < 0:
        raise DomainError("steps must be >= 0")

    rho = state.blocks.copy()
    shell = HybridState(grid=state.grid, blocks=rho)

    times, rows = [], []

    def record(i):
        times.append(i * dt)
        rows.append(observables(HybridState(grid=state.grid, blocks=rho)))

    def rhs(blocks):
        return apply_generator(
            HybridState(grid=state.grid, blocks=blocks), table, cfg
        )

    gu, gd = _rate_views(state, table)
    leaked = 0.0
    for i in range(steps):
        if record_every and i % record_every == 0:
            record(i)
        k1 = rhs(rho)
        k2 = rhs(rho + (0.5 * dt) * k1)
        k3 = rhs(rho + (0.5 * dt) * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().transpose(0, 2, 1))
        # trace actually lost through the grid edges this step
        leaked += dt * (gd[-1] * rho[-1, 1, 1].real + gu[0] * rho[0, 0, 0].real)
    if record_every and steps % record_every == 0:
        record(steps)

    if leaked > _BOUNDARY_LEAK_TOL:
        warnings.warn(
            f"grid truncation leaked {leaked:.3g} trace (> {_BOUNDARY_LEAK_TOL:g}); "
            "enlarge the energy grid for this horizon",
            stacklevel=2,
        )

    final = HybridState(grid=state.grid, blocks=rho)
    if record_every:
        return final, np.array(times), rows
    return final


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_series_csv(times, rows, out) -> None:
    """Time series of scalar observables: t_omega, total_trace,
    excited_population, mean_E_over_omega."""
    close = False
    if not hasattr(out, "write"):
        out = open(out, "w", newline="")
        close = True
    try:
        w = csv.writer(out)
        w.writerow(["t_omega", "total_trace", "excited_population", "mean_E_over_omega"])
        for t, ob in zip(times, rows):
            w.writerow([_fmt(t), _fmt(ob.total_trace), _fmt(ob.excited_population),
                        _fmt(ob.mean_measured_energy)])
    finally:
        if close:
            out.close()


def write_distribution_csv(times, rows, grid: EnergyGrid, out) -> None:
    """Per-snapshot energy distribution: t_omega, n, prob."""
    close = False
    if not hasattr(out, "write"):
        out = open(out, "w", newline="")
        close = True
    try:
        w = csv.writer(out)
        w.writerow(["t_omega", "n", "prob"])
        for t, ob in zip(times, rows):
            for n, p in zip(range(grid.n_min, grid.n_max + 1), ob.energy_distribution):
                w.writerow([_fmt(t), n, _fmt(float(p))])
    finally:
        if close:
            out.close()
