"""Energy-conditioned jump rates under imperfect measurement, and their
precomputation over an energy grid.

At measured energy index e the absorption/emission rates are Gaussian-
weighted eigenspace averages of the resonant-mode traces,

    gamma_up(e)   = kappa * <occupation>_e / <count>_e
    gamma_down(e) = kappa * <antinormal>_e / <count>_e

and the expected calorimeter energy given the measurement is
expected_energy(e) = omega * <m * count>_e / <count>_e. For k = 0 (or a
single-term weight window) the ratios are exact: gamma_up = kappa*e,
gamma_down = kappa*(e + n_osc), expected_energy = e*omega.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .microstates import TraceKind, log_weighted_ratio, weight_window
from .model import EnergyGrid, ModelConfig

__all__ = [
    "rate_up",
    "rate_down",
    "expected_energy",
    "RateTable",
    "build_rate_table",
    "write_rate_table_csv",
]


def _trace_ratio(kind: TraceKind, e_index: int, cfg: ModelConfig) -> float:
    """exp(lws(kind) - lws(count)) with a bit-exact single-term shortcut."""
    m_lo, m_hi = weight_window(e_index, cfg)
    if m_lo == m_hi:
        # the weight cancels: ratio of exact integer traces
        if kind in (TraceKind.OCCUPATION, TraceKind.ENERGY_WEIGHTED):
            return float(m_lo)
        if kind is TraceKind.ANTINORMAL:
            return float(m_lo + cfg.n_osc)
        return 1.0
    log_ratio = log_weighted_ratio(kind, e_index, cfg)
    if log_ratio == -math.inf:
        return 0.0
    return math.exp(log_ratio)


def rate_up(e_index: int, cfg: ModelConfig) -> float:
    """Qubit absorption rate at measured energy index e, units of omega."""
    return cfg.kappa * _trace_ratio(TraceKind.OCCUPATION, e_index, cfg)


def rate_down(e_index: int, cfg: ModelConfig) -> float:
    """Qubit emission rate at measured energy index e, units of omega."""
    return cfg.kappa * _trace_ratio(TraceKind.ANTINORMAL, e_index, cfg)


def expected_energy(e_index: int, cfg: ModelConfig) -> float:
    """Expected calorimeter energy given measured index e, units of omega.

    Multiply by cfg.omega for physical units; internally everything stays
    in multiples of omega.
    """
    return _trace_ratio(TraceKind.ENERGY_WEIGHTED, e_index, cfg)


@dataclass(frozen=True)
class RateTable:
    """Immutable per-grid-index tables of gamma_up, gamma_down and the
    conditional expected energy. Shared read-only by trajectory workers."""

    grid: EnergyGrid
    gamma_up: np.ndarray
    gamma_down: np.ndarray
    expected_e: np.ndarray
    config: ModelConfig = field(repr=False)

    def __post_init__(self):
        n = len(self.grid)
        for name in ("gamma_up", "gamma_down", "expected_e"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise DomainError(f"{name} must have shape ({n},), got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.gamma_up < 0):
            raise DomainError("gamma_up must be non-negative")
        if self.config.kappa > 0 and not np.all(self.gamma_down > 0):
            raise DomainError("gamma_down must be positive")

    def up(self, n: int) -> float:
        return float(self.gamma_up[self.grid.offset(n)])

    def down(self, n: int) -> float:
        return float(self.gamma_down[self.grid.offset(n)])

    def mean_energy(self, n: int) -> float:
        return float(self.expected_e[self.grid.offset(n)])


def build_rate_table(cfg: ModelConfig, grid: EnergyGrid) -> RateTable:
    """Evaluate the three rate functions at every grid index."""
    grid.validate_for(cfg)
    idx = range(grid.n_min, grid.n_max + 1)
    gu = np.array([rate_up(e, cfg) for e in idx])
    gd = np.array([rate_down(e, cfg) for e in idx])
    ee = np.array([expected_energy(e, cfg) for e in idx])
    return RateTable(grid=grid, gamma_up=gu, gamma_down=gd, expected_e=ee, config=cfg)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_rate_table_csv(table: RateTable, out) -> None:
    """Write a rate table as CSV (one row per grid index, header mandatory).

    `out` is a file path or a text file object.
    """
    close = False
    if not hasattr(out, "write"):
        out = open(out, "w", newline="")
        close = True
    try:
        w = csv.writer(out)
        w.writerow(["n", "E_over_omega", "gamma_up_over_omega", "gamma_down_over_omega",
                    "expected_E_over_omega"])
        for i, n in enumerate(range(table.grid.n_min, table.grid.n_max + 1)):
            w.writerow([
                n,
                _fmt(float(n)),
                _fmt(table.gamma_up[i]),
                _fmt(table.gamma_down[i]),
                _fmt(table.expected_e[i]),
            ])
    finally:
        if close:
            out.close()


def rate_table_csv_text(table: RateTable) -> str:
    buf = io.StringIO()
    write_rate_table_csv(table, buf)
    return buf.getvalue()
