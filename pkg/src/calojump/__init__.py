"""calojump: jump-trajectory and hybrid master-equation simulator for a
driven qubit read out through a noisy finite calorimeter."""

__version__ = "0.1.0"

from .errors import (
    CalojumpError,
    DomainError,
    GridEscapeError,
    RefusalError,
    StationarityError,
    UsageError,
)
from .kernels import backend
from .master_equation import HybridState, apply_generator, evolve, observables
from .microstates import (
    TraceKind,
    fock_enumeration_oracle,
    log_multiplicity,
    log_trace,
    log_weighted_sum,
)
from .model import EnergyGrid, ModelConfig, QubitPureState, apply_sigma
from .rates import (
    RateTable,
    build_rate_table,
    expected_energy,
    rate_down,
    rate_up,
    write_rate_table_csv,
)
from .trajectory import (
    JumpEvent,
    JumpKind,
    TrajectoryRecord,
    TrajectoryState,
    advance,
    drift_step,
    ensemble_statistics,
    run_ensemble,
    run_trajectory,
)

__all__ = [
    "__version__",
    "backend",
    "CalojumpError", "DomainError", "GridEscapeError", "RefusalError",
    "StationarityError", "UsageError",
    "ModelConfig", "EnergyGrid", "QubitPureState", "apply_sigma",
    "TraceKind", "log_multiplicity", "log_trace", "fock_enumeration_oracle",
    "log_weighted_sum",
    "rate_up", "rate_down", "expected_energy", "RateTable", "build_rate_table",
    "write_rate_table_csv",
    "HybridState", "apply_generator", "evolve", "observables",
    "TrajectoryState", "JumpKind", "JumpEvent", "TrajectoryRecord",
    "drift_step", "advance", "run_trajectory", "run_ensemble",
    "ensemble_statistics",
]
