"""Physical configuration, integer energy grid, and two-level linear algebra.

Conventions used throughout the package:

* basis order is (ground, excited); a pure state is psi = (c_g, c_e)
* all parameters are multiples of the qubit frequency omega, and all
  internal dynamics run in units with omega = 1 (times in 1/omega,
  rates in omega, k in omega^2)
* measured energies are stored as exact integer grid indices n with
  E = n * omega; the dynamics only ever shift n by +-1, so energy
  bookkeeping is pure integer arithmetic
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError

__all__ = [
    "ModelConfig",
    "EnergyGrid",
    "QubitPureState",
    "SIGMA_MINUS",
    "SIGMA_PLUS",
    "SIGMA_X",
    "PROJ_GROUND",
    "PROJ_EXCITED",
    "apply_sigma",
]

# 2x2 operators in the (ground, excited) basis
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |e><g|
SIGMA_X = SIGMA_MINUS + SIGMA_PLUS
PROJ_EXCITED = SIGMA_PLUS @ SIGMA_MINUS  # diag(0, 1)
PROJ_GROUND = SIGMA_MINUS @ SIGMA_PLUS  # diag(1, 0)

SIGMA_MINUS.setflags(write=False)
SIGMA_PLUS.setflags(write=False)
SIGMA_X.setflags(write=False)
PROJ_EXCITED.setflags(write=False)
PROJ_GROUND.setflags(write=False)


@dataclass(frozen=True)
class ModelConfig:
    """All physical parameters, as multiples of the qubit frequency.

    Attributes
    ----------
    omega : qubit / resonant-oscillator angular frequency (the energy unit)
    kappa : qubit-calorimeter coupling rate, units of omega
    lambda_drive : drive amplitude, units of omega (0 = undriven)
    n_osc : number of resonant calorimeter oscillators
    k_noise : measurement-noise variance parameter, units of omega^2
        (0 = perfect measurement)
    n_cutoff : noise-bath level cutoff N_C (levels n = -N_C .. N_C)
    gamma_loss : calorimeter loss rate, units of omega (0 = no loss)
    """

    omega: float = 1.0
    kappa: float = 0.001
    lambda_drive: float = 0.0
    n_osc: int = 10
    k_noise: float = 0.0
    n_cutoff: int = 100
    gamma_loss: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"omega must be > 0, got {self.omega}")
        if self.kappa < 0:
            raise DomainError(f"kappa must be >= 0, got {self.kappa}")
        if self.n_osc < 1 or int(self.n_osc) != self.n_osc:
            raise DomainError(f"n_osc must be a positive integer, got {self.n_osc}")
        if self.k_noise < 0:
            raise DomainError(f"k_noise must be >= 0, got {self.k_noise}")
        if self.n_cutoff < 0 or int(self.n_cutoff) != self.n_cutoff:
            raise DomainError(f"n_cutoff must be a non-negative integer, got {self.n_cutoff}")
        if self.gamma_loss < 0:
            raise DomainError(f"gamma_loss must be >= 0, got {self.gamma_loss}")
        object.__setattr__(self, "n_osc", int(self.n_osc))
        object.__setattr__(self, "n_cutoff", int(self.n_cutoff))

    def replace(self, **changes) -> "ModelConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class EnergyGrid:
    """Contiguous range of integer energy indices; E = n * omega at index n.

    The lower edge may be negative (measured energy includes noise-bath
    levels down to -n_cutoff) but never below it.
    """

    n_min: int
    n_max: int

    def __post_init__(self):
        if self.n_min > self.n_max:
            raise DomainError(f"empty grid [{self.n_min}, {self.n_max}]")

    def __len__(self) -> int:
        return self.n_max - self.n_min + 1

    def offset(self, n: int) -> int:
        """Array offset of grid index n (raises if outside the grid)."""
        if not self.n_min <= n <= self.n_max:
            raise DomainError(f"index {n} outside grid [{self.n_min}, {self.n_max}]")
        return n - self.n_min

    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def __contains__(self, n: int) -> bool:
        return self.n_min <= n <= self.n_max

    def validate_for(self, cfg: ModelConfig):
        """Check the grid against the noise-bath support of cfg."""
        floor = 0 if cfg.k_noise == 0 else -cfg.n_cutoff
        if self.n_min < floor:
            raise DomainError(
                f"grid floor {self.n_min} below the measurable minimum {floor} "
                f"(k={cfg.k_noise}, n_cutoff={cfg.n_cutoff})"
            )


@dataclass(frozen=True)
class QubitPureState:
    """Normalized two-component amplitude vector (c_g, c_e)."""

    cg: complex
    ce: complex

    @property
    def norm_sq(self) -> float:
        return abs(self.cg) ** 2 + abs(self.ce) ** 2

    @property
    def excited_population(self) -> float:
        return abs(self.ce) ** 2

    def normalized(self) -> "QubitPureState":
        nrm = np.sqrt(self.norm_sq)
        if nrm == 0:
            raise DomainError("cannot normalize the zero vector")
        return QubitPureState(self.cg / nrm, self.ce / nrm)

    def as_array(self) -> np.ndarray:
        return np.array([self.cg, self.ce], dtype=complex)

    def density_matrix(self) -> np.ndarray:
        v = self.as_array()
        return np.outer(v, v.conj())

    @staticmethod
    def ground() -> "QubitPureState":
        return QubitPureState(1.0 + 0.0j, 0.0j)

    @staticmethod
    def excited() -> "QubitPureState":
        return QubitPureState(0.0j, 1.0 + 0.0j)


def apply_sigma(direction: str, state) -> np.ndarray:
    """Apply a ladder operator to a (not necessarily normalized) 2-vector.

    "lower" maps (c_g, c_e) -> (c_e, 0); "raise" maps (c_g, c_e) -> (0, c_g).
    The squared norm of the result is the corresponding jump weight.
    """
    if isinstance(state, QubitPureState):
        cg, ce = state.cg, state.ce
    else:
        cg, ce = state[0], state[1]
    if direction == "lower":
        return np.array([ce, 0.0], dtype=complex)
    if direction == "raise":
        return np.array([0.0, cg], dtype=complex)
    raise DomainError(f"unknown ladder direction {direction!r}")
