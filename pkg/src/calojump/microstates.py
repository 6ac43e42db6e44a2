"""Microstate counting for a calorimeter of N resonant oscillators, and the
Gaussian-weighted sums over calorimeter energies that define the
imperfect-measurement quantities. Everything is computed in log space.

With n quanta spread over N modes the energy eigenspace sizes and the
resonant-mode traces are

    count(n)        = C(n+N-1, N-1)
    occupation(n)   = n (n+N-1 choose N-1)        (a_dag a inside the eigenspace)
    antinormal(n)   = (n+N) (n+N-1 choose N-1)    (a a_dag inside the eigenspace)

The imperfect measurement of energy index e mixes calorimeter indices m
with Gaussian weight exp(-(e-m)^2 omega^2 / k), restricted to the physical
support m >= 0 and the noise-bath support |e-m| <= n_cutoff.
"""

import enum
import math
import threading
from itertools import combinations

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, RefusalError
from .model import ModelConfig

__all__ = [
    "TraceKind",
    "log_multiplicity",
    "log_trace",
    "fock_enumeration_oracle",
    "weight_window",
    "log_weighted_sum",
]

# exact big-integer binomials are used while the small side of the binomial
# stays below this; beyond it fall back to the lgamma difference
_EXACT_COMB_LIMIT = 10_000


class TraceKind(enum.Enum):
    COUNT = "count"
    OCCUPATION = "occupation"
    ANTINORMAL = "antinormal"
    ENERGY_WEIGHTED = "energy_weighted"


# per-N growable tables of ln C(n+N-1, N-1); prefix of each list is immutable,
# growth is serialized by _memo_lock so concurrent readers are safe
_memo: dict[int, list[float]] = {}
_memo_lock = threading.Lock()


def log_multiplicity(n: int, n_osc: int) -> float:
    """ln of the number of microstates of n quanta in n_osc modes.

    Equals ln C(n+N-1, N-1), with N = n_osc. Computed from the exact
    big-integer binomial (log-gamma is only accurate to ~2e-9 absolute at
    arguments near 1e6); the plain log-gamma difference covers inputs whose
    binomial is too expensive to materialize. Raises DomainError for n < 0
    or n_osc < 1.
    """
    if n < 0:
        raise DomainError(f"quantum number must be >= 0, got {n}")
    if n_osc < 1:
        raise DomainError(f"oscillator count must be >= 1, got {n_osc}")
    if min(n, n_osc - 1) > _EXACT_COMB_LIMIT:
        return math.lgamma(n + n_osc) - math.lgamma(n + 1) - math.lgamma(n_osc)
    table = _memo.get(n_osc)
    if table is None or n >= len(table):
        with _memo_lock:
            table = _memo.setdefault(n_osc, [0.0])
            if n >= len(table):
                # exact integer recurrence C(m+N-1, N-1) = C(m+N-2, N-1) (m+N-1)/m
                c = math.comb(len(table) - 1 + n_osc - 1, n_osc - 1)
                for m in range(len(table), n + 1):
                    c = c * (m + n_osc - 1) // m
                    table.append(math.log(c))
    return table[n]


def log_trace(kind: TraceKind, n: int, n_osc: int) -> float:
    """ln of the chosen eigenspace trace; -inf where the trace vanishes."""
    lc = log_multiplicity(n, n_osc)
    if kind is TraceKind.COUNT:
        return lc
    if kind in (TraceKind.OCCUPATION, TraceKind.ENERGY_WEIGHTED):
        return -math.inf if n == 0 else math.log(n) + lc
    if kind is TraceKind.ANTINORMAL:
        return math.log(n + n_osc) + lc
    raise DomainError(f"unknown trace kind {kind!r}")


def _compositions(n: int, parts: int):
    """All ordered tuples of `parts` non-negative ints summing to n."""
    for bars in combinations(range(n + parts - 1), parts - 1):
        prev = -1
        tup = []
        for b in bars:
            tup.append(b - prev - 1)
            prev = b
        tup.append(n + parts - 2 - prev)
        yield tuple(tup)


def fock_enumeration_oracle(n: int, n_osc: int) -> tuple[int, int, int]:
    """Exhaustively enumerate occupation tuples; exact-integer cross-check
    for the closed-form traces.

    Returns (count, occupation_sum, antinormal_sum) where occupation_sum is
    the per-mode occupation total of a fixed mode times n_osc (the collective
    resonant-mode convention) and antinormal_sum = occupation_sum +
    n_osc * count. Refuses n > 12 or n_osc > 5.
    """
    if n < 0 or n_osc < 1:
        raise DomainError(f"invalid enumeration input n={n}, n_osc={n_osc}")
    if n > 12 or n_osc > 5:
        raise RefusalError(f"enumeration bounds are n <= 12 and n_osc <= 5, got ({n}, {n_osc})")
    count = 0
    first_mode_total = 0
    if n_osc == 1:
        count, first_mode_total = 1, n
    else:
        for tup in _compositions(n, n_osc):
            count += 1
            first_mode_total += tup[0]
    occupation_sum = first_mode_total * n_osc
    return count, occupation_sum, occupation_sum + n_osc * count


def weight_window(e_index: int, cfg: ModelConfig) -> tuple[int, int]:
    """Calorimeter-index range [m_lo, m_hi] contributing to measured index e:
    the intersection of m >= 0 with the noise support |e - m| <= n_cutoff.
    """
    if cfg.k_noise == 0:
        if e_index < 0:
            raise DomainError(f"perfect measurement cannot see negative energy index {e_index}")
        return e_index, e_index
    m_lo = max(0, e_index - cfg.n_cutoff)
    m_hi = e_index + cfg.n_cutoff
    if m_hi < 0:
        raise DomainError(
            f"measured index {e_index} below the noise-bath floor -{cfg.n_cutoff}"
        )
    return m_lo, m_hi


def _log_trace_window(kind: TraceKind, m_lo: int, m_hi: int, n_osc: int) -> np.ndarray:
    log_multiplicity(m_hi, n_osc)  # grow the memo table once
    table = _memo[n_osc]
    lc = np.array(table[m_lo : m_hi + 1])
    if kind is TraceKind.COUNT:
        return lc
    m = np.arange(m_lo, m_hi + 1, dtype=float)
    with np.errstate(divide="ignore"):  # log(0) at m = 0 is the intended -inf
        if kind in (TraceKind.OCCUPATION, TraceKind.ENERGY_WEIGHTED):
            return np.log(m) + lc
        if kind is TraceKind.ANTINORMAL:
            return np.log(m + n_osc) + lc
    raise DomainError(f"unknown trace kind {kind!r}")


def log_weighted_sum(kind: TraceKind, e_index: int, cfg: ModelConfig) -> float:
    """ln sum_m trace_kind(m) exp(-(e-m)^2 omega^2 / k) over the weight window.

    For k = 0 the sum collapses to the single term m = e_index. Evaluated by
    log-sum-exp; -inf terms (vanishing traces) drop out naturally.
    """
    m_lo, m_hi = weight_window(e_index, cfg)
    if cfg.k_noise == 0:
        return log_trace(kind, e_index, cfg.n_osc)
    terms = _log_trace_window(kind, m_lo, m_hi, cfg.n_osc)
    m = np.arange(m_lo, m_hi + 1, dtype=float)
    log_w = -((e_index - m) ** 2) / cfg.k_noise  # energies in units of omega
    return float(logsumexp(terms + log_w))


def log_weighted_ratio(kind: TraceKind, e_index: int, cfg: ModelConfig) -> float:
    """lws(kind) - lws(count), computed with the weights rescaled by their
    maximum. The rescaling cancels in the ratio exactly, avoiding the
    catastrophic cancellation of two huge log-sums when the Gaussian
    exponents are extreme (e.g. far-off-support e at tiny k)."""
    m_lo, m_hi = weight_window(e_index, cfg)
    if cfg.k_noise == 0:
        return log_trace(kind, e_index, cfg.n_osc) - log_trace(TraceKind.COUNT,
                                                               e_index, cfg.n_osc)
    m = np.arange(m_lo, m_hi + 1, dtype=float)
    log_w = -((e_index - m) ** 2) / cfg.k_noise
    log_w -= log_w.max()
    num = logsumexp(_log_trace_window(kind, m_lo, m_hi, cfg.n_osc) + log_w)
    den = logsumexp(_log_trace_window(TraceKind.COUNT, m_lo, m_hi, cfg.n_osc) + log_w)
    return float(num - den)
