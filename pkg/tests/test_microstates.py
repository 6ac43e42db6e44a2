import math
from itertools import product

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calojump import (
    DomainError,
    ModelConfig,
    RefusalError,
    TraceKind,
    fock_enumeration_oracle,
    log_multiplicity,
    log_trace,
    log_weighted_sum,
)
from calojump.microstates import weight_window


def brute_force_tuples(n, n_modes):
    """Independent enumeration used only by the tests."""
    tuples = [t for t in product(range(n + 1), repeat=n_modes) if sum(t) == n]
    count = len(tuples)
    first_mode = sum(t[0] for t in tuples)
    return count, first_mode * n_modes, first_mode * n_modes + n_modes * count


class TestLogMultiplicity:
    def test_vacuum_unique(self):
        for n_osc in (1, 2, 7, 100):
            assert log_multiplicity(0, n_osc) == 0.0

    def test_single_quantum(self):
        assert log_multiplicity(1, 7) == pytest.approx(math.log(7), abs=1e-14)

    def test_two_quanta_three_modes(self):
        count, _, _ = brute_force_tuples(2, 3)
        assert count == 6
        assert log_multiplicity(2, 3) == pytest.approx(math.log(6), abs=1e-13)

    @pytest.mark.parametrize("bad", [(-1, 3), (2, 0), (5, -1)])
    def test_domain_errors(self, bad):
        with pytest.raises(DomainError):
            log_multiplicity(*bad)

    @pytest.mark.parametrize("n,n_osc", [
        (10**5, 10), (10**5, 1000), (999_000, 1000), (54_321, 321),
        (10**6 - 7, 7), (12, 999_988),
    ])
    def test_absolute_error_vs_mpmath(self, n, n_osc):
        # spec bound: absolute error <= 1e-10 for n + N <= 1e6
        exact = float(mpmath.log(mpmath.binomial(n + n_osc - 1, n_osc - 1)))
        assert abs(log_multiplicity(n, n_osc) - exact) <= 1e-10

    def test_memo_reuse_consistent(self):
        a = log_multiplicity(50, 6)
        b = log_multiplicity(50, 6)
        assert a == b
        # growing past the old table end keeps earlier entries identical
        log_multiplicity(500, 6)
        assert log_multiplicity(50, 6) == a


class TestLogTrace:
    def test_occupation_vacuum_is_minus_inf(self):
        assert log_trace(TraceKind.OCCUPATION, 0, 5) == -math.inf
        assert log_trace(TraceKind.ENERGY_WEIGHTED, 0, 5) == -math.inf

    def test_antinormal_vacuum(self):
        assert log_trace(TraceKind.ANTINORMAL, 0, 5) == pytest.approx(math.log(5), abs=1e-14)

    def test_occupation_two_quanta_three_modes(self):
        _, occ, _ = brute_force_tuples(2, 3)
        assert occ == 12
        assert log_trace(TraceKind.OCCUPATION, 2, 3) == pytest.approx(math.log(12), abs=1e-13)

    @given(st.integers(0, 12), st.integers(1, 5))
    def test_matches_enumeration(self, n, n_osc):
        count, occ, anti = fock_enumeration_oracle(n, n_osc)
        assert round(math.exp(log_trace(TraceKind.COUNT, n, n_osc))) == count
        if n == 0:
            assert log_trace(TraceKind.OCCUPATION, n, n_osc) == -math.inf
        else:
            assert round(math.exp(log_trace(TraceKind.OCCUPATION, n, n_osc))) == occ
        assert round(math.exp(log_trace(TraceKind.ANTINORMAL, n, n_osc))) == anti


class TestEnumerationOracle:
    @pytest.mark.parametrize("n,n_osc,expected", [
        (0, 3, (1, 0, 3)),
        (2, 3, (6, 12, 30)),
        (1, 2, (2, 2, 6)),
    ])
    def test_frozen_examples(self, n, n_osc, expected):
        assert fock_enumeration_oracle(n, n_osc) == expected

    @given(st.integers(0, 8), st.integers(1, 4))
    def test_against_independent_enumeration(self, n, n_osc):
        assert fock_enumeration_oracle(n, n_osc) == brute_force_tuples(n, n_osc)

    @pytest.mark.parametrize("bad", [(13, 3), (5, 6)])
    def test_bounds_refused(self, bad):
        with pytest.raises(RefusalError):
            fock_enumeration_oracle(*bad)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            fock_enumeration_oracle(-1, 2)


def direct_weighted_sum(kind, e_index, cfg):
    """Linear-space summation oracle (safe for small windows only)."""
    m_lo, m_hi = weight_window(e_index, cfg)
    total = 0.0
    for m in range(m_lo, m_hi + 1):
        count = math.comb(m + cfg.n_osc - 1, cfg.n_osc - 1)
        if kind is TraceKind.COUNT:
            trace = count
        elif kind in (TraceKind.OCCUPATION, TraceKind.ENERGY_WEIGHTED):
            trace = m * count
        else:
            trace = (m + cfg.n_osc) * count
        w = 1.0 if cfg.k_noise == 0 else math.exp(-((e_index - m) ** 2) / cfg.k_noise)
        total += trace * w
    return math.log(total) if total > 0 else -math.inf


class TestLogWeightedSum:
    def test_perfect_measurement_vacuum(self):
        cfg = ModelConfig(k_noise=0.0, n_cutoff=5, n_osc=3)
        assert log_weighted_sum(TraceKind.COUNT, 0, cfg) == 0.0

    def test_zero_cutoff_single_level(self):
        cfg = ModelConfig(k_noise=4.0, n_cutoff=0, n_osc=3)
        assert log_weighted_sum(TraceKind.COUNT, 0, cfg) == pytest.approx(0.0, abs=1e-14)

    def test_three_term_hand_sum(self):
        # ln(1 + 2 e^{-1/4} + 3 e^{-1})
        cfg = ModelConfig(k_noise=4.0, n_cutoff=2, n_osc=2)
        expected = math.log(1 + 2 * math.exp(-0.25) + 3 * math.exp(-1.0))
        got = log_weighted_sum(TraceKind.COUNT, 0, cfg)
        assert got == pytest.approx(expected, abs=1e-13)
        assert got == pytest.approx(direct_weighted_sum(TraceKind.COUNT, 0, cfg), abs=1e-13)

    @given(st.integers(-4, 30), st.sampled_from([0.0, 0.5, 4.0, 100.0]),
           st.integers(0, 6), st.integers(1, 5))
    def test_matches_direct_summation(self, e, k, n_cutoff, n_osc):
        cfg = ModelConfig(k_noise=k, n_cutoff=n_cutoff, n_osc=n_osc)
        try:
            expected = direct_weighted_sum(TraceKind.ANTINORMAL, e, cfg)
        except DomainError:
            with pytest.raises(DomainError):
                log_weighted_sum(TraceKind.ANTINORMAL, e, cfg)
            return
        got = log_weighted_sum(TraceKind.ANTINORMAL, e, cfg)
        if expected == -math.inf:
            assert got == -math.inf
        else:
            assert got == pytest.approx(expected, abs=1e-11)

    def test_empty_window_domain_error(self):
        cfg = ModelConfig(k_noise=1.0, n_cutoff=2)
        with pytest.raises(DomainError):
            log_weighted_sum(TraceKind.COUNT, -3, cfg)

    def test_perfect_measurement_negative_energy_rejected(self):
        cfg = ModelConfig(k_noise=0.0)
        with pytest.raises(DomainError):
            log_weighted_sum(TraceKind.COUNT, -1, cfg)

    def test_monotone_in_e_for_count(self):
        cfg = ModelConfig(k_noise=7.0, n_cutoff=8, n_osc=4)
        vals = [log_weighted_sum(TraceKind.COUNT, e, cfg) for e in range(-8, 40)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_monotone_in_k_for_count(self):
        ks = np.logspace(-3, 5, 33)
        vals = [
            log_weighted_sum(TraceKind.COUNT, 3,
                             ModelConfig(k_noise=float(k), n_cutoff=10, n_osc=3))
            for k in ks
        ]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_small_k_converges_to_log_trace(self):
        cfg0 = ModelConfig(k_noise=1e-8, n_cutoff=10, n_osc=4)
        for e in (0, 1, 5, 17):
            ref = log_trace(TraceKind.COUNT, e, 4)
            got = log_weighted_sum(TraceKind.COUNT, e, cfg0)
            if ref == 0.0:
                assert abs(got) <= 1e-6
            else:
                assert abs(got - ref) / abs(ref) <= 1e-6

    def test_no_overflow_at_large_arguments(self):
        cfg = ModelConfig(k_noise=1e6, n_cutoff=1000, n_osc=1000)
        val = log_weighted_sum(TraceKind.ANTINORMAL, 10**5, cfg)
        assert math.isfinite(val)
