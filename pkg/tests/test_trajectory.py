import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from calojump import (
    DomainError,
    EnergyGrid,
    GridEscapeError,
    JumpKind,
    ModelConfig,
    QubitPureState,
    RefusalError,
    TrajectoryState,
    advance,
    build_rate_table,
    drift_step,
    ensemble_statistics,
    run_ensemble,
    run_trajectory,
)
from calojump import kernels
from calojump.trajectory import (
    first_event_times,
    mean_stderr,
    write_ensemble_summary_csv,
    write_event_log_csv,
)


def setup_k0(n_osc=10, lo=0, hi=3, kappa=0.001, lam=0.0, gamma=0.0):
    cfg = ModelConfig(kappa=kappa, lambda_drive=lam, n_osc=n_osc, k_noise=0.0,
                      gamma_loss=gamma)
    grid = EnergyGrid(lo, hi)
    return cfg, grid, build_rate_table(cfg, grid)


class _FixedRng:
    def __init__(self, values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


class TestDriftStep:
    def test_no_rates_no_drive_fixed(self):
        cfg, grid, table = setup_k0(kappa=0.0)
        psi = QubitPureState(0.6, 0.8j)
        out = drift_step(TrajectoryState(psi, 1), table, cfg, 0.03)
        assert out.cg == psi.cg and out.ce == psi.ce

    def test_excited_state_is_drift_fixed_point(self):
        cfg, grid, table = setup_k0()
        out = drift_step(TrajectoryState(QubitPureState.excited(), 0), table, cfg, 0.03)
        assert out.cg == 0.0 and out.ce == 1.0

    def test_nonlinear_decay_law_finite_difference(self):
        # on the superposition with gamma_up = 0 the normalized law gives
        # d|c_e|^2/dt = -gamma * pe (1 - pe) = -gamma/4 at pe = 1/2
        cfg = ModelConfig(kappa=0.01, lambda_drive=0.0, n_osc=1, k_noise=0.0)
        grid = EnergyGrid(0, 1)
        table = build_rate_table(cfg, grid)
        gamma = table.down(0)  # gamma_up(0) = 0 at k=0
        psi = QubitPureState(1 / math.sqrt(2), 1 / math.sqrt(2))
        derivs = []
        for dt in (1e-3, 5e-4):
            out = drift_step(TrajectoryState(psi, 0), table, cfg, dt)
            derivs.append((out.excited_population - 0.5) / dt)
        # Richardson extrapolation removes the O(dt) error of the Euler step
        extrapolated = 2 * derivs[1] - derivs[0]
        assert extrapolated == pytest.approx(-gamma / 4, rel=1e-6)

    def test_guard_refuses_large_step(self):
        cfg, grid, table = setup_k0()
        with pytest.raises(RefusalError):
            drift_step(TrajectoryState(QubitPureState.ground(), 0), table, cfg, 50.0)

    def test_normalized_output(self):
        cfg, grid, table = setup_k0(lam=0.05)
        out = drift_step(TrajectoryState(QubitPureState(0.8, 0.6j), 1), table, cfg, 0.03)
        assert out.norm_sq == pytest.approx(1.0, abs=1e-12)


class TestAdvance:
    def test_absorbing_configuration(self):
        # ground state at E=0, k=0: no event can fire, pure drift
        cfg, grid, table = setup_k0()
        state = TrajectoryState(QubitPureState.ground(), 0)
        new, event = advance(state, table, cfg, 0.03, _FixedRng([0.0]))
        assert event is None
        assert new.e_index == 0
        assert new.t == pytest.approx(0.03)
        assert new.psi.cg == 1.0

    def test_down_jump_bookkeeping(self):
        cfg, grid, table = setup_k0(hi=8)
        state = TrajectoryState(QubitPureState.excited(), 5)
        new, event = advance(state, table, cfg, 0.03, _FixedRng([0.0]))
        assert event is not None
        assert event.kind is JumpKind.DOWN
        assert event.e_index_after == 6
        assert new.e_index == 6
        assert new.psi.cg == 1.0 and new.psi.ce == 0.0

    def test_exponential_waiting_times(self):
        # from |e> at E=0, k=0, N=10 only the down jump can fire; the first-
        # jump times follow Exp(10 kappa) (KS test, seeded)
        cfg, grid, table = setup_k0(hi=2)
        init = TrajectoryState(QubitPureState.excited(), 0)
        times = first_event_times(cfg, table, init, dt=0.03, t_final=1500.0,
                                  master_seed=2026, n_traj=2000)
        assert not np.any(np.isnan(times))
        res = stats.kstest(times, "expon", args=(0.0, 1.0 / (10 * cfg.kappa)))
        assert res.pvalue > 0.01

    def test_escape_identifies_position(self):
        cfg, grid, table = setup_k0(hi=0)  # single-point grid
        state = TrajectoryState(QubitPureState.excited(), 0)
        with pytest.raises(GridEscapeError):
            advance(state, table, cfg, 0.03, _FixedRng([0.0]))


class TestRunTrajectory:
    def test_no_dynamics_no_events(self):
        cfg, grid, table = setup_k0(kappa=0.0)
        init = TrajectoryState(QubitPureState.ground(), 1)
        rec = run_trajectory(cfg, init, table, 0.03, 100.0, seed=5)
        assert rec.events == ()
        assert rec.delta_e == 0

    def test_first_event_is_down_then_stationary_flipflop(self):
        cfg, grid, table = setup_k0(hi=2)
        init = TrajectoryState(QubitPureState.excited(), 0)
        rec = run_trajectory(cfg, init, table, 0.03, 20_000.0, seed=11,
                             sample_stride=10_000)
        assert rec.events[0].kind is JumpKind.DOWN
        kinds = [ev.kind for ev in rec.events]
        # undriven k=0 conserves total quanta: strict down/up alternation
        for a, b in zip(kinds, kinds[1:]):
            assert {a, b} == {JumpKind.DOWN, JumpKind.UP}

    def test_bitwise_reproducibility(self):
        cfg, grid, table = setup_k0(hi=30, lam=0.05)
        init = TrajectoryState(QubitPureState.ground(), 0)
        a = run_trajectory(cfg, init, table, 0.03, 300.0, seed=42, sample_stride=100)
        b = run_trajectory(cfg, init, table, 0.03, 300.0, seed=42, sample_stride=100)
        assert a.events == b.events
        assert np.array_equal(a.sample_cg.view(np.uint64), b.sample_cg.view(np.uint64))
        assert np.array_equal(a.sample_e, b.sample_e)
        c = run_trajectory(cfg, init, table, 0.03, 300.0, seed=43, sample_stride=100)
        assert c.events != a.events

    def test_matches_stepwise_advance(self):
        # the batch kernel and the single-step reference walk the same path
        cfg = ModelConfig(kappa=0.02, lambda_drive=0.1, n_osc=5, k_noise=2.0,
                          n_cutoff=5, gamma_loss=0.01)
        grid = EnergyGrid(-5, 30)
        table = build_rate_table(cfg, grid)
        init = TrajectoryState(QubitPureState.ground(), 2)
        rec = run_trajectory(cfg, init, table, 0.03, 30.0, seed=7)

        rng = np.random.Generator(np.random.Philox(key=[7, 0]))
        state = init
        events = []
        for _ in range(1000):
            state, ev = advance(state, table, cfg, 0.03, rng)
            if ev is not None:
                events.append(ev)
        assert state.e_index == rec.e_final
        assert state.psi.cg == rec.psi_final.cg
        assert state.psi.ce == rec.psi_final.ce
        assert len(events) == len(rec.events)
        for got, ref in zip(events, rec.events):
            assert got.kind is ref.kind
            assert got.e_index_after == ref.e_index_after
            # advance() accumulates t += dt; the batch path uses (i+1)*dt
            assert got.time == pytest.approx(ref.time, abs=1e-9)

    def test_energy_bookkeeping_identity(self):
        cfg = ModelConfig(kappa=0.02, lambda_drive=0.1, n_osc=5, k_noise=2.0,
                          n_cutoff=5, gamma_loss=0.01)
        grid = EnergyGrid(-5, 40)
        table = build_rate_table(cfg, grid)
        init = TrajectoryState(QubitPureState.ground(), 0)
        for seed in range(6):
            rec = run_trajectory(cfg, init, table, 0.03, 200.0, seed=seed)
            counts = rec.event_counts()
            assert rec.delta_e == (counts[JumpKind.DOWN] - counts[JumpKind.UP]
                                   - counts[JumpKind.LOSS])

    def test_normalization_at_samples(self):
        cfg, grid, table = setup_k0(hi=30, lam=0.05)
        init = TrajectoryState(QubitPureState.ground(), 0)
        rec = run_trajectory(cfg, init, table, 0.03, 300.0, seed=3, sample_stride=50)
        norms = np.abs(rec.sample_cg) ** 2 + np.abs(rec.sample_ce) ** 2
        assert np.max(np.abs(norms - 1.0)) <= 1e-10

    def test_escape_error_names_seed_and_time(self):
        # starting excited at the top block, the first emission must escape
        cfg, grid, table = setup_k0(hi=1)
        init = TrajectoryState(QubitPureState.excited(), 1)
        with pytest.raises(GridEscapeError, match="master_seed=9"):
            run_trajectory(cfg, init, table, 0.03, 5000.0, seed=9)

    def test_event_log_csv(self, tmp_path):
        cfg, grid, table = setup_k0(hi=3)
        init = TrajectoryState(QubitPureState.excited(), 0)
        rec = run_trajectory(cfg, init, table, 0.03, 400.0, seed=1)
        path = tmp_path / "events.csv"
        write_event_log_csv(rec, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "seed,t_omega,kind,e_index_after"
        assert len(lines) == 1 + len(rec.events)
        if rec.events:
            cells = lines[1].split(",")
            assert cells[0] == "1"
            assert cells[2] in ("down", "up", "loss")


class TestBackendParity:
    def test_kernels_bitwise_identical(self):
        if kernels.run_steps_cython is None:
            pytest.skip("compiled kernel unavailable")
        cfg = ModelConfig(kappa=0.02, lambda_drive=0.08, n_osc=5, k_noise=2.0,
                          n_cutoff=5, gamma_loss=0.02)
        grid = EnergyGrid(-5, 40)
        table = build_rate_table(cfg, grid)
        n_steps = 4000
        uniforms = np.random.Generator(np.random.Philox(key=[99, 0])).random(n_steps)

        def run(fn):
            samp_cg = np.zeros(n_steps + 2, dtype=complex)
            samp_ce = np.zeros(n_steps + 2, dtype=complex)
            samp_e = np.zeros(n_steps + 2, dtype=np.int64)
            ev_s = np.zeros(256, dtype=np.int64)
            ev_k = np.zeros(256, dtype=np.int8)
            ev_e = np.zeros(256, dtype=np.int64)
            out = fn(1.0, 0.0, 0.0, 0.0, grid.offset(0), table.gamma_up,
                     table.gamma_down, table.expected_e, cfg.lambda_drive,
                     cfg.gamma_loss, 0.03, n_steps, 7, 0, uniforms,
                     samp_cg, samp_ce, samp_e, ev_s, ev_k, ev_e)
            return out, samp_cg, samp_ce, samp_e, ev_s, ev_k, ev_e

        out_c = run(kernels.run_steps_cython)
        out_p = run(kernels.run_steps_python)
        assert out_c[0] == out_p[0]
        assert np.array_equal(out_c[1].view(np.uint64), out_p[1].view(np.uint64))
        assert np.array_equal(out_c[2].view(np.uint64), out_p[2].view(np.uint64))
        for i in (3, 4, 5, 6):
            assert np.array_equal(out_c[i], out_p[i])


class TestEnsemble:
    def test_reduction_independent_of_workers(self):
        cfg, grid, table = setup_k0(hi=30, lam=0.05)
        init = TrajectoryState(QubitPureState.ground(), 0)
        a = run_ensemble(cfg, table, init, 0.03, 150.0, 5, 40, sample_stride=500,
                         workers=1)
        b = run_ensemble(cfg, table, init, 0.03, 150.0, 5, 40, sample_stride=500,
                         workers=4)
        assert np.array_equal(a.pe.view(np.uint64), b.pe.view(np.uint64))
        assert np.array_equal(a.e, b.e)
        assert np.array_equal(a.delta_e, b.delta_e)

    def test_statistics_match_record_path(self):
        cfg, grid, table = setup_k0(hi=30, lam=0.05)
        init = TrajectoryState(QubitPureState.ground(), 0)
        res = run_ensemble(cfg, table, init, 0.03, 150.0, 5, 30, sample_stride=1000,
                           keep_records=True)
        s1 = res.statistics()
        s2 = ensemble_statistics(res.records)
        assert np.allclose(s1.mean_excited, s2.mean_excited, atol=0)
        assert np.allclose(s1.mean_e, s2.mean_e, atol=0)
        assert np.allclose(s1.stderr_excited, s2.stderr_excited, atol=0)

    def test_identical_trajectories_zero_stderr(self):
        cfg, grid, table = setup_k0(kappa=0.0)
        init = TrajectoryState(QubitPureState.ground(), 1)
        res = run_ensemble(cfg, table, init, 0.03, 30.0, 0, 8, sample_stride=100)
        s = res.statistics()
        assert np.all(s.stderr_excited == 0.0)
        assert np.all(s.mean_e == 1.0)
        assert np.all(s.stderr_e == 0.0)

    def test_mixed_config_collections_rejected(self):
        cfg, grid, table = setup_k0(hi=30)
        init = TrajectoryState(QubitPureState.ground(), 0)
        r1 = run_ensemble(cfg, table, init, 0.03, 30.0, 0, 2, sample_stride=100,
                          keep_records=True).records
        cfg2 = cfg.replace(kappa=0.002)
        table2 = build_rate_table(cfg2, grid)
        r2 = run_ensemble(cfg2, table2, init, 0.03, 30.0, 0, 2, sample_stride=100,
                          keep_records=True).records
        with pytest.raises(DomainError):
            ensemble_statistics(list(r1) + list(r2))

    def test_mean_stderr_two_point_example(self):
        mean, stderr = mean_stderr([0.0, 2.0])
        assert mean == 1.0
        assert stderr == pytest.approx(1.0, rel=1e-15)

    def test_summary_csv(self, tmp_path):
        cfg, grid, table = setup_k0(hi=30, lam=0.05)
        init = TrajectoryState(QubitPureState.ground(), 0)
        res = run_ensemble(cfg, table, init, 0.03, 30.0, 5, 10, sample_stride=500)
        path = tmp_path / "summary.csv"
        write_ensemble_summary_csv(res.statistics(), path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == ("t_omega,mean_excited,stderr_excited,"
                            "mean_E_over_omega,stderr_E_over_omega")
        assert len(lines) == 1 + res.sample_times.size


class TestLossProcess:
    def test_loss_only_decrements_energy(self):
        # kappa = 0, loss on: monotone staircase down to the floor
        cfg = ModelConfig(kappa=0.0, lambda_drive=0.0, n_osc=10, k_noise=0.0,
                          gamma_loss=0.05)
        grid = EnergyGrid(0, 10)
        table = build_rate_table(cfg, grid)
        init = TrajectoryState(QubitPureState.ground(), 8)
        rec = run_trajectory(cfg, init, table, 0.03, 4000.0, seed=3)
        assert all(ev.kind is JumpKind.LOSS for ev in rec.events)
        diffs = np.diff([8] + [ev.e_index_after for ev in rec.events])
        assert np.all(diffs == -1)
        assert rec.e_final == 0  # settles at the floor, never below

    def test_floor_suppression_counted(self):
        # k > 0 makes <E> positive at the floor of a raised grid, so loss
        # events there must be suppressed and counted
        cfg = ModelConfig(kappa=0.0, lambda_drive=0.0, n_osc=10, k_noise=25.0,
                          n_cutoff=10, gamma_loss=0.05)
        grid = EnergyGrid(0, 10)  # floor above -n_cutoff
        table = build_rate_table(cfg, grid)
        assert table.mean_energy(0) > 0
        init = TrajectoryState(QubitPureState.ground(), 5)
        rec = run_trajectory(cfg, init, table, 0.03, 4000.0, seed=3)
        assert rec.e_final == 0
        assert rec.floor_suppressed > 0

    @settings(max_examples=10)
    @given(st.integers(0, 10_000))
    def test_bookkeeping_property(self, seed):
        cfg = ModelConfig(kappa=0.02, lambda_drive=0.1, n_osc=5, k_noise=2.0,
                          n_cutoff=5, gamma_loss=0.02)
        grid = EnergyGrid(-5, 40)
        table = build_rate_table(cfg, grid)
        init = TrajectoryState(QubitPureState.ground(), 0)
        rec = run_trajectory(cfg, init, table, 0.03, 60.0, seed=seed)
        counts = rec.event_counts()
        assert rec.delta_e == (counts[JumpKind.DOWN] - counts[JumpKind.UP]
                               - counts[JumpKind.LOSS])
        norms = np.abs(rec.sample_cg) ** 2 + np.abs(rec.sample_ce) ** 2
        assert np.max(np.abs(norms - 1.0)) <= 1e-10
