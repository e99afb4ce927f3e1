"""Engine: determinism, waiting-time law, event-frequency agreement with the
rate table, stop criteria, ensembles, and steady-state behavior."""

import numpy as np
import pytest
from scipy import stats

from lobsim.book import Side, StateCaps, empty_book, submit_order, validate_book
from lobsim.engine import (
    EngineError,
    RecordingConfig,
    derive_run_seeds,
    run_ensemble,
    simulate,
    step,
)
from lobsim.rates import AbsorbingStateError, EventKind, event_table
from lobsim.scenario import build_rate_model, preset


@pytest.fixture(scope="module")
def scenario1_model():
    return build_rate_model(preset("scenario1"))


def trajectory_fingerprint(result):
    return [
        (r.time, r.event.kind, r.event.price_level, r.event.target_order_id, r.transactions)
        for r in result.records
    ]


class TestStep:
    def test_empty_book_only_arrivals(self, scenario1_model):
        rng = np.random.default_rng(0)
        for _ in range(200):
            result = step(empty_book(20), scenario1_model, rng, now=0.0)
            assert result.event.kind in (EventKind.ARRIVAL_ASK, EventKind.ARRIVAL_BID)

    def test_waiting_time_mean(self, scenario1_model):
        rng = np.random.default_rng(1)
        state = empty_book(20)
        draws = np.array(
            [step(state, scenario1_model, rng, 0.0).delta_t for _ in range(100_000)]
        )
        assert draws.mean() == pytest.approx(1.0 / 6.0, rel=0.01)

    def test_event_frequencies_match_table(self, scenario1_model):
        # frozen state: empirical step() frequencies vs the normalized table
        state, _ = submit_order(empty_book(20), Side.BID, 10, 1)
        state, _ = submit_order(state, Side.BID, 9, 1)
        table = event_table(scenario1_model, state)
        probabilities = {d: r for d, r in table.probabilities()}
        rng = np.random.default_rng(2)
        n = 20_000
        counts: dict = {}
        for _ in range(n):
            result = step(state, scenario1_model, rng, 0.0)
            counts[result.event] = counts.get(result.event, 0) + 1
        assert set(counts) <= set(probabilities)
        observed = np.array([counts.get(d, 0) for d in probabilities])
        expected = np.array([p * n for p in probabilities.values()])
        chi2 = stats.chisquare(observed, expected)
        assert chi2.pvalue > 0.001

    def test_absorbing_state_raises(self, scenario1_model):
        caps = StateCaps(max_orders=0)
        rng = np.random.default_rng(3)
        with pytest.raises(AbsorbingStateError):
            step(empty_book(20), scenario1_model, rng, 0.0, caps=caps)


class TestSimulate:
    def test_zero_events(self, scenario1_model):
        result = simulate(scenario1_model, event_count=0, seed=4)
        assert result.records == []
        assert result.final_state == empty_book(20)
        assert result.final_time == 0.0

    def test_bit_exact_determinism(self, scenario1_model):
        a = simulate(scenario1_model, event_count=400, seed=42)
        b = simulate(scenario1_model, event_count=400, seed=42)
        assert trajectory_fingerprint(a) == trajectory_fingerprint(b)
        assert a.final_state == b.final_state
        c = simulate(scenario1_model, event_count=400, seed=43)
        assert trajectory_fingerprint(a) != trajectory_fingerprint(c)

    def test_times_strictly_increasing(self, scenario1_model):
        result = simulate(scenario1_model, event_count=500, seed=5)
        times = [r.time for r in result.records]
        assert all(t1 < t2 for t1, t2 in zip(times, times[1:]))

    def test_elapsed_time_matches_intensity(self, scenario1_model):
        # event count n at fixed rate 6 gives duration ~ Gamma(n, 1/6)
        for seed in (6, 7, 8):
            result = simulate(scenario1_model, event_count=5000, seed=seed)
            assert result.final_time == pytest.approx(5000 / 6.0, rel=0.05)

    def test_invariants_hold_each_step(self, scenario1_model):
        result = simulate(
            scenario1_model, event_count=2000, seed=9, debug_invariants=True
        )
        validate_book(result.final_state)
        for record in result.records:
            if record.quote is not None and record.quote.spread is not None:
                assert record.quote.spread >= 1

    def test_time_horizon_stop(self, scenario1_model):
        result = simulate(scenario1_model, time_horizon=10.0, seed=10)
        assert result.final_time == 10.0
        assert all(r.time <= 10.0 for r in result.records)
        # roughly 6 events per unit time
        assert 20 <= result.event_count <= 120

    def test_checkpoints_present_up_to_horizon(self, scenario1_model):
        times = (0.0, 2.0, 5.0, 9.0)
        result = simulate(
            scenario1_model,
            time_horizon=5.0,
            seed=11,
            recording=RecordingConfig(checkpoint_times=times),
        )
        # the 9.0 checkpoint lies past the horizon and stays absent
        assert set(result.checkpoints) == {0.0, 2.0, 5.0}
        assert result.checkpoints[0.0] == empty_book(20)
        assert result.checkpoints[5.0] == result.final_state

    def test_checkpoint_equals_replayed_state(self, scenario1_model):
        result = simulate(
            scenario1_model,
            time_horizon=3.0,
            seed=12,
            recording=RecordingConfig(checkpoint_times=(1.5,)),
        )
        # replay event by event up to 1.5 using the same seed
        from lobsim.rates import apply_event

        replay = simulate(scenario1_model, time_horizon=3.0, seed=12)
        state = empty_book(20)
        for record in replay.records:
            if record.time >= 1.5:
                break
            state, _ = apply_event(state, record.event, record.time)
        assert state.canonical_key() == result.checkpoints[1.5].canonical_key()

    def test_requires_stop_criterion(self, scenario1_model):
        with pytest.raises(EngineError):
            simulate(scenario1_model, seed=13)

    def test_capped_run_respects_cutoffs(self, scenario1_model):
        caps = StateCaps(max_orders=3, max_quantity=1)
        result = simulate(
            scenario1_model, event_count=3000, seed=14, caps=caps, debug_invariants=True
        )
        assert result.final_state.order_count() <= 3
        # replay records: order count along the way never exceeded the cap
        from lobsim.rates import apply_event

        state = empty_book(20)
        for record in result.records:
            state, _ = apply_event(state, record.event, record.time)
            assert state.order_count() <= 3

    def test_inter_event_times_collection(self, scenario1_model):
        result = simulate(
            scenario1_model,
            event_count=1000,
            seed=15,
            recording=RecordingConfig(events=False, collect_inter_event_times=True),
        )
        assert result.inter_event_times.shape == (1000,)
        assert result.records == []
        assert result.final_time == pytest.approx(result.inter_event_times.sum())


class TestEnsemble:
    def test_single_run_matches_simulate(self, scenario1_model):
        seeds = derive_run_seeds(123, 1)
        direct = simulate(scenario1_model, event_count=100, seed=seeds[0])
        ensemble = run_ensemble(scenario1_model, runs=1, events_per_run=100, base_seed=123)
        assert trajectory_fingerprint(direct) == trajectory_fingerprint(ensemble[0])

    def test_same_base_seed_identical(self, scenario1_model):
        a = run_ensemble(
            scenario1_model,
            runs=5,
            events_per_run=200,
            base_seed=77,
            reduce=lambda r: r.final_state.canonical_key(),
        )
        b = run_ensemble(
            scenario1_model,
            runs=5,
            events_per_run=200,
            base_seed=77,
            reduce=lambda r: r.final_state.canonical_key(),
        )
        assert a == b

    def test_runs_are_distinct(self, scenario1_model):
        keys = run_ensemble(
            scenario1_model,
            runs=6,
            events_per_run=300,
            base_seed=78,
            reduce=lambda r: tuple(rec.time for rec in r.records[:10]),
        )
        assert len(set(keys)) == 6

    def test_steady_state_depth_stable_across_seeds(self, scenario1_model):
        # mean resident count over the last 20% of a long run, per seed
        means = []
        for seed in (21, 22, 23):
            result = simulate(
                scenario1_model,
                event_count=20_000,
                seed=seed,
                recording=RecordingConfig(events=False, depth_window=4000),
            )
            counts = [
                frame.profile.counts(Side.BID).sum() + frame.profile.counts(Side.ASK).sum()
                for frame in result.depth_frames
            ]
            means.append(float(np.mean(counts)))
        center = float(np.mean(means))
        assert center < 60.0
        for m in means:
            assert abs(m - center) / center < 0.15
