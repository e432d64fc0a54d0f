"""Monte-Carlo oracle: reproducibility, conservation, bound validation."""

import numpy as np
import pytest

from infocalc.algorithms import Schedule, bflr
from infocalc.errors import ConfigError
from infocalc.scenario import Scenario, case_study_scenario
from infocalc.simulate import (
    TraceConfig,
    impairment_excess_samples,
    impairment_selfcheck,
    simulate,
    splitmix64_stream,
    wilson_upper,
)


@pytest.fixture(scope="module")
def two_path_schedule():
    assign = {f"A1.{i}": "L1" for i in (1, 2, 3)} | {f"A2.{i}": "L2" for i in (1, 2, 3)}
    return Schedule(assign, ("L1", "L2"), {})


def deterministic_scenario():
    s = case_study_scenario()
    return Scenario(s.sources, s.spatial, s.paths, (), source_rate_specs=s.source_rate_specs)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            TraceConfig(runs=0, seed=1)
        with pytest.raises(ConfigError):
            TraceConfig(runs=1, seed=1, time_step=0.0)
        with pytest.raises(ConfigError):
            TraceConfig(runs=1, seed=1, time_step=1.0, horizon=0.5)

    def test_splitmix_is_deterministic(self):
        a = splitmix64_stream(42, 5)
        b = splitmix64_stream(42, 5)
        assert a == b
        assert len(set(a)) == 5
        assert splitmix64_stream(43, 1) != splitmix64_stream(42, 1)


class TestWilson:
    def test_zero_and_full(self):
        assert wilson_upper(np.array([0]), 100)[0] == pytest.approx(0.0370, abs=1e-3)
        assert wilson_upper(np.array([100]), 100)[0] == 1.0

    def test_monotone_in_k(self):
        ks = np.arange(0, 50)
        ups = wilson_upper(ks, 100)
        assert np.all(np.diff(ups) > 0)


class TestReproducibility:
    def test_bit_identical_reports(self, case_study, two_path_schedule):
        cfg = TraceConfig(runs=300, seed=7, time_step=1e-3, horizon=0.5)
        a = simulate(case_study, two_path_schedule, cfg, within_delay=0.015)
        b = simulate(case_study, two_path_schedule, cfg, within_delay=0.015)
        assert len(a) == len(b)
        for ra, rb in zip(a, b):
            assert ra.quantity == rb.quantity and ra.path_id == rb.path_id
            assert np.array_equal(ra.thresholds, rb.thresholds)
            assert np.array_equal(ra.empirical, rb.empirical)
            assert np.array_equal(ra.bounds, rb.bounds)
            assert ra.passed == rb.passed

    def test_seed_changes_samples(self, case_study, two_path_schedule):
        a = simulate(case_study, two_path_schedule,
                     TraceConfig(runs=300, seed=7, time_step=1e-3, horizon=0.5))
        b = simulate(case_study, two_path_schedule,
                     TraceConfig(runs=300, seed=8, time_step=1e-3, horizon=0.5))
        assert any(not np.array_equal(ra.empirical, rb.empirical) for ra, rb in zip(a, b))


class TestBounds:
    def test_deterministic_scenario_hard_bound(self):
        s = deterministic_scenario()
        sched = Schedule({f"A1.{i}": "L1" for i in (1, 2, 3)}, ("L1",), {})
        reports = simulate(s, sched, TraceConfig(runs=50, seed=3, time_step=1e-3, horizon=0.5))
        for rep in reports:
            assert rep.passed, rep.quantity

    def test_stochastic_paths_within_bounds(self, case_study, two_path_schedule):
        cfg = TraceConfig(runs=1500, seed=42, time_step=1e-3, horizon=0.8)
        reports = simulate(case_study, two_path_schedule, cfg, within_delay=0.015)
        assert {r.quantity for r in reports} == {"delay", "backlog", "backlog_within_delay"}
        for rep in reports:
            assert rep.passed, (rep.quantity, rep.path_id)

    def test_zero_source_schedule_all_zero_backlog(self, case_study):
        sched = Schedule({}, ("L3",), {})
        reports = simulate(case_study, sched, TraceConfig(runs=20, seed=1, time_step=1e-3, horizon=0.2))
        backlog = next(r for r in reports if r.quantity == "backlog")
        assert np.all(backlog.empirical == 0.0)

    def test_conservation(self, case_study, two_path_schedule):
        # delivered information never exceeds arrivals, per run and per step
        from infocalc.simulate import _sample_impairment_increments, _serve_path
        from infocalc.sources import aggregate_information

        cfg = TraceConfig(runs=50, seed=9, time_step=1e-3, horizon=0.3)
        rng = np.random.default_rng(123)
        sources = [s for s in case_study.sources if s.group_id == "1"]
        arrival = aggregate_information(sources, case_study.spatial)
        steps = int(round(cfg.horizon / cfg.time_step))
        ts = np.arange(steps + 1) * cfg.time_step
        arr = np.array([float(arrival.curve.value(t)) for t in ts])
        path = case_study.path("L1")
        imp = _sample_impairment_increments(case_study.impairments[0], path.nodes[0], cfg, rng)
        out = _serve_path(arr, list(path.nodes), [imp], cfg)
        assert np.all(out <= arr[None, :] + 1e-9)
        assert np.all(np.diff(out, axis=1) >= -1e-9)


class TestImpairmentModel:
    def test_selfcheck_respects_own_envelope(self, case_study):
        cfg = TraceConfig(runs=600, seed=11, time_step=5e-3, horizon=1.0)
        for entry in case_study.impairments:
            node = case_study.path(entry.a[0]).nodes[entry.a[1]]
            rep = impairment_selfcheck(entry, node, cfg)
            assert rep.passed

    def test_excess_tail_beats_bounding_function(self, case_study):
        entry = case_study.impairments[0]
        node = case_study.path(entry.a[0]).nodes[entry.a[1]]
        cfg = TraceConfig(runs=2000, seed=5, time_step=5e-3, horizon=0.5)
        excess = impairment_excess_samples(entry, node, cfg)

        a, b = entry.bounding_a, entry.bounding_b
        for x in np.linspace(0.0, 20.0, 10):
            emp = float(np.mean(excess > x))
            assert emp <= min(1.0, a * np.exp(-x / b)) + 1e-12


class TestSerialization:
    def test_csv_layout(self, case_study, two_path_schedule):
        cfg = TraceConfig(runs=50, seed=2, time_step=1e-3, horizon=0.2)
        rep = simulate(case_study, two_path_schedule, cfg)[0]
        lines = rep.to_csv().strip().splitlines()
        assert lines[0] == "threshold,empirical,ci_hi,bound"
        assert len(lines) == 1 + len(rep.thresholds)

    def test_json_roundtrip(self, case_study, two_path_schedule):
        import json

        cfg = TraceConfig(runs=50, seed=2, time_step=1e-3, horizon=0.2)
        rep = simulate(case_study, two_path_schedule, cfg)[0]
        doc = json.loads(rep.to_json_str())
        assert doc["quantity"] == rep.quantity
        assert len(doc["points"]) == len(rep.thresholds)


def test_simulate_matches_bflr_schedule(case_study):
    sched = bflr(case_study, 0.045, 0.001)
    cfg = TraceConfig(runs=200, seed=21, time_step=1e-3, horizon=0.4)
    reports = simulate(case_study, sched, cfg)
    assert {r.path_id for r in reports} == set(sched.subset)
    assert all(r.passed for r in reports)
