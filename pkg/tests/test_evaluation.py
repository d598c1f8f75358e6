"""Tests for detection metrics, the naive attack, impact sweeps and benchmarks."""
from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from src.core_model import AccessProfile
from src.schemas import AdmConfig, BenchConfig, SweepConfig, SynthConfigModel
from src.services.adm_service import train
from src.services.controller_service import max_residual, simulate
from src.services.evaluation_service import (
    ADM_EVAL_COLUMNS,
    IMPACT_COLUMNS,
    PROGRESSIVE_COLUMNS,
    _timed_point,
    adm_evaluation,
    clone_zones,
    confusion_metrics,
    detection_labels,
    impact_frame,
    impact_sweep,
    naive_attack,
    progressive_evaluation,
    scalability_bench,
    search_nodes,
    split_attack_days,
    train_knowledge,
    zone_cost_table,
)
from src.services.scheduling_service import ScheduleContext
from src.services.synthesis_service import synth_trace
from tests.conftest import benign_trace, rectangle_model

SHORT = [1, 1, 2, 2, 2, 0, 0, 1]
RATIOS = ["accuracy", "precision", "recall", "f1"]
DBSCAN = {"algorithm": "dbscan", "dbscan": {"eps": 5.0, "min_pts": 2}}


def _days(home, n_days):
    return [benign_trace(home, SHORT, start_slot=day * home.slots_per_day) for day in range(n_days)]


def _sweep(**overrides) -> SweepConfig:
    payload = {
        "home": "home.json",
        "synth": "synth.json",
        "days": 3,
        "adm": [DBSCAN],
        "search": {"window": 4, "node_budget": 100000},
    }
    payload.update(overrides)
    return SweepConfig.model_validate(payload)


def _ratios_in_unit_interval(frame) -> bool:
    return bool(((frame[RATIOS] >= 0.0) & (frame[RATIOS] <= 1.0)).all().all())


def test_confusion_metrics_from_counts() -> None:
    truth = [True] * 4 + [False] * 6
    predicted = [True, True, True, False, True] + [False] * 5
    metrics = confusion_metrics(predicted, truth)
    assert (metrics.tp, metrics.fp, metrics.fn, metrics.tn) == (3, 1, 1, 5)
    assert metrics.accuracy == pytest.approx(0.8)
    assert metrics.precision == pytest.approx(0.75)
    assert metrics.recall == pytest.approx(0.75)
    assert metrics.f1 == pytest.approx(0.75)


def test_confusion_metrics_edge_cases() -> None:
    assert confusion_metrics([], []).f1 == 0.0
    assert confusion_metrics([False, False], [False, False]).precision == 0.0
    with pytest.raises(ValueError):
        confusion_metrics([True], [True, False])


def test_zone_cost_table_prices_the_busiest_activity(tiny_home) -> None:
    table = zone_cost_table(tiny_home)
    occupants = table[table["kind"] == "occupant"].set_index("zone_id")
    assert occupants.loc[1, "airflow_cfm"] == pytest.approx(25.0)
    assert occupants.loc[2, "airflow_cfm"] == pytest.approx(30.0)
    assert (occupants["peak_usd"] == 2.0 * occupants["offpeak_usd"]).all()
    assert (table["kind"] == "appliance").sum() == tiny_home.n_appliances


def test_naive_attack_moves_everyone_to_the_costliest_zone(tiny_home, tiny_trace) -> None:
    attacked, schedule = naive_attack(tiny_trace, tiny_home)
    assert (attacked.occupant_zone == 2).all()
    assert schedule.strategy == "naive"
    assert max_residual(attacked, simulate(attacked, tiny_home), tiny_home) < 1e-6
    assert simulate(attacked, tiny_home).total_cost > simulate(tiny_trace, tiny_home).total_cost


def test_naive_attack_respects_the_access_window(tiny_home, tiny_trace) -> None:
    access = replace(AccessProfile.full(tiny_home, tiny_trace.n_slots), slots=frozenset(range(3, 7)))
    attacked, _ = naive_attack(tiny_trace, tiny_home, access)
    assert attacked.occupant_zone[:, 0].tolist() == [1, 1, 2, 2, 2, 2, 2, 1, 1, 1, 1, 1]


def test_detector_catches_the_naive_attack(tiny_home, tiny_trace) -> None:
    access = replace(AccessProfile.full(tiny_home, tiny_trace.n_slots), slots=frozenset(range(3, 7)))
    predicted, truth = detection_labels([tiny_trace], rectangle_model(tiny_home, 3), tiny_home, access)
    assert predicted == [False, True]
    assert truth == [False, True]


def test_partial_knowledge_trains_on_the_first_half(tiny_home) -> None:
    visits = [benign_trace(tiny_home, [0] * a + [1] * 6 + [0] * 5) for a in (10, 11, 12, 13)]
    adm = AdmConfig.model_validate({"algorithm": "dbscan", "dbscan": {"eps": 5.0, "min_pts": 2}})
    assert train_knowledge(visits, adm, "all", tiny_home).summary.events == 4
    assert train_knowledge(visits, adm, "partial", tiny_home).summary.events == 2
    with pytest.raises(ValueError):
        train_knowledge(visits, adm, "none", tiny_home)


def test_naive_attack_is_mostly_detected_on_synthetic_days(tiny_home) -> None:
    synth = SynthConfigModel.model_validate(
        {
            "routines": [
                {
                    "occupant": 0,
                    "start_zone": 1,
                    "bands": [
                        {
                            "start": 0,
                            "end": 1440,
                            "transitions": {"0": {"1": 1.0}, "1": {"2": 2.0, "0": 1.0}, "2": {"1": 1.0}},
                        }
                    ],
                }
            ],
            "zone_dwell": {"0": {"range": [20, 40]}, "1": {"range": [30, 90]}, "2": {"range": [10, 30]}},
            "activity_weights": {"1": {"1": 1.0}, "2": {"1": 1.0}},
        }
    )
    access = replace(AccessProfile.full(tiny_home, tiny_home.slots_per_day), slots=frozenset(range(600, 900)))
    for seed in range(3):
        days = synth_trace(tiny_home, synth, 6, seed=seed).split_days(tiny_home.slots_per_day)
        model = train(days[:4], "dbscan", {"eps": 60.0, "min_pts": 2})
        metrics = confusion_metrics(*detection_labels(days[4:], model, tiny_home, access))
        assert metrics.recall >= 0.6


def test_split_attack_days_counts_from_the_end(tiny_home) -> None:
    days = _days(tiny_home, 4)
    train_days, attacked = split_attack_days(days, [-1, 0])
    assert train_days == days[1:3]
    assert attacked == [days[0], days[3]]
    with pytest.raises(ValueError):
        split_attack_days(days[:1], [-1])
    with pytest.raises(ValueError):
        split_attack_days(days[:2], [0, 1])


def test_adm_evaluation_has_one_row_per_algorithm_and_knowledge(tiny_home) -> None:
    train_days, test_days = split_attack_days(_days(tiny_home, 4), [-1])
    adms = [AdmConfig.model_validate(DBSCAN), AdmConfig.model_validate({"algorithm": "kmeans", "kmeans": {"k": 1}})]
    frame = adm_evaluation(tiny_home, train_days, test_days, adms)
    assert list(frame.columns) == ADM_EVAL_COLUMNS
    assert list(zip(frame["algorithm"], frame["knowledge"])) == [
        ("dbscan", "all"),
        ("dbscan", "partial"),
        ("kmeans", "all"),
        ("kmeans", "partial"),
    ]
    assert _ratios_in_unit_interval(frame)
    # each test day is scored once benign and once under the naive attack
    assert (frame[["tp", "fp", "fn", "tn"]].sum(axis=1) == 2 * len(test_days)).all()


def test_progressive_evaluation_has_one_row_per_prefix(tiny_home) -> None:
    train_days, test_days = split_attack_days(_days(tiny_home, 4), [-1])
    adm = AdmConfig.model_validate(DBSCAN)
    frame = progressive_evaluation(tiny_home, train_days, test_days, adm)
    assert list(frame.columns) == PROGRESSIVE_COLUMNS
    assert frame["days"].tolist() == [1, 2, 3]
    assert set(frame["algorithm"]) == {"dbscan"}
    assert _ratios_in_unit_interval(frame)
    assert progressive_evaluation(tiny_home, train_days, test_days, adm, prefixes=[2])["days"].tolist() == [2]


def test_impact_sweep_reports_every_cell(tiny_home) -> None:
    config = _sweep()
    reports = impact_sweep(tiny_home, _days(tiny_home, 3), config)
    assert len(reports) == 4 * 2
    assert {r.day for r in reports} == {2}
    benign = [r for r in reports if r.strategy == "benign"]
    assert all(r.uplift_usd == 0.0 and r.stealthy for r in benign)
    assert len({r.benign_usd for r in reports}) == 1
    windowed = [r for r in reports if r.strategy == "windowed"]
    assert all(r.stealthy and r.total_usd >= r.benign_usd - 1e-12 for r in windowed)
    assert list(impact_frame(reports).columns) == IMPACT_COLUMNS


def test_impact_sweep_needs_a_training_day(tiny_home) -> None:
    config = SweepConfig.model_validate({"home": "h", "synth": "s"})
    with pytest.raises(ValueError):
        impact_sweep(tiny_home, _days(tiny_home, 1), config)


def test_impact_sweep_is_the_same_with_worker_processes(tiny_home) -> None:
    config = _sweep(strategies=["benign", "windowed"], knowledge=["all", "partial"])
    days = _days(tiny_home, 3)
    serial = impact_sweep(tiny_home, days, config)
    parallel = impact_sweep(tiny_home, days, config, jobs=2)
    assert [r.as_dict() for r in parallel] == [r.as_dict() for r in serial]


def test_scalability_bench_reports_every_axis_value(tiny_home) -> None:
    config = BenchConfig.model_validate(
        {
            "home": "home.json",
            "synth": "synth.json",
            "windows": [2, 4],
            "zone_counts": [1, 3],
            "zone_window": 4,
            "repetitions": 2,
            "horizon": 8,
            "adm": DBSCAN,
        }
    )
    points = scalability_bench(tiny_home, _days(tiny_home, 3), config)
    assert [(p.axis, p.value) for p in points] == [("window", 2), ("window", 4), ("zones", 1), ("zones", 3)]
    assert all(p.ms >= 0.0 and p.nodes > 0 and not p.censored and p.repetitions == 2 for p in points)
    with pytest.raises(ValueError):
        scalability_bench(tiny_home, _days(tiny_home, 1), config)


def test_clone_zones_adds_empty_zones_with_copied_clusters(tiny_home, tiny_trace) -> None:
    model = rectangle_model(tiny_home, 3)
    grown, trace, grown_model, access = clone_zones(tiny_home, tiny_trace, model, 4)
    assert grown.n_zones == 5
    assert trace.co2.shape == (tiny_trace.n_slots, 5)
    assert (trace.occupant_count[:, 3:] == 0).all()
    assert access.zones == frozenset({0, 1, 2, 3, 4})
    assert grown.zones[3].volume > grown.zones[1].volume
    np.testing.assert_array_equal(grown_model.feasible_table(0, 3), model.feasible_table(0, 1))
    assert max_residual(trace, simulate(trace, grown), grown) < 1e-6


def test_clone_zones_can_restrict_access(tiny_home, tiny_trace) -> None:
    grown, trace, _, access = clone_zones(tiny_home, tiny_trace, rectangle_model(tiny_home, 3), 1)
    assert grown.n_zones == tiny_home.n_zones
    assert trace is tiny_trace
    assert access.zones == frozenset({0, 1})


def test_pruning_never_explores_more_nodes(tiny_home) -> None:
    context = ScheduleContext(_days(tiny_home, 1)[0], tiny_home, rectangle_model(tiny_home, 3))
    bounded = search_nodes(context, 4, node_budget=10**6)
    assert 0 < bounded <= search_nodes(context, 4, node_budget=10**6, use_bound=False)


def test_timed_point_reports_median_and_censoring(tiny_home) -> None:
    context = ScheduleContext(_days(tiny_home, 1)[0], tiny_home, rectangle_model(tiny_home, 3))
    point = _timed_point("window", 4, context, 4, 2, 10**6)
    assert not point.censored
    assert point.repetitions == 2
    assert point.nodes_unbounded >= point.nodes
    censored = _timed_point("window", 4, context, 4, 2, 1)
    assert censored.censored
    assert censored.nodes_unbounded == -1
