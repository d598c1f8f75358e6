"""Tests for injection, replay, trigger planning and the stealth check."""
from __future__ import annotations

import numpy as np
import pytest

from src.core_model import AccessProfile, AccessViolation, AttackVector
from src.services.attack_service import (
    AttackSchedule,
    TriggerPlan,
    apply_fdi,
    attack_cost,
    realtime_replay,
    scheduled_arrivals,
    trigger_decision,
    verify_stealth,
)
from src.services.controller_service import max_residual, simulate
from tests.conftest import benign_trace, rectangle_model


def _relocate(trace, moves):
    vector = AttackVector.identity(trace)
    return AttackVector(vector.delta_co2, vector.delta_temp, relocations=moves)


def _detour(trace, slots=slice(7, 10), zone=2):
    zones = trace.occupant_zone.copy()
    zones[slots, 0] = zone
    return AttackSchedule(zones, np.where(zones > 0, 1, 0))


def _verdict(original, attacked, home, model, access=None):
    return verify_stealth(original, attacked, simulate(attacked, home), model, home, access)


def test_identity_vector_leaves_trace_alone(tiny_trace) -> None:
    assert apply_fdi(tiny_trace, AttackVector.identity(tiny_trace)) is tiny_trace


def test_relocation_rewrites_zone_and_activity(tiny_trace) -> None:
    attacked = apply_fdi(tiny_trace, _relocate(tiny_trace, {(8, 0): (2, 1)}))
    assert attacked.occupant_zone[8, 0] == 2
    assert attacked.occupant_count[8].tolist() == [0, 0, 1]
    np.testing.assert_array_equal(attacked.co2, tiny_trace.co2)


def test_relocation_needs_occupant_access(tiny_home, tiny_trace) -> None:
    access = AccessProfile(
        zones=frozenset({0, 1, 2}), slots=frozenset(range(12)), occupant_tags=frozenset(), appliances=frozenset()
    )
    with pytest.raises(AccessViolation):
        apply_fdi(tiny_trace, _relocate(tiny_trace, {(8, 0): (2, 1)}), access, tiny_home)


def test_reading_delta_needs_slot_access(tiny_home, tiny_trace) -> None:
    delta = np.zeros_like(tiny_trace.co2)
    delta[3, 1] = 10.0
    access = AccessProfile.full(tiny_home, 3)
    vector = AttackVector(delta, np.zeros_like(delta))
    with pytest.raises(AccessViolation):
        apply_fdi(tiny_trace, vector, access, tiny_home)


def test_activation_access_needs_the_appliance_zone(tiny_home, tiny_trace) -> None:
    vector = AttackVector.identity(tiny_trace)
    vector = AttackVector(vector.delta_co2, vector.delta_temp, activations=frozenset({(7, 1)}))
    full = AccessProfile.full(tiny_home, tiny_trace.n_slots)
    with pytest.raises(AccessViolation):
        apply_fdi(tiny_trace, vector, full)
    assert apply_fdi(tiny_trace, vector, full, tiny_home).appliance_on[7, 1]
    no_zone_two = AccessProfile(
        zones=frozenset({0, 1}), slots=frozenset(range(12)), occupant_tags=frozenset({0}), appliances=frozenset({0, 1})
    )
    with pytest.raises(AccessViolation):
        apply_fdi(tiny_trace, vector, no_zone_two, tiny_home)


def test_activation_only_switches_off_appliances_on(tiny_home) -> None:
    on = np.zeros((3, tiny_home.n_appliances), dtype=bool)
    on[1, 0] = True
    trace = benign_trace(tiny_home, [0, 0, 0], appliance_on=on)
    vector = AttackVector.identity(trace)
    with pytest.raises(ValueError):
        apply_fdi(trace, AttackVector(vector.delta_co2, vector.delta_temp, activations=frozenset({(1, 0)})))


def test_untouched_trace_is_stealthy(tiny_home, tiny_trace) -> None:
    verdict = _verdict(tiny_trace, tiny_trace, tiny_home, rectangle_model(tiny_home, 20))
    assert verdict.stealthy
    assert verdict.as_dict() == {"stealthy": True, "violated": [], "violations": []}


def test_relocation_without_new_readings_breaks_recurrence(tiny_home, tiny_trace) -> None:
    attacked = apply_fdi(tiny_trace, _relocate(tiny_trace, {(8, 0): (2, 1)}))
    verdict = _verdict(tiny_trace, attacked, tiny_home, rectangle_model(tiny_home, 20))
    assert not verdict.stealthy
    assert "temperature-recurrence" in verdict.violated
    assert "occupant-conservation" not in verdict.violated


def test_moving_occupants_out_of_scope_breaks_conservation(tiny_home, tiny_trace) -> None:
    attacked = apply_fdi(tiny_trace, _relocate(tiny_trace, {(8, 0): (2, 1)}))
    access = AccessProfile(
        zones=frozenset({0, 1}), slots=frozenset(range(12)), occupant_tags=frozenset({0}), appliances=frozenset()
    )
    verdict = _verdict(tiny_trace, attacked, tiny_home, rectangle_model(tiny_home, 20), access)
    assert "occupant-conservation" in verdict.violated
    assert any(v.slot == 8 for v in verdict.violations if v.constraint == "occupant-conservation")


def test_stays_outside_clusters_are_flagged(tiny_home, tiny_trace) -> None:
    attacked, _ = realtime_replay(_detour(tiny_trace), None, tiny_trace, tiny_home)
    model = rectangle_model(tiny_home, 20, zones=[0, 1])
    verdict = _verdict(tiny_trace, attacked, tiny_home, model)
    assert verdict.violated[0] == "cluster-consistency"


def test_activating_in_occupied_zone_is_flagged(tiny_home, tiny_trace) -> None:
    vector = AttackVector.identity(tiny_trace)
    attacked = apply_fdi(tiny_trace, AttackVector(vector.delta_co2, vector.delta_temp, activations=frozenset({(0, 0)})))
    verdict = _verdict(tiny_trace, attacked, tiny_home, rectangle_model(tiny_home, 20))
    assert "appliance-trigger" in verdict.violated


def test_replay_keeps_readings_on_the_recurrences(tiny_home, tiny_trace) -> None:
    schedule = _detour(tiny_trace)
    plan = TriggerPlan(frozenset({(7, 1)}), frozenset({(7, 2)}))
    attacked, vector = realtime_replay(schedule, plan, tiny_trace, tiny_home)
    log = simulate(attacked, tiny_home)
    assert max_residual(attacked, log, tiny_home) < 1e-6
    assert vector.activations == frozenset({(7, 1)})
    assert set(vector.relocations) == {(7, 0), (8, 0), (9, 0)}
    np.testing.assert_array_equal(attacked.co2[:7], tiny_trace.co2[:7])
    assert _verdict(tiny_trace, attacked, tiny_home, rectangle_model(tiny_home, 20)).stealthy


def test_replay_with_no_access_is_identity(tiny_home, tiny_trace) -> None:
    attacked, vector = realtime_replay(_detour(tiny_trace), None, tiny_trace, tiny_home, AccessProfile.empty())
    assert attacked is tiny_trace
    assert vector.is_identity


def test_replay_rejects_mismatched_schedule(tiny_home, tiny_trace) -> None:
    zones = np.ones((3, 1), dtype=int)
    with pytest.raises(ValueError):
        realtime_replay(AttackSchedule(zones, zones), None, tiny_trace, tiny_home)


def test_scheduled_arrivals_track_moves() -> None:
    arrivals = scheduled_arrivals(np.array([[1], [1], [2], [2], [0]]))
    assert arrivals == [[None], [None], [2], [2], [4]]


def test_triggers_fire_only_in_actually_empty_zones(tiny_home, tiny_trace) -> None:
    plan = trigger_decision(_detour(tiny_trace), tiny_trace, rectangle_model(tiny_home, 20, min_duration=2), tiny_home)
    assert plan.activations == frozenset({(7, 1), (8, 1), (9, 1)})
    assert plan.zones == frozenset({(7, 2), (8, 2), (9, 2)})


def test_trigger_window_follows_min_stay(tiny_home, tiny_trace) -> None:
    # shortest stay is one slot past arrival, so slots 7 and 8 may trigger
    plan = trigger_decision(_detour(tiny_trace), tiny_trace, rectangle_model(tiny_home, 20), tiny_home)
    assert plan.activations == frozenset({(7, 1), (8, 1)})


def test_benign_schedule_triggers_nothing(tiny_home, tiny_trace) -> None:
    schedule = AttackSchedule.from_trace(tiny_trace)
    assert len(trigger_decision(schedule, tiny_trace, rectangle_model(tiny_home, 20), tiny_home)) == 0


def test_attack_cost_matches_controller_bill(tiny_home, tiny_trace) -> None:
    attacked, _ = realtime_replay(_detour(tiny_trace), None, tiny_trace, tiny_home)
    assert attack_cost(tiny_trace, tiny_home) == pytest.approx(simulate(tiny_trace, tiny_home).total_cost)
    assert attack_cost(attacked, tiny_home) != pytest.approx(attack_cost(tiny_trace, tiny_home))


def test_schedule_frame_is_long_form(tiny_trace) -> None:
    frame = AttackSchedule.from_trace(tiny_trace).to_frame(start_slot=100)
    assert list(frame.columns) == ["slot", "occupant_id", "zone_id", "activity_id"]
    assert frame["slot"].iloc[0] == 100
    assert len(frame) == tiny_trace.n_slots
