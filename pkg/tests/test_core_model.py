"""Tests for domain types and structural validation."""
from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from src.core_model import (
    AccessProfile,
    ActivityProfile,
    AttackVector,
    ConfigError,
    InfeasibleSchedule,
    TraceFormatError,
    occupant_count_from_tracking,
    validate_home,
    validate_trace,
)
from tests.conftest import benign_trace, make_home, make_zone


def _rules(violations) -> set[tuple[str, str]]:
    return {(v.field, v.rule) for v in violations}


def test_valid_home_has_no_violations(tiny_home) -> None:
    assert validate_home(tiny_home) == []


def test_home_rejects_gaps_in_zone_ids(tiny_home) -> None:
    broken = replace(tiny_home, zones=(tiny_home.zones[0], replace(tiny_home.zones[2], id=3)))
    assert ("zones", "contiguous-ids") in _rules(validate_home(broken))


def test_home_rejects_singular_temperature_setpoint(tiny_home) -> None:
    zones = list(tiny_home.zones)
    zones[1] = make_zone(1, temp_setpoint=55.0)
    rules = _rules(validate_home(replace(tiny_home, zones=tuple(zones))))
    assert ("zones[1].temp_setpoint", "singular-airflow") in rules


def test_home_rejects_dangling_appliance_zone(tiny_home) -> None:
    appliance = replace(tiny_home.appliances[0], zone=9)
    rules = _rules(validate_home(replace(tiny_home, appliances=(appliance, tiny_home.appliances[1]))))
    assert ("appliances[0].zone", "dangling-reference") in rules


def test_home_requires_slots_to_cover_a_day(tiny_home) -> None:
    rules = _rules(validate_home(replace(tiny_home, slots_per_day=1000)))
    assert ("slots_per_day", "covers-day") in rules


def test_home_rejects_unordered_tariff(tiny_home) -> None:
    tariff = replace(tiny_home.tariff, peak_rate=0.01)
    assert ("tariff.peak_rate", "ordered") in _rules(validate_home(replace(tiny_home, tariff=tariff)))


def test_idle_activity_must_emit_nothing(tiny_home) -> None:
    idle = ActivityProfile(0, 1, 0, 100.0, 0.0)
    rules = _rules(validate_home(replace(tiny_home, activities=tiny_home.activities + (idle,))))
    assert ("activities[2]", "idle-is-zero") in rules


def test_activity_tables_resolve_idle_everywhere(tiny_home) -> None:
    emission, radiation = tiny_home.activity_tables
    assert np.all(emission[:, :, 0] == 0.0)
    assert tiny_home.profile(0, 0, 0) == (0.0, 0.0)
    assert tiny_home.profile(0, 0, 1) is None
    assert tiny_home.profile(0, 2, 1) == pytest.approx((12000.0, 120.0))
    assert tiny_home.activities_for(0, 1) == (0, 1)


def test_occupant_count_matches_tracking() -> None:
    counts = occupant_count_from_tracking([[0, 1], [1, 1], [2, 0]], 3)
    np.testing.assert_array_equal(counts, [[1, 1, 0], [0, 2, 0], [1, 0, 1]])


def test_occupant_count_rejects_flat_input() -> None:
    with pytest.raises(TraceFormatError):
        occupant_count_from_tracking([0, 1, 2], 3)


def test_trace_is_read_only(tiny_trace) -> None:
    with pytest.raises(ValueError):
        tiny_trace.co2[0, 0] = 1.0


def test_trace_window_keeps_absolute_slots(tiny_trace) -> None:
    window = tiny_trace.window(2, 5)
    assert window.n_slots == 3
    assert window.start_slot == 2
    np.testing.assert_array_equal(window.occupant_zone[:, 0], [2, 2, 2])


def test_split_days_cuts_at_midnight(tiny_home) -> None:
    trace = benign_trace(tiny_home, [1] * 6, start_slot=1437)
    days = trace.split_days(tiny_home.slots_per_day)
    assert [day.n_slots for day in days] == [3, 3]
    assert days[1].start_slot == 1440


def test_with_changes_rederives_counts(tiny_trace) -> None:
    moved = tiny_trace.with_changes(occupant_zone=np.zeros_like(tiny_trace.occupant_zone))
    assert moved.occupant_count[:, 0].tolist() == [1] * tiny_trace.n_slots


def test_validate_trace_accepts_benign_trace(tiny_home, tiny_trace) -> None:
    assert validate_trace(tiny_trace, tiny_home) == []


def test_validate_trace_flags_unresolved_activity(tiny_home) -> None:
    trace = benign_trace(tiny_home, [1, 1])
    broken = trace.with_changes(activity=np.array([[1], [7]]))
    violations = validate_trace(broken, tiny_home)
    assert violations[0].rule == "resolves"
    assert "slot 1" in violations[0].message


def test_validate_trace_flags_wrong_zone_count(tiny_home) -> None:
    trace = benign_trace(make_home(n_indoor=3), [1, 1])
    assert validate_trace(trace, tiny_home)[0].rule == "shape"


def test_access_profile_full_and_empty(tiny_home) -> None:
    full = AccessProfile.full(tiny_home, 4)
    assert full.zones == {0, 1, 2}
    assert not full.is_empty
    assert AccessProfile.empty().is_empty
    assert full.as_dict()["slots"] == [[0, 4]]


def test_identity_attack_vector(tiny_trace) -> None:
    vector = AttackVector.identity(tiny_trace)
    assert vector.is_identity
    assert vector.as_dict()["relocations"] == []


def test_errors_carry_context() -> None:
    error = ConfigError("bad", location="zones[1].volume")
    assert str(error) == "zones[1].volume: bad"
    infeasible = InfeasibleSchedule("stuck", constraint="max-stay", slot=4)
    assert infeasible.constraint == "max-stay"
    assert infeasible.slot == 4
    assert isinstance(error, ValueError)
