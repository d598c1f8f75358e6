"""Tests for the airflow solves, the IAQ recurrences and billing."""
from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from src.core_model import AIR_HEAT_FACTOR, SingularTemperature, SingularVentilation, Tariff
from src.services.controller_service import (
    ZoneState,
    billing,
    max_residual,
    recurrence_residuals,
    simulate,
    slot_consumption,
    solve_temp_airflow,
    solve_vent_airflow,
    zone_airflow,
)
from tests.conftest import benign_trace, make_home, make_zone


def test_vent_airflow_restores_setpoint() -> None:
    zone = make_zone(1, volume=1000.0)
    state = ZoneState(co2=800.0, outdoor_co2=400.0, emission=10000.0)
    assert solve_vent_airflow(state, zone) == pytest.approx(25.0)
    assert solve_vent_airflow(state, zone, form="corrected") == pytest.approx(25.0)


def test_vent_airflow_clamps_at_zero() -> None:
    zone = make_zone(1, volume=1000.0)
    state = ZoneState(co2=500.0, outdoor_co2=400.0, emission=0.0)
    assert solve_vent_airflow(state, zone) == 0.0


def test_verbatim_form_can_be_singular_when_slots_are_long() -> None:
    zone = make_zone(1, volume=1000.0)
    state = ZoneState(co2=800.0, outdoor_co2=400.0, emission=10000.0)
    with pytest.raises(SingularVentilation):
        solve_vent_airflow(state, zone, sampling_minutes=2)
    assert solve_vent_airflow(state, zone, sampling_minutes=2, form="corrected") == pytest.approx(25.0)


def test_temp_airflow_uses_sensible_heat() -> None:
    zone = make_zone(1)
    state = ZoneState(co2=800.0, outdoor_co2=400.0, occupant_heat=60.0, appliance_heat=40.0)
    assert solve_temp_airflow(state, zone) == pytest.approx(100.0 / (17.0 * AIR_HEAT_FACTOR))


def test_temp_airflow_rejects_singular_setpoint() -> None:
    zone = make_zone(1, temp_setpoint=55.0)
    with pytest.raises(SingularTemperature):
        solve_temp_airflow(ZoneState(co2=800.0, outdoor_co2=400.0), zone)


def test_zone_airflow_serves_the_larger_requirement() -> None:
    zone = make_zone(1, volume=1000.0)
    state = ZoneState(co2=800.0, outdoor_co2=400.0, emission=10000.0, occupant_heat=1000.0)
    solution = zone_airflow(state, zone)
    assert solution.q == pytest.approx(max(solution.q_vent, solution.q_temp))
    assert solution.q == pytest.approx(solution.q_temp)
    assert zone_airflow(state, make_zone(0)).q == 0.0


def test_billing_uses_battery_before_peak_rate() -> None:
    tariff = Tariff(offpeak_rate=0.1, peak_rate=0.2, peak_slots=frozenset({1, 2, 3}), battery_kwh=1.5)
    result = billing([1.0, 1.0, 1.0, 1.0], tariff, slots_per_day=1440)
    np.testing.assert_allclose(result.slot_costs, [0.1, 0.1, 0.2, 0.2])
    assert result.total == pytest.approx(0.6)
    np.testing.assert_allclose(result.cumulative_peak_kwh, [0.0, 1.0, 2.0, 3.0])


def test_billing_battery_recharges_every_day() -> None:
    tariff = Tariff(offpeak_rate=0.1, peak_rate=0.3, peak_slots=frozenset({0, 1}), battery_kwh=1.0)
    result = billing([1.0, 1.0, 1.0, 1.0], tariff, slots_per_day=2)
    np.testing.assert_allclose(result.slot_costs, [0.1, 0.3, 0.1, 0.3])


def test_billing_without_peak_slots_is_flat() -> None:
    tariff = Tariff(offpeak_rate=0.25, peak_rate=0.5, peak_slots=frozenset(), battery_kwh=0.0)
    assert billing([2.0, 2.0], tariff).total == pytest.approx(1.0)


def test_slot_consumption_splits_hvac_and_appliances(tiny_home) -> None:
    airflow = np.array([[0.0, 25.0, 0.0]])
    appliance_on = np.array([[True, False]])
    hvac, appliance = slot_consumption(airflow, appliance_on, tiny_home)
    assert hvac[0] == pytest.approx(25.0 * 20.0 * AIR_HEAT_FACTOR / 60000.0)
    assert appliance[0] == pytest.approx(100.0 / 60000.0)


def test_outside_zone_never_draws_air(tiny_home, tiny_trace) -> None:
    log = simulate(tiny_trace, tiny_home)
    assert np.all(log.airflow[:, 0] == 0.0)
    assert log.total_cost > 0.0
    assert log.total_cost == pytest.approx(log.slot_cost.sum())


def test_benign_traces_satisfy_recurrences(two_occupant_home) -> None:
    zones = np.array([[1, 2], [1, 2], [1, 1], [2, 1], [2, 0], [0, 0], [1, 0]])
    appliance_on = np.zeros((len(zones), two_occupant_home.n_appliances), dtype=bool)
    appliance_on[2:5, 1] = True
    trace = benign_trace(two_occupant_home, zones, appliance_on=appliance_on)
    log = simulate(trace, two_occupant_home)
    assert max_residual(trace, log, two_occupant_home) < 1e-6
    co2_res, temp_res = recurrence_residuals(trace, log, two_occupant_home)
    assert np.isnan(co2_res[0]).all()
    assert np.isnan(temp_res[:, 0]).all()


def test_tampered_reading_breaks_recurrence(tiny_home, tiny_trace) -> None:
    co2 = tiny_trace.co2.copy()
    co2[4, 1] += 25.0
    tampered = tiny_trace.with_changes(co2=co2)
    assert max_residual(tampered, simulate(tampered, tiny_home), tiny_home) > 1.0


def test_peak_slots_raise_the_bill(tiny_home, tiny_trace) -> None:
    offpeak = simulate(tiny_trace, tiny_home).total_cost
    peak_home = replace(tiny_home, tariff=replace(tiny_home.tariff, peak_slots=frozenset(range(1440))))
    assert simulate(tiny_trace, peak_home).total_cost == pytest.approx(2.0 * offpeak)


def test_corrected_form_changes_dynamics_only_for_long_slots() -> None:
    verbatim = make_home()
    corrected = make_home(ventilation_form="corrected")
    zones = [1, 1, 2, 2, 0]
    a = simulate(benign_trace(verbatim, zones), verbatim).total_cost
    b = simulate(benign_trace(corrected, zones), corrected).total_cost
    assert a == pytest.approx(b)
