"""Demand-controlled HVAC model: airflow solves, energy use and battery-aware billing."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from ..core_model import (
    AIR_HEAT_FACTOR,
    OUTSIDE_ZONE,
    SINGULAR_TOLERANCE,
    WATT_MINUTES_PER_KWH,
    ControlLog,
    HomeModel,
    SensorTrace,
    SingularTemperature,
    SingularVentilation,
    Tariff,
    TraceFormatError,
    Zone,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ZoneState:
    """Inputs of the per-zone airflow solve at one slot.

    ``emission`` is the summed CO2 emission of everyone in the zone (ppm*ft^3/min),
    ``occupant_heat`` their summed radiation (W) and ``appliance_heat`` the radiated
    heat of switched-on appliances in the zone (W).
    """

    co2: float
    outdoor_co2: float
    emission: float = 0.0
    occupant_heat: float = 0.0
    appliance_heat: float = 0.0


@dataclass(frozen=True)
class AirflowSolution:
    q_vent: float
    q_temp: float
    q: float

    def as_dict(self) -> Dict[str, Any]:
        return {"q_vent": self.q_vent, "q_temp": self.q_temp, "q": self.q}


@dataclass(frozen=True, eq=False)
class ZoneLoads:
    """Per-slot, per-zone loads derived from a trace; arrays are [slot, zone]."""

    emission: np.ndarray
    occupant_heat: np.ndarray
    appliance_heat: np.ndarray

    @property
    def heat(self) -> np.ndarray:
        return self.occupant_heat + self.appliance_heat


@dataclass(frozen=True, eq=False)
class BillingResult:
    total: float
    slot_costs: np.ndarray
    cumulative_peak_kwh: np.ndarray


def _zone_constants(home: HomeModel) -> dict[str, np.ndarray]:
    zones = home.zones
    return {
        "volume": np.array([zone.volume for zone in zones], dtype=float),
        "co2_setpoint": np.array([zone.co2_setpoint for zone in zones], dtype=float),
        "temp_delta": np.array([zone.temp_setpoint - zone.supply_air_temp for zone in zones], dtype=float),
        "mixed_delta": np.array([zone.mixed_air_temp - zone.supply_air_temp for zone in zones], dtype=float),
        "indoor": np.array([not zone.is_outside for zone in zones], dtype=bool),
    }


def _vent_denominator(co2: Any, outdoor_co2: Any, dt: float, form: str) -> Any:
    if form == "corrected":
        return dt * (co2 - outdoor_co2)
    return co2 - dt * outdoor_co2


def _raw_vent_airflow(
    emission: Any,
    co2: Any,
    outdoor_co2: Any,
    volume: Any,
    co2_setpoint: Any,
    dt: float,
    form: str,
) -> Any:
    """Unclamped ventilation airflow; every array path shares this expression."""

    numerator = emission * dt - volume * (co2_setpoint - co2)
    return numerator / _vent_denominator(co2, outdoor_co2, dt, form)


def _raw_temp_airflow(heat: Any, temp_delta: Any) -> Any:
    return heat / (temp_delta * AIR_HEAT_FACTOR)


def solve_vent_airflow(
    state: ZoneState,
    zone: Zone,
    *,
    sampling_minutes: int = 1,
    form: str = "verbatim",
) -> float:
    """Solve the CO2 balance for the outdoor airflow that restores the setpoint.

    Args:
        state: Zone readings at the slot.
        zone: Zone parameters (volume and CO2 setpoint).
        sampling_minutes: Slot length in minutes.
        form: ``"verbatim"`` keeps the return-air term without the slot length;
            ``"corrected"`` applies it.

    Returns:
        Airflow in cfm, clamped below at 0.

    Raises:
        SingularVentilation: If indoor CO2 is indistinguishable from the supplied-air term.
    """

    denominator = _vent_denominator(state.co2, state.outdoor_co2, sampling_minutes, form)
    if abs(denominator) < SINGULAR_TOLERANCE:
        raise SingularVentilation(
            f"Indoor CO2 {state.co2} ppm matches supplied air in zone {zone.id}.", zone=zone.id
        )
    raw = _raw_vent_airflow(
        state.emission,
        state.co2,
        state.outdoor_co2,
        zone.volume,
        zone.co2_setpoint,
        sampling_minutes,
        form,
    )
    return max(float(raw), 0.0)


def solve_temp_airflow(state: ZoneState, zone: Zone) -> float:
    """Solve the sensible-heat balance for the supply airflow of a zone."""

    temp_delta = zone.temp_setpoint - zone.supply_air_temp
    if temp_delta == 0:
        raise SingularTemperature(f"Zone {zone.id} setpoint equals supply-air temperature.", zone=zone.id)
    raw = _raw_temp_airflow(state.occupant_heat + state.appliance_heat, temp_delta)
    return max(float(raw), 0.0)


def zone_airflow(
    state: ZoneState,
    zone: Zone,
    *,
    sampling_minutes: int = 1,
    form: str = "verbatim",
) -> AirflowSolution:
    """Return both requirements and the served airflow (the larger one)."""

    if zone.is_outside:
        return AirflowSolution(0.0, 0.0, 0.0)
    q_vent = solve_vent_airflow(state, zone, sampling_minutes=sampling_minutes, form=form)
    q_temp = solve_temp_airflow(state, zone)
    return AirflowSolution(q_vent=q_vent, q_temp=q_temp, q=max(q_vent, q_temp, 0.0))


def _appliance_matrix(home: HomeModel, values: np.ndarray) -> np.ndarray:
    """Return a [appliance, zone] matrix spreading ``values`` into each appliance's zone."""

    matrix = np.zeros((home.n_appliances, home.n_zones), dtype=float)
    if home.n_appliances:
        matrix[np.arange(home.n_appliances), home.appliance_zone] = values
    return matrix


def compute_zone_loads(
    home: HomeModel,
    occupant_zone: np.ndarray,
    activity: np.ndarray,
    appliance_on: np.ndarray,
) -> ZoneLoads:
    """Aggregate occupant emission/radiation and appliance heat per slot and zone."""

    n_slots = occupant_zone.shape[0]
    emission_table, radiation_table = home.activity_tables
    emission = np.zeros((n_slots, home.n_zones), dtype=float)
    occupant_heat = np.zeros((n_slots, home.n_zones), dtype=float)
    rows = np.arange(n_slots)
    for occupant in range(occupant_zone.shape[1]):
        zones = occupant_zone[:, occupant]
        acts = activity[:, occupant]
        if np.any(acts >= emission_table.shape[2]) or np.any(acts < 0):
            raise TraceFormatError(f"Occupant {occupant} reports an unknown activity id.")
        ce = emission_table[occupant, zones, acts]
        hr = radiation_table[occupant, zones, acts]
        unresolved = np.flatnonzero(np.isnan(ce))
        if unresolved.size:
            t = int(unresolved[0])
            raise TraceFormatError(
                f"Activity {acts[t]} of occupant {occupant} in zone {zones[t]} at slot {t} has no profile."
            )
        np.add.at(emission, (rows, zones), ce)
        np.add.at(occupant_heat, (rows, zones), hr)
    appliance_heat = np.asarray(appliance_on, dtype=float) @ _appliance_matrix(home, home.appliance_heat)
    return ZoneLoads(emission=emission, occupant_heat=occupant_heat, appliance_heat=appliance_heat)


def airflow_matrix(
    home: HomeModel,
    co2: np.ndarray,
    outdoor_co2: np.ndarray,
    loads: ZoneLoads,
    *,
    slot_offset: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized airflow solve over slots; returns clamped (q_vent, q_temp, q)."""

    for zone in home.zones:
        if not zone.is_outside and zone.temp_setpoint == zone.supply_air_temp:
            raise SingularTemperature(f"Zone {zone.id} setpoint equals supply-air temperature.", zone=zone.id)
    return _airflow_arrays(
        _zone_constants(home),
        float(home.sampling_minutes),
        home.ventilation_form,
        co2,
        outdoor_co2,
        loads.emission,
        loads.heat,
        slot_offset=slot_offset,
    )


def _airflow_arrays(
    constants: dict[str, np.ndarray],
    dt: float,
    form: str,
    co2: np.ndarray,
    outdoor_co2: Any,
    emission: np.ndarray,
    heat: np.ndarray,
    *,
    slot_offset: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    indoor = constants["indoor"]
    outdoor = np.asarray(outdoor_co2, dtype=float).reshape(-1, 1)
    denominator = _vent_denominator(co2, outdoor, dt, form)
    singular = (np.abs(denominator) < SINGULAR_TOLERANCE) & indoor[None, :]
    if np.any(singular):
        t, z = np.argwhere(singular)[0]
        raise SingularVentilation(
            f"Indoor CO2 {co2[t, z]} ppm matches supplied air in zone {z} at slot {t + slot_offset}.",
            slot=int(t + slot_offset),
            zone=int(z),
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        q_vent = _raw_vent_airflow(
            emission, co2, outdoor, constants["volume"], constants["co2_setpoint"], dt, form
        )
        q_temp = _raw_temp_airflow(heat, constants["temp_delta"])
    q_vent = np.where(indoor[None, :], np.maximum(q_vent, 0.0), 0.0)
    q_temp = np.where(indoor[None, :], np.maximum(q_temp, 0.0), 0.0)
    return q_vent, q_temp, np.maximum(q_vent, q_temp)


class ZoneDynamics:
    """Single-slot airflow, CO2 and energy steps for one home.

    Shares the expressions of the vectorized path so a slot-by-slot replay and
    ``simulate`` agree.
    """

    def __init__(self, home: HomeModel) -> None:
        for zone in home.zones:
            if not zone.is_outside and zone.temp_setpoint == zone.supply_air_temp:
                raise SingularTemperature(
                    f"Zone {zone.id} setpoint equals supply-air temperature.", zone=zone.id
                )
        self.home = home
        self.constants = _zone_constants(home)
        self.indoor = self.constants["indoor"]
        self.volume = self.constants["volume"]
        self.safe_volume = np.where(self.indoor, self.volume, 1.0)
        self.dt = float(home.sampling_minutes)
        self.form = home.ventilation_form
        self.hvac_coefficient = (
            np.where(self.indoor, self.constants["mixed_delta"], 0.0) * AIR_HEAT_FACTOR * self.dt / WATT_MINUTES_PER_KWH
        )
        self.appliance_kwh = home.appliance_power * self.dt / WATT_MINUTES_PER_KWH
        self.appliance_zone_heat = _appliance_matrix(home, home.appliance_heat)

    def airflow(
        self,
        co2: np.ndarray,
        outdoor_co2: float,
        emission: np.ndarray,
        heat: np.ndarray,
        *,
        slot: int = 0,
    ) -> np.ndarray:
        """Served airflow per zone for one slot."""

        _, _, served = _airflow_arrays(
            self.constants,
            self.dt,
            self.form,
            co2[None, :],
            np.array([outdoor_co2]),
            emission[None, :],
            heat[None, :],
            slot_offset=slot,
        )
        return served[0]

    def next_co2(
        self, emission: np.ndarray, co2: np.ndarray, outdoor_co2: float, airflow: np.ndarray
    ) -> np.ndarray:
        return _next_co2(emission, co2, outdoor_co2, airflow, self.safe_volume, self.dt, self.form)

    def hvac_kwh(self, airflow: np.ndarray) -> float:
        return float(np.dot(airflow, self.hvac_coefficient))


def slot_consumption(
    airflows: np.ndarray,
    appliance_on: np.ndarray,
    home: HomeModel,
) -> tuple[np.ndarray, np.ndarray]:
    """Return (hvac_kwh, appliance_kwh) per slot for [slot, zone] airflows.

    One-dimensional inputs are treated as a single slot.
    """

    flows = np.atleast_2d(np.asarray(airflows, dtype=float))
    status = np.atleast_2d(np.asarray(appliance_on, dtype=float))
    dt = float(home.sampling_minutes)
    constants = _zone_constants(home)
    mixed_delta = constants["mixed_delta"]
    indoor = constants["indoor"]
    hvac = (flows * np.where(indoor, mixed_delta, 0.0)).sum(axis=1) * AIR_HEAT_FACTOR * dt / WATT_MINUTES_PER_KWH
    if home.n_appliances:
        appliance = status @ home.appliance_power * dt / WATT_MINUTES_PER_KWH
    else:
        appliance = np.zeros(flows.shape[0])
    return hvac, appliance


def billing(
    consumption: Any,
    tariff: Tariff,
    *,
    slots_per_day: int = 1440,
    start_slot: int = 0,
) -> BillingResult:
    """Bill per-slot consumption with a battery that covers the start of each peak window.

    Peak slots are billed at the off-peak rate while the day's cumulative peak consumption,
    including the slot itself, stays within the battery size; afterwards at the peak rate.
    """

    values = np.asarray(consumption, dtype=float)
    n_slots = values.shape[0]
    peak = tariff.peak_mask(n_slots, slots_per_day, start_slot)
    day = (start_slot + np.arange(n_slots)) // slots_per_day
    cumulative = (
        pd.Series(np.where(peak, values, 0.0)).groupby(day).cumsum().to_numpy()
        if n_slots
        else np.zeros(0)
    )
    cumulative = np.where(peak, cumulative, 0.0)
    rate = np.where(peak & (cumulative > tariff.battery_kwh), tariff.peak_rate, tariff.offpeak_rate)
    slot_costs = values * rate
    return BillingResult(total=float(slot_costs.sum()), slot_costs=slot_costs, cumulative_peak_kwh=cumulative)


def simulate(trace: SensorTrace, home: HomeModel) -> ControlLog:
    """Run the controller over a trace and bill the result.

    Args:
        trace: Sensor readings, benign or attacked.
        home: Home the trace belongs to.

    Returns:
        Control log with per-slot airflow, energy and cost.

    Raises:
        SingularVentilation: With slot and zone context when the CO2 solve is singular.
        SingularTemperature: When a zone setpoint equals its supply-air temperature.
    """

    loads = compute_zone_loads(home, trace.occupant_zone, trace.activity, trace.appliance_on)
    q_vent, q_temp, airflow = airflow_matrix(
        home, trace.co2, trace.outdoor_co2, loads, slot_offset=trace.start_slot
    )
    hvac_kwh, appliance_kwh = slot_consumption(airflow, trace.appliance_on, home)
    consumption = hvac_kwh + appliance_kwh
    bill = billing(
        consumption, home.tariff, slots_per_day=home.slots_per_day, start_slot=trace.start_slot
    )
    logger.debug("Simulated %d slots; total cost %.6f", trace.n_slots, bill.total)
    return ControlLog(
        q_vent=q_vent,
        q_temp=q_temp,
        airflow=airflow,
        consumption=consumption,
        hvac_kwh=hvac_kwh,
        appliance_kwh=appliance_kwh,
        cumulative_peak_kwh=bill.cumulative_peak_kwh,
        slot_cost=bill.slot_costs,
    )


def _next_co2(
    emission: np.ndarray,
    co2: np.ndarray,
    outdoor_co2: float,
    airflow: np.ndarray,
    volume: np.ndarray,
    dt: float,
    form: str,
) -> np.ndarray:
    """CO2 one slot later given the airflow served during the current slot."""

    return_term = airflow * dt / volume if form == "corrected" else airflow / volume
    return emission * dt / volume + (1.0 - return_term) * co2 + airflow * dt / volume * outdoor_co2


def _next_temp(temp: np.ndarray, heat_next: np.ndarray, airflow: np.ndarray) -> np.ndarray:
    """Temperature one slot later; an unconditioned zone keeps its temperature."""

    with np.errstate(divide="ignore", invalid="ignore"):
        step = heat_next / (airflow * AIR_HEAT_FACTOR)
    return np.where(airflow > 0, temp + step, temp)


def propagate_iaq(
    home: HomeModel,
    *,
    occupant_zone: np.ndarray,
    activity: np.ndarray,
    appliance_on: np.ndarray,
    outdoor_co2: np.ndarray,
    outdoor_temp: np.ndarray,
    initial_co2: np.ndarray,
    initial_temp: np.ndarray,
    fixed: Optional[np.ndarray] = None,
    fixed_co2: Optional[np.ndarray] = None,
    fixed_temp: Optional[np.ndarray] = None,
    slot_offset: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Forward-simulate zone CO2 and temperature so they satisfy the slot recurrences.

    Cells flagged in ``fixed`` take their values from ``fixed_co2``/``fixed_temp`` instead
    of the recurrence; the outside zone always mirrors outdoor conditions.

    Returns:
        ``(co2, temp)`` arrays indexed [slot, zone].
    """

    n_slots = occupant_zone.shape[0]
    outdoor_co2 = np.asarray(outdoor_co2, dtype=float)
    outdoor_temp = np.asarray(outdoor_temp, dtype=float)
    loads = compute_zone_loads(home, occupant_zone, activity, appliance_on)
    heat = loads.heat
    constants = _zone_constants(home)
    indoor = constants["indoor"]
    volume = np.where(indoor, constants["volume"], 1.0)
    dt = float(home.sampling_minutes)
    form = home.ventilation_form

    co2 = np.zeros((n_slots, home.n_zones), dtype=float)
    temp = np.zeros((n_slots, home.n_zones), dtype=float)
    if n_slots == 0:
        return co2, temp
    co2[0] = initial_co2
    temp[0] = initial_temp
    co2[:, OUTSIDE_ZONE] = outdoor_co2
    temp[:, OUTSIDE_ZONE] = outdoor_temp

    for zone in home.zones:
        if not zone.is_outside and zone.temp_setpoint == zone.supply_air_temp:
            raise SingularTemperature(f"Zone {zone.id} setpoint equals supply-air temperature.", zone=zone.id)

    for t in range(1, n_slots):
        previous = t - 1
        _, _, airflow = _airflow_arrays(
            constants,
            dt,
            form,
            co2[previous : previous + 1],
            outdoor_co2[previous : previous + 1],
            loads.emission[previous : previous + 1],
            heat[previous : previous + 1],
            slot_offset=slot_offset + previous,
        )
        served = airflow[0]
        next_co2 = _next_co2(
            loads.emission[previous], co2[previous], outdoor_co2[previous], served, volume, dt, form
        )
        next_temp = _next_temp(temp[previous], heat[t], served)
        co2[t] = np.where(indoor, next_co2, outdoor_co2[t])
        temp[t] = np.where(indoor, next_temp, outdoor_temp[t])
        if fixed is not None:
            row = fixed[t]
            co2[t, row] = fixed_co2[t, row]
            temp[t, row] = fixed_temp[t, row]
    return co2, temp


def recurrence_residuals(
    trace: SensorTrace,
    log: ControlLog,
    home: HomeModel,
) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of the CO2 and temperature slot recurrences.

    Returns:
        ``(co2_residual, temp_residual)`` indexed [slot, zone]; slot 0 and the outside
        zone are NaN because no recurrence applies there.
    """

    constants = _zone_constants(home)
    indoor = constants["indoor"]
    volume = np.where(indoor, constants["volume"], 1.0)
    dt = float(home.sampling_minutes)
    loads = compute_zone_loads(home, trace.occupant_zone, trace.activity, trace.appliance_on)

    co2_res = np.full(trace.co2.shape, np.nan)
    temp_res = np.full(trace.temp.shape, np.nan)
    if trace.n_slots < 2:
        return co2_res, temp_res

    q_prev = log.airflow[:-1]
    c_prev = trace.co2[:-1]
    c_now = trace.co2[1:]
    oc_prev = trace.outdoor_co2[:-1].reshape(-1, 1)
    return_term = q_prev * dt / volume if home.ventilation_form == "corrected" else q_prev / volume
    lhs = loads.emission[:-1] * dt / volume
    rhs = c_now - (1.0 - return_term) * c_prev - q_prev * dt / volume * oc_prev
    co2_res[1:] = np.abs(lhs - rhs)

    heat_now = loads.heat[1:]
    t_step = trace.temp[1:] - trace.temp[:-1]
    conditioned = q_prev > 0
    temp_res[1:] = np.where(
        conditioned,
        np.abs(q_prev * t_step * AIR_HEAT_FACTOR - heat_now),
        np.abs(t_step),
    )
    co2_res[:, ~indoor] = np.nan
    temp_res[:, ~indoor] = np.nan
    return co2_res, temp_res


def max_residual(trace: SensorTrace, log: ControlLog, home: HomeModel) -> float:
    """Largest recurrence residual over all checked cells (0 for one-slot traces)."""

    co2_res, temp_res = recurrence_residuals(trace, log, home)
    stacked = np.concatenate([co2_res.ravel(), temp_res.ravel()])
    stacked = stacked[~np.isnan(stacked)]
    return float(stacked.max()) if stacked.size else 0.0


__all__ = [
    "AirflowSolution",
    "BillingResult",
    "ZoneLoads",
    "ZoneDynamics",
    "ZoneState",
    "airflow_matrix",
    "billing",
    "compute_zone_loads",
    "max_residual",
    "propagate_iaq",
    "recurrence_residuals",
    "simulate",
    "slot_consumption",
    "solve_temp_airflow",
    "solve_vent_airflow",
    "zone_airflow",
]
