"""Shared builders: tiny homes, physics-consistent traces and rectangle detectors."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import pytest

from src.core_model import (
    ActivityProfile,
    Appliance,
    HomeModel,
    OccupantProfile,
    SensorTrace,
    Tariff,
    Zone,
)
from src.services.adm_service import AdmModel, HullCluster, model_from_hulls
from src.services.controller_service import propagate_iaq
from src.utils.hull import rectangle_hull


def make_zone(zone_id: int, volume: float = 1000.0, **overrides: float) -> Zone:
    params = {
        "co2_setpoint": 400.0 if zone_id == 0 else 800.0,
        "temp_setpoint": 72.0,
        "supply_air_temp": 55.0,
        "mixed_air_temp": 75.0,
    }
    params.update(overrides)
    return Zone(id=zone_id, name=f"zone-{zone_id}", volume=0.0 if zone_id == 0 else volume, **params)


def make_home(
    n_indoor: int = 2,
    n_occupants: int = 1,
    *,
    peak_slots: Sequence[int] = (),
    battery_kwh: float = 0.0,
    offpeak_rate: float = 0.1,
    peak_rate: float = 0.2,
    ventilation_form: str = "verbatim",
) -> HomeModel:
    """Outside plus ``n_indoor`` zones; one activity per indoor zone and one appliance each."""

    zones = [make_zone(0)] + [make_zone(z, volume=500.0 * (z + 1)) for z in range(1, n_indoor + 1)]
    occupants = [OccupantProfile(o, f"occupant-{o}") for o in range(n_occupants)]
    activities = [
        ActivityProfile(o, z, 1, 8000.0 + 2000.0 * z, 80.0 + 20.0 * z, "active")
        for o in range(n_occupants)
        for z in range(1, n_indoor + 1)
    ]
    appliances = [
        Appliance(id=z - 1, name=f"lamp-{z}", zone=z, power_w=100.0 * z, heat_radiation_factor=0.5, voice_triggerable=True)
        for z in range(1, n_indoor + 1)
    ]
    return HomeModel(
        zones=tuple(zones),
        occupants=tuple(occupants),
        appliances=tuple(appliances),
        activities=tuple(activities),
        tariff=Tariff(
            offpeak_rate=offpeak_rate,
            peak_rate=peak_rate,
            peak_slots=frozenset(peak_slots),
            battery_kwh=battery_kwh,
        ),
        sampling_minutes=1,
        slots_per_day=1440,
        ventilation_form=ventilation_form,
        name="tiny",
    )


def benign_trace(
    home: HomeModel,
    occupant_zone: Sequence[Sequence[int]],
    *,
    activity: Optional[Sequence[Sequence[int]]] = None,
    appliance_on: Optional[np.ndarray] = None,
    outdoor_co2: float = 400.0,
    outdoor_temp: float = 85.0,
    start_slot: int = 0,
) -> SensorTrace:
    """Trace whose readings follow the slot recurrences for the given occupancy.

    Indoor occupants default to activity 1, outside ones to idle.
    """

    zones = np.asarray(occupant_zone, dtype=int)
    if zones.ndim == 1:
        zones = zones[:, None]
    acts = np.where(zones > 0, 1, 0) if activity is None else np.asarray(activity, dtype=int).reshape(zones.shape)
    n_slots = zones.shape[0]
    on = np.zeros((n_slots, home.n_appliances), dtype=bool) if appliance_on is None else np.asarray(appliance_on)
    outdoor_c = np.full(n_slots, outdoor_co2)
    outdoor_t = np.full(n_slots, outdoor_temp)
    initial_co2 = np.array([outdoor_co2] + [z.start_co2 for z in home.zones[1:]])
    initial_temp = np.array([outdoor_temp] + [z.start_temp for z in home.zones[1:]])
    co2, temp = propagate_iaq(
        home,
        occupant_zone=zones,
        activity=acts,
        appliance_on=on,
        outdoor_co2=outdoor_c,
        outdoor_temp=outdoor_t,
        initial_co2=initial_co2,
        initial_temp=initial_temp,
        slot_offset=start_slot,
    )
    return SensorTrace.from_arrays(
        occupant_zone=zones,
        activity=acts,
        co2=co2,
        temp=temp,
        appliance_on=on,
        outdoor_temp=outdoor_t,
        outdoor_co2=outdoor_c,
        start_slot=start_slot,
    )


def rectangle_cluster(occupant: int, zone: int, arrivals: tuple[float, float], durations: tuple[float, float]) -> HullCluster:
    points = np.array([[arrivals[0], durations[0]], [arrivals[1], durations[1]]])
    return HullCluster(occupant, zone, rectangle_hull(points, margin=0.0), size=2)


def rectangle_model(
    home: HomeModel,
    max_duration: int,
    *,
    min_duration: int = 0,
    zones: Optional[Sequence[int]] = None,
) -> AdmModel:
    """Every arrival of the day may stay ``min_duration..max_duration`` slots in the given zones."""

    zones = range(home.n_zones) if zones is None else zones
    hulls = [
        rectangle_cluster(o, z, (0.0, float(home.slots_per_day - 1)), (float(min_duration), float(max_duration)))
        for o in range(home.n_occupants)
        for z in zones
    ]
    return model_from_hulls(hulls, slots_per_day=home.slots_per_day)


@pytest.fixture
def tiny_home() -> HomeModel:
    return make_home()


@pytest.fixture
def two_occupant_home() -> HomeModel:
    return make_home(n_indoor=2, n_occupants=2)


@pytest.fixture
def tiny_trace(tiny_home: HomeModel) -> SensorTrace:
    return benign_trace(tiny_home, [1, 1, 2, 2, 2, 0, 0, 1, 1, 1, 1, 1])
