"""Seeded synthetic occupancy traces with physics-consistent indoor air readings."""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from ..core_model import (
    IDLE_ACTIVITY,
    OUTSIDE_ZONE,
    ConfigError,
    HomeModel,
    SensorTrace,
)
from ..schemas import BandConfig, DwellConfig, OccupantRoutineConfig, SynthConfigModel
from .controller_service import propagate_iaq

logger = logging.getLogger(__name__)

DEFAULT_DWELL = DwellConfig(range=(30, 120))
# outdoor temperature peaks at 15:00
TEMPERATURE_PEAK_FRACTION = 0.625


def _check_references(home: HomeModel, config: SynthConfigModel) -> None:
    zones = set(range(home.n_zones))
    occupants = [routine.occupant for routine in config.routines]
    if sorted(occupants) != list(range(home.n_occupants)):
        raise ConfigError(
            f"Routines must cover occupants 0..{home.n_occupants - 1} once each; got {sorted(occupants)}.",
            location="routines",
        )
    for index, routine in enumerate(config.routines):
        if routine.start_zone not in zones:
            raise ConfigError(f"Unknown zone {routine.start_zone}.", location=f"routines[{index}].start_zone")
        for b, band in enumerate(routine.bands):
            location = f"routines[{index}].bands[{b}]"
            if band.end > home.slots_per_day:
                raise ConfigError(f"Band ends after slot {home.slots_per_day}.", location=f"{location}.end")
            for source, row in band.transitions.items():
                unknown = ({source} | set(row)) - zones
                if unknown:
                    raise ConfigError(f"Unknown zones {sorted(unknown)}.", location=f"{location}.transitions")
    appliances = set(range(home.n_appliances))
    for activity, members in config.activity_appliances.items():
        unknown = set(members) - appliances
        if unknown:
            raise ConfigError(f"Unknown appliances {sorted(unknown)}.", location=f"activity_appliances.{activity}")
    unknown = set(config.always_on) - appliances
    if unknown:
        raise ConfigError(f"Unknown appliances {sorted(unknown)}.", location="always_on")


def _band_at(routine: OccupantRoutineConfig, slot_of_day: int) -> Optional[BandConfig]:
    for band in routine.bands:
        if band.start <= slot_of_day < band.end:
            return band
    return None


def _dwell_length(
    dwell: DwellConfig, slot_of_day: int, slots_per_day: int, rng: np.random.Generator
) -> int:
    if dwell.range is not None:
        low, high = dwell.range
        return int(rng.integers(low, high + 1))
    low, high = dwell.until
    exit_slot = int(rng.integers(low, high + 1)) % slots_per_day
    return max((exit_slot - slot_of_day) % slots_per_day, 1)


def _next_zone(band: Optional[BandConfig], zone: int, rng: np.random.Generator) -> int:
    row = band.transitions.get(zone) if band is not None else None
    if not row:
        return zone
    targets = np.array(sorted(row), dtype=int)
    weights = np.array([row[target] for target in targets], dtype=float)
    return int(rng.choice(targets, p=weights / weights.sum()))


def _route(
    routine: OccupantRoutineConfig,
    config: SynthConfigModel,
    n_slots: int,
    slots_per_day: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Zone per slot for one occupant: dwell, then move along the band's transition weights."""

    zones = np.empty(n_slots, dtype=int)
    zone = routine.start_zone
    t = 0
    while t < n_slots:
        slot_of_day = t % slots_per_day
        band = _band_at(routine, slot_of_day)
        dwell = (band.dwell.get(zone) if band is not None else None) or config.zone_dwell.get(zone) or DEFAULT_DWELL
        length = _dwell_length(dwell, slot_of_day, slots_per_day, rng)
        zones[t : t + length] = zone
        t += length
        if t < n_slots:
            zone = _next_zone(_band_at(routine, t % slots_per_day), zone, rng)
    return zones


def _activities(
    home: HomeModel, config: SynthConfigModel, zones: np.ndarray, occupant: int, rng: np.random.Generator
) -> np.ndarray:
    """One activity per stay, drawn from the zone's weights among the occupant's profiles."""

    activity = np.full(zones.shape[0], IDLE_ACTIVITY, dtype=int)
    starts = np.concatenate([[0], np.flatnonzero(np.diff(zones) != 0) + 1])
    stops = np.concatenate([starts[1:], [zones.shape[0]]])
    for start, stop in zip(starts, stops):
        zone = int(zones[start])
        if zone == OUTSIDE_ZONE:
            continue
        weights = config.activity_weights.get(zone, {})
        choices = [
            (act, weight)
            for act, weight in sorted(weights.items())
            if weight > 0 and home.profile(occupant, zone, act) is not None
        ]
        if not choices:
            continue
        ids = np.array([act for act, _ in choices], dtype=int)
        probabilities = np.array([weight for _, weight in choices], dtype=float)
        activity[start:stop] = rng.choice(ids, p=probabilities / probabilities.sum())
    return activity


def synth_trace(
    home: HomeModel,
    config: SynthConfigModel,
    days: int,
    *,
    seed: Optional[int] = None,
) -> SensorTrace:
    """Generate ``days`` days of habit-structured occupancy and the readings it implies.

    Occupants follow a first-order zone process whose weights depend on the time-of-day
    band; CO2 and temperature come from forward-simulating the controller's zone dynamics,
    so benign traces satisfy the slot recurrences exactly.

    Args:
        home: Home the trace is generated for.
        config: Validated routine document.
        days: Number of whole days.
        seed: Overrides ``config.seed`` when given.

    Returns:
        A trace of ``days * home.slots_per_day`` slots starting at slot-of-day 0.
    """

    if days < 1:
        raise ValueError("days must be >= 1")
    _check_references(home, config)
    rng = np.random.default_rng(config.seed if seed is None else seed)
    slots_per_day = home.slots_per_day
    n_slots = days * slots_per_day

    routines = sorted(config.routines, key=lambda routine: routine.occupant)
    occupant_zone = np.column_stack(
        [_route(routine, config, n_slots, slots_per_day, rng) for routine in routines]
    ) if routines else np.zeros((n_slots, 0), dtype=int)
    activity = np.column_stack(
        [_activities(home, config, occupant_zone[:, o], o, rng) for o in range(occupant_zone.shape[1])]
    ) if routines else np.zeros((n_slots, 0), dtype=int)

    appliance_on = np.zeros((n_slots, home.n_appliances), dtype=bool)
    appliance_on[:, config.always_on] = True
    for act, members in config.activity_appliances.items():
        for d in members:
            in_zone = occupant_zone == home.appliances[d].zone
            appliance_on[:, d] |= ((activity == act) & in_zone).any(axis=1)

    slot_of_day = np.arange(n_slots) % slots_per_day
    phase = 2.0 * np.pi * (slot_of_day / slots_per_day - TEMPERATURE_PEAK_FRACTION + 0.25)
    outdoor_temp = config.outdoor_temp_mean + config.outdoor_temp_amplitude * np.sin(phase)
    outdoor_co2 = np.full(n_slots, config.outdoor_co2)

    initial_co2 = np.array([zone.start_co2 for zone in home.zones], dtype=float)
    initial_temp = np.array([zone.start_temp for zone in home.zones], dtype=float)
    initial_co2[OUTSIDE_ZONE] = outdoor_co2[0]
    initial_temp[OUTSIDE_ZONE] = outdoor_temp[0]
    co2, temp = propagate_iaq(
        home,
        occupant_zone=occupant_zone,
        activity=activity,
        appliance_on=appliance_on,
        outdoor_co2=outdoor_co2,
        outdoor_temp=outdoor_temp,
        initial_co2=initial_co2,
        initial_temp=initial_temp,
    )
    logger.info("Synthesized %d days (%d slots) for %d occupants", days, n_slots, occupant_zone.shape[1])
    return SensorTrace.from_arrays(
        occupant_zone=occupant_zone,
        activity=activity,
        co2=co2,
        temp=temp,
        appliance_on=appliance_on,
        outdoor_temp=outdoor_temp,
        outdoor_co2=outdoor_co2,
    )


__all__ = ["DEFAULT_DWELL", "synth_trace"]
