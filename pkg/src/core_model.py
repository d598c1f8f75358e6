"""Domain types, exceptions and structural validation shared by every service."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Dict, Iterable, Mapping, Optional

import numpy as np
import pandas as pd

OUTSIDE_ZONE = 0
IDLE_ACTIVITY = 0
AIR_HEAT_FACTOR = 0.3167
WATT_MINUTES_PER_KWH = 60000.0
MINUTES_PER_DAY = 1440
RESIDUAL_TOLERANCE = 1e-6
SINGULAR_TOLERANCE = 1e-9
VENTILATION_FORMS = ("verbatim", "corrected")


class HomeFdiError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigError(HomeFdiError, ValueError):
    """Configuration could not be parsed or failed validation."""

    def __init__(self, message: str, *, location: Optional[str] = None) -> None:
        self.location = location
        detail = f"{location}: {message}" if location else message
        super().__init__(detail)


class TraceFormatError(HomeFdiError, ValueError):
    """A trace file or trace array does not follow the documented schema."""


class SingularVentilation(HomeFdiError, ArithmeticError):
    """Indoor CO2 equals the supplied-air term, so the ventilation solve has no answer."""

    def __init__(self, message: str, *, slot: Optional[int] = None, zone: Optional[int] = None) -> None:
        self.slot = slot
        self.zone = zone
        super().__init__(message)


class SingularTemperature(HomeFdiError, ArithmeticError):
    """Zone setpoint equals the supply-air temperature."""

    def __init__(self, message: str, *, zone: Optional[int] = None) -> None:
        self.zone = zone
        super().__init__(message)


class DegenerateCluster(HomeFdiError):
    """Fewer than three distinct points, or all points collinear."""


class UndefinedMetric(HomeFdiError, ValueError):
    """A cluster-quality score is undefined for the given labelling."""


class AccessViolation(HomeFdiError):
    """An injection targets a slot, zone, occupant or appliance outside the access profile."""


class InfeasibleSchedule(HomeFdiError):
    """A schedule breaks one of the scheduling constraints."""

    def __init__(self, message: str, *, constraint: str, slot: Optional[int] = None) -> None:
        self.constraint = constraint
        self.slot = slot
        super().__init__(f"{constraint}: {message}")


class BudgetExceeded(HomeFdiError):
    """The exact window search explored more nodes than the configured budget."""

    def __init__(self, message: str, *, nodes: int = 0) -> None:
        self.nodes = nodes
        super().__init__(message)


@dataclass(frozen=True)
class Deadlock:
    """A slot where no zone offered a feasible stay for an occupant."""

    slot: int
    occupant: int
    reason: str

    def as_dict(self) -> Dict[str, Any]:
        return {"slot": self.slot, "occupant": self.occupant, "reason": self.reason}


@dataclass(frozen=True)
class Violation:
    """A single broken invariant, reported as data."""

    field: str
    rule: str
    message: str

    def as_dict(self) -> Dict[str, Any]:
        return {"field": self.field, "rule": self.rule, "message": self.message}


@dataclass(frozen=True)
class Zone:
    """A conditioned zone; id 0 is reserved for the outside of the home."""

    id: int
    name: str
    volume: float
    co2_setpoint: float
    temp_setpoint: float
    supply_air_temp: float
    mixed_air_temp: float
    initial_co2: Optional[float] = None
    initial_temp: Optional[float] = None

    @property
    def is_outside(self) -> bool:
        return self.id == OUTSIDE_ZONE

    @property
    def start_co2(self) -> float:
        return self.co2_setpoint if self.initial_co2 is None else self.initial_co2

    @property
    def start_temp(self) -> float:
        return self.temp_setpoint if self.initial_temp is None else self.initial_temp


@dataclass(frozen=True)
class OccupantProfile:
    id: int
    name: str


@dataclass(frozen=True)
class Appliance:
    id: int
    name: str
    zone: int
    power_w: float
    heat_radiation_factor: float
    voice_triggerable: bool = False


@dataclass(frozen=True)
class ActivityProfile:
    """Emission and radiation of one occupant doing one activity in one zone."""

    occupant: int
    zone: int
    activity: int
    co2_emission: float
    heat_radiation: float
    name: str = ""


@dataclass(frozen=True)
class Tariff:
    offpeak_rate: float
    peak_rate: float
    peak_slots: frozenset[int]
    battery_kwh: float

    def peak_mask(self, n_slots: int, slots_per_day: int, start_slot: int = 0) -> np.ndarray:
        """Return a boolean mask marking peak slots of a trace."""

        slot_of_day = (start_slot + np.arange(n_slots)) % slots_per_day
        return np.isin(slot_of_day, sorted(self.peak_slots))


@dataclass(frozen=True)
class HomeModel:
    """Static description of a home: zones, people, devices, tariff."""

    zones: tuple[Zone, ...]
    occupants: tuple[OccupantProfile, ...]
    appliances: tuple[Appliance, ...]
    activities: tuple[ActivityProfile, ...]
    tariff: Tariff
    sampling_minutes: int = 1
    slots_per_day: int = MINUTES_PER_DAY
    ventilation_form: str = "verbatim"
    name: str = "home"

    @property
    def n_zones(self) -> int:
        return len(self.zones)

    @property
    def n_occupants(self) -> int:
        return len(self.occupants)

    @property
    def n_appliances(self) -> int:
        return len(self.appliances)

    @cached_property
    def max_activity(self) -> int:
        return max((profile.activity for profile in self.activities), default=IDLE_ACTIVITY)

    @cached_property
    def activity_tables(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (emission, radiation) lookup arrays indexed [occupant, zone, activity].

        Undefined triples are NaN; the idle activity is always zero.
        """

        shape = (max(self.n_occupants, 1), max(self.n_zones, 1), self.max_activity + 1)
        emission = np.full(shape, np.nan)
        radiation = np.full(shape, np.nan)
        emission[:, :, IDLE_ACTIVITY] = 0.0
        radiation[:, :, IDLE_ACTIVITY] = 0.0
        for profile in self.activities:
            if profile.activity == IDLE_ACTIVITY:
                continue
            if 0 <= profile.occupant < shape[0] and 0 <= profile.zone < shape[1]:
                emission[profile.occupant, profile.zone, profile.activity] = profile.co2_emission
                radiation[profile.occupant, profile.zone, profile.activity] = profile.heat_radiation
        return emission, radiation

    def activities_for(self, occupant: int, zone: int) -> tuple[int, ...]:
        """Activity ids defined for an occupant in a zone, idle included."""

        defined = {
            profile.activity
            for profile in self.activities
            if profile.occupant == occupant and profile.zone == zone
        }
        defined.add(IDLE_ACTIVITY)
        return tuple(sorted(defined))

    def profile(self, occupant: int, zone: int, activity: int) -> Optional[tuple[float, float]]:
        emission, radiation = self.activity_tables
        if not (0 <= activity < emission.shape[2]):
            return None
        value = emission[occupant, zone, activity]
        if np.isnan(value):
            return None
        return float(value), float(radiation[occupant, zone, activity])

    @cached_property
    def appliance_zone(self) -> np.ndarray:
        return np.array([appliance.zone for appliance in self.appliances], dtype=int)

    @cached_property
    def appliance_power(self) -> np.ndarray:
        return np.array([appliance.power_w for appliance in self.appliances], dtype=float)

    @cached_property
    def appliance_heat(self) -> np.ndarray:
        """Radiated heat (W) per appliance when switched on."""

        return np.array(
            [appliance.power_w * appliance.heat_radiation_factor for appliance in self.appliances],
            dtype=float,
        )

    def zone_appliances(self, zone: int) -> tuple[int, ...]:
        return tuple(appliance.id for appliance in self.appliances if appliance.zone == zone)

    def indoor_zones(self) -> tuple[int, ...]:
        return tuple(zone.id for zone in self.zones if not zone.is_outside)


def _frozen_array(values: Any, dtype: Any) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SensorTrace:
    """Per-slot sensor readings of a home.

    Occupancy is stored as one zone id per occupant per slot, which keeps every occupant
    in exactly one zone (the outside zone included).
    """

    occupant_zone: np.ndarray
    activity: np.ndarray
    co2: np.ndarray
    temp: np.ndarray
    appliance_on: np.ndarray
    outdoor_temp: np.ndarray
    outdoor_co2: np.ndarray
    occupant_count: np.ndarray
    start_slot: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "occupant_zone", _frozen_array(self.occupant_zone, int))
        object.__setattr__(self, "activity", _frozen_array(self.activity, int))
        object.__setattr__(self, "co2", _frozen_array(self.co2, float))
        object.__setattr__(self, "temp", _frozen_array(self.temp, float))
        object.__setattr__(self, "appliance_on", _frozen_array(self.appliance_on, bool))
        object.__setattr__(self, "outdoor_temp", _frozen_array(self.outdoor_temp, float))
        object.__setattr__(self, "outdoor_co2", _frozen_array(self.outdoor_co2, float))
        object.__setattr__(self, "occupant_count", _frozen_array(self.occupant_count, int))

    @classmethod
    def from_arrays(
        cls,
        *,
        occupant_zone: Any,
        activity: Any,
        co2: Any,
        temp: Any,
        appliance_on: Any,
        outdoor_temp: Any,
        outdoor_co2: Any,
        start_slot: int = 0,
    ) -> "SensorTrace":
        """Build a trace and derive the per-zone occupant counts."""

        co2_array = np.asarray(co2, dtype=float)
        zones = np.asarray(occupant_zone, dtype=int)
        counts = occupant_count_from_tracking(zones, co2_array.shape[1])
        return cls(
            occupant_zone=zones,
            activity=activity,
            co2=co2_array,
            temp=temp,
            appliance_on=appliance_on,
            outdoor_temp=outdoor_temp,
            outdoor_co2=outdoor_co2,
            occupant_count=counts,
            start_slot=start_slot,
        )

    @property
    def n_slots(self) -> int:
        return int(self.occupant_zone.shape[0])

    @property
    def n_occupants(self) -> int:
        return int(self.occupant_zone.shape[1])

    @property
    def n_zones(self) -> int:
        return int(self.co2.shape[1])

    @property
    def presence(self) -> np.ndarray:
        """Boolean occupancy tensor indexed [slot, occupant, zone]."""

        return self.occupant_zone[:, :, None] == np.arange(self.n_zones)[None, None, :]

    def slot_of_day(self, slots_per_day: int) -> np.ndarray:
        return (self.start_slot + np.arange(self.n_slots)) % slots_per_day

    def with_changes(self, **changes: Any) -> "SensorTrace":
        """Return a copy with replaced fields; occupant counts are re-derived."""

        updated = replace(self, **changes)
        counts = occupant_count_from_tracking(updated.occupant_zone, updated.n_zones)
        return replace(updated, occupant_count=counts)

    def window(self, start: int, stop: int) -> "SensorTrace":
        """Return the slots ``[start, stop)`` as a trace of its own."""

        if not 0 <= start < stop <= self.n_slots:
            raise ValueError(f"Invalid trace window [{start}, {stop}) for {self.n_slots} slots.")
        return SensorTrace(
            occupant_zone=self.occupant_zone[start:stop],
            activity=self.activity[start:stop],
            co2=self.co2[start:stop],
            temp=self.temp[start:stop],
            appliance_on=self.appliance_on[start:stop],
            outdoor_temp=self.outdoor_temp[start:stop],
            outdoor_co2=self.outdoor_co2[start:stop],
            occupant_count=self.occupant_count[start:stop],
            start_slot=self.start_slot + start,
        )

    def split_days(self, slots_per_day: int) -> list["SensorTrace"]:
        """Cut the trace at day boundaries (slot-of-day 0)."""

        boundaries = [0]
        boundaries.extend(
            int(t) for t in np.flatnonzero(self.slot_of_day(slots_per_day) == 0) if t > 0
        )
        boundaries.append(self.n_slots)
        return [self.window(a, b) for a, b in zip(boundaries[:-1], boundaries[1:]) if b > a]


@dataclass(frozen=True)
class AccessProfile:
    """What the attacker can read, alter or trigger."""

    zones: frozenset[int]
    slots: frozenset[int]
    occupant_tags: frozenset[int]
    appliances: frozenset[int]
    name: str = "custom"

    @classmethod
    def full(cls, home: HomeModel, n_slots: int, *, name: str = "full") -> "AccessProfile":
        return cls(
            zones=frozenset(zone.id for zone in home.zones),
            slots=frozenset(range(n_slots)),
            occupant_tags=frozenset(occupant.id for occupant in home.occupants),
            appliances=frozenset(appliance.id for appliance in home.appliances),
            name=name,
        )

    @classmethod
    def empty(cls, *, name: str = "none") -> "AccessProfile":
        return cls(frozenset(), frozenset(), frozenset(), frozenset(), name=name)

    @property
    def is_empty(self) -> bool:
        return not (self.zones and self.slots and (self.occupant_tags or self.appliances))

    def slot_mask(self, n_slots: int) -> np.ndarray:
        mask = np.zeros(n_slots, dtype=bool)
        members = [t for t in self.slots if 0 <= t < n_slots]
        mask[members] = True
        return mask

    def zone_mask(self, n_zones: int) -> np.ndarray:
        mask = np.zeros(n_zones, dtype=bool)
        members = [z for z in self.zones if 0 <= z < n_zones]
        mask[members] = True
        return mask

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "zones": sorted(self.zones),
            "slots": _compress_ranges(self.slots),
            "occupant_tags": sorted(self.occupant_tags),
            "appliances": sorted(self.appliances),
        }


def _compress_ranges(values: Iterable[int]) -> list[list[int]]:
    """Encode a slot set as half-open ``[start, stop)`` ranges."""

    ordered = sorted(values)
    ranges: list[list[int]] = []
    for value in ordered:
        if ranges and ranges[-1][1] == value:
            ranges[-1][1] = value + 1
        else:
            ranges.append([value, value + 1])
    return ranges


@dataclass(frozen=True, eq=False)
class AttackVector:
    """Injection deltas applied on top of a trace.

    ``relocations`` maps (slot, occupant) to the (zone, activity) reported instead of the
    real one; ``activations`` lists (slot, appliance) pairs switched from off to on.
    """

    delta_co2: np.ndarray
    delta_temp: np.ndarray
    relocations: Mapping[tuple[int, int], tuple[int, int]] = field(default_factory=dict)
    activations: frozenset[tuple[int, int]] = frozenset()

    @classmethod
    def identity(cls, trace: SensorTrace) -> "AttackVector":
        zeros = np.zeros_like(trace.co2)
        return cls(delta_co2=zeros, delta_temp=zeros.copy())

    @property
    def is_identity(self) -> bool:
        return (
            not self.relocations
            and not self.activations
            and not np.any(self.delta_co2)
            and not np.any(self.delta_temp)
        )

    def as_dict(self) -> Dict[str, Any]:
        co2_cells = np.argwhere(self.delta_co2 != 0)
        temp_cells = np.argwhere(self.delta_temp != 0)
        return {
            "delta_co2": [[int(t), int(z), float(self.delta_co2[t, z])] for t, z in co2_cells],
            "delta_temp": [[int(t), int(z), float(self.delta_temp[t, z])] for t, z in temp_cells],
            "relocations": [
                [t, o, zone, activity]
                for (t, o), (zone, activity) in sorted(self.relocations.items())
            ],
            "activations": [list(pair) for pair in sorted(self.activations)],
        }


@dataclass(frozen=True, eq=False)
class ControlLog:
    """Per-slot controller output: airflow, energy and billing."""

    q_vent: np.ndarray
    q_temp: np.ndarray
    airflow: np.ndarray
    consumption: np.ndarray
    hvac_kwh: np.ndarray
    appliance_kwh: np.ndarray
    cumulative_peak_kwh: np.ndarray
    slot_cost: np.ndarray

    @property
    def total_cost(self) -> float:
        return float(self.slot_cost.sum())

    @property
    def n_slots(self) -> int:
        return int(self.consumption.shape[0])

    def to_frame(self, *, start_slot: int = 0) -> pd.DataFrame:
        """Return the log as one row per slot with per-zone airflow columns."""

        frame = pd.DataFrame(
            {
                "slot": np.arange(self.n_slots) + start_slot,
                "consumption_kwh": self.consumption,
                "hvac_kwh": self.hvac_kwh,
                "appliance_kwh": self.appliance_kwh,
                "cumulative_peak_kwh": self.cumulative_peak_kwh,
                "slot_cost_usd": self.slot_cost,
            }
        )
        for zone in range(self.airflow.shape[1]):
            frame[f"airflow_z{zone}"] = self.airflow[:, zone]
        return frame


def occupant_count_from_tracking(occupant_zone: Any, n_zones: int) -> np.ndarray:
    """Count occupants per slot and zone from the tracking matrix.

    Args:
        occupant_zone: Zone id per slot and occupant, or a ``SensorTrace``.
        n_zones: Number of zones in the home.

    Returns:
        Integer array indexed [slot, zone].
    """

    if isinstance(occupant_zone, SensorTrace):
        occupant_zone = occupant_zone.occupant_zone
    zones = np.asarray(occupant_zone, dtype=int)
    if zones.ndim != 2:
        raise TraceFormatError("Occupant tracking must be a 2-D [slot, occupant] array.")
    if zones.size and (zones.min() < 0 or zones.max() >= n_zones):
        t, o = np.argwhere((zones < 0) | (zones >= n_zones))[0]
        raise TraceFormatError(f"Occupant {o} is tracked in unknown zone {zones[t, o]} at slot {t}.")
    counts = np.zeros((zones.shape[0], n_zones), dtype=int)
    if zones.size:
        rows = np.repeat(np.arange(zones.shape[0]), zones.shape[1])
        np.add.at(counts, (rows, zones.ravel()), 1)
    return counts


def _contiguous(ids: list[int]) -> bool:
    return ids == list(range(len(ids)))


def validate_home(home: HomeModel) -> list[Violation]:
    """Return every broken home invariant; an empty list means the home is valid."""

    violations: list[Violation] = []
    zone_ids = [zone.id for zone in home.zones]
    if not zone_ids:
        violations.append(Violation("zones", "non-empty", "A home needs at least the outside zone."))
    elif not _contiguous(zone_ids):
        violations.append(
            Violation("zones", "contiguous-ids", f"Zone ids must run 0..{len(zone_ids) - 1}; got {zone_ids}.")
        )
    valid_zones = set(zone_ids)

    for zone in home.zones:
        location = f"zones[{zone.id}]"
        if not zone.is_outside and zone.volume <= 0:
            violations.append(Violation(f"{location}.volume", "positive", f"Volume must be > 0; got {zone.volume}."))
        if not zone.is_outside and zone.temp_setpoint == zone.supply_air_temp:
            violations.append(
                Violation(
                    f"{location}.temp_setpoint",
                    "singular-airflow",
                    "Temperature setpoint equals supply-air temperature.",
                )
            )
        if zone.co2_setpoint <= 0:
            violations.append(Violation(f"{location}.co2_setpoint", "positive", "CO2 setpoint must be > 0."))
        if zone.initial_co2 is not None and zone.initial_co2 <= 0:
            violations.append(Violation(f"{location}.initial_co2", "positive", "Initial CO2 must be > 0."))

    occupant_ids = [occupant.id for occupant in home.occupants]
    if not _contiguous(occupant_ids):
        violations.append(Violation("occupants", "contiguous-ids", f"Occupant ids must run 0..n-1; got {occupant_ids}."))
    valid_occupants = set(occupant_ids)

    appliance_ids = [appliance.id for appliance in home.appliances]
    if not _contiguous(appliance_ids):
        violations.append(
            Violation("appliances", "contiguous-ids", f"Appliance ids must run 0..n-1; got {appliance_ids}.")
        )
    for appliance in home.appliances:
        location = f"appliances[{appliance.id}]"
        if appliance.zone not in valid_zones:
            violations.append(
                Violation(f"{location}.zone", "dangling-reference", f"Zone {appliance.zone} does not exist.")
            )
        if appliance.power_w < 0:
            violations.append(Violation(f"{location}.power_w", "non-negative", "Power must be >= 0."))
        if not 0.0 <= appliance.heat_radiation_factor <= 1.0:
            violations.append(
                Violation(f"{location}.heat_radiation_factor", "unit-interval", "Heat radiation factor must lie in [0, 1].")
            )

    seen: set[tuple[int, int, int]] = set()
    for index, profile in enumerate(home.activities):
        location = f"activities[{index}]"
        key = (profile.occupant, profile.zone, profile.activity)
        if key in seen:
            violations.append(Violation(location, "unique", f"Duplicate activity profile {key}."))
        seen.add(key)
        if profile.occupant not in valid_occupants:
            violations.append(
                Violation(f"{location}.occupant", "dangling-reference", f"Occupant {profile.occupant} does not exist.")
            )
        if profile.zone not in valid_zones:
            violations.append(
                Violation(f"{location}.zone", "dangling-reference", f"Zone {profile.zone} does not exist.")
            )
        if profile.activity < 0:
            violations.append(Violation(f"{location}.activity", "non-negative", "Activity ids are >= 0."))
        if profile.co2_emission < 0 or profile.heat_radiation < 0:
            violations.append(Violation(location, "non-negative", "Emission and radiation must be >= 0."))
        if profile.activity == IDLE_ACTIVITY and (profile.co2_emission or profile.heat_radiation):
            violations.append(Violation(location, "idle-is-zero", "Activity 0 is idle and must emit nothing."))

    tariff = home.tariff
    if tariff.offpeak_rate < 0 or tariff.peak_rate < 0:
        violations.append(Violation("tariff", "non-negative", "Rates must be >= 0."))
    if tariff.peak_rate < tariff.offpeak_rate:
        violations.append(Violation("tariff.peak_rate", "ordered", "Peak rate must be >= off-peak rate."))
    if tariff.battery_kwh < 0:
        violations.append(Violation("tariff.battery_kwh", "non-negative", "Battery size must be >= 0."))
    out_of_day = sorted(slot for slot in tariff.peak_slots if not 0 <= slot < home.slots_per_day)
    if out_of_day:
        violations.append(
            Violation("tariff.peak_slots", "in-day", f"Peak slots outside the day: {out_of_day[:5]}.")
        )

    if home.slots_per_day * home.sampling_minutes != MINUTES_PER_DAY:
        violations.append(
            Violation(
                "slots_per_day",
                "covers-day",
                f"{home.slots_per_day} slots x {home.sampling_minutes} min does not cover 1440 minutes.",
            )
        )
    if home.ventilation_form not in VENTILATION_FORMS:
        violations.append(
            Violation("ventilation_form", "enum", f"Expected one of {VENTILATION_FORMS}; got {home.ventilation_form!r}.")
        )
    return violations


def validate_trace(trace: SensorTrace, home: HomeModel) -> list[Violation]:
    """Check a trace against a home: shapes, ids, activities and derived counts."""

    violations: list[Violation] = []
    if trace.n_occupants != home.n_occupants:
        violations.append(
            Violation("occupant_zone", "shape", f"Trace has {trace.n_occupants} occupants; home has {home.n_occupants}.")
        )
    if trace.n_zones != home.n_zones:
        violations.append(Violation("co2", "shape", f"Trace has {trace.n_zones} zones; home has {home.n_zones}."))
    if trace.appliance_on.shape[1] != home.n_appliances:
        violations.append(Violation("appliance_on", "shape", "Appliance columns do not match the home."))
    if violations:
        return violations

    bad_zone = np.argwhere((trace.occupant_zone < 0) | (trace.occupant_zone >= home.n_zones))
    if bad_zone.size:
        t, o = bad_zone[0]
        violations.append(
            Violation("occupant_zone", "known-id", f"Unknown zone {trace.occupant_zone[t, o]} at slot {t}.")
        )
        return violations

    emission, _ = home.activity_tables
    activity = trace.activity
    in_table = (activity >= 0) & (activity < emission.shape[2])
    resolved = np.zeros_like(in_table)
    for occupant in range(trace.n_occupants):
        ok = in_table[:, occupant]
        values = np.full(trace.n_slots, np.nan)
        values[ok] = emission[occupant, trace.occupant_zone[ok, occupant], activity[ok, occupant]]
        resolved[:, occupant] = ~np.isnan(values)
    missing = np.argwhere(~resolved)
    if missing.size:
        t, o = missing[0]
        violations.append(
            Violation(
                "activity",
                "resolves",
                f"Activity {activity[t, o]} of occupant {o} in zone {trace.occupant_zone[t, o]} "
                f"at slot {t} has no profile.",
            )
        )
    if np.any(trace.co2 <= 0):
        violations.append(Violation("co2", "positive", "CO2 readings must be > 0."))
    counts = occupant_count_from_tracking(trace.occupant_zone, home.n_zones)
    if not np.array_equal(counts, trace.occupant_count):
        violations.append(Violation("occupant_count", "matches-tracking", "Occupant counts disagree with tracking."))
    return violations


__all__ = [
    "AIR_HEAT_FACTOR",
    "IDLE_ACTIVITY",
    "MINUTES_PER_DAY",
    "OUTSIDE_ZONE",
    "RESIDUAL_TOLERANCE",
    "SINGULAR_TOLERANCE",
    "VENTILATION_FORMS",
    "WATT_MINUTES_PER_KWH",
    "AccessProfile",
    "AccessViolation",
    "ActivityProfile",
    "Appliance",
    "AttackVector",
    "BudgetExceeded",
    "ConfigError",
    "ControlLog",
    "Deadlock",
    "DegenerateCluster",
    "HomeFdiError",
    "HomeModel",
    "InfeasibleSchedule",
    "OccupantProfile",
    "SensorTrace",
    "SingularTemperature",
    "SingularVentilation",
    "Tariff",
    "TraceFormatError",
    "UndefinedMetric",
    "Violation",
    "Zone",
    "occupant_count_from_tracking",
    "validate_home",
    "validate_trace",
]
