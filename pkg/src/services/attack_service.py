"""False-data injection: applying attack vectors, replaying schedules and checking stealth."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ..core_model import (
    RESIDUAL_TOLERANCE,
    AccessProfile,
    AccessViolation,
    AttackVector,
    ControlLog,
    Deadlock,
    HomeModel,
    SensorTrace,
)
from .adm_service import AdmModel, detect, min_stay
from .controller_service import propagate_iaq, recurrence_residuals, simulate

logger = logging.getLogger(__name__)

CONSTRAINTS = (
    "cluster-consistency",
    "occupant-conservation",
    "co2-recurrence",
    "temperature-recurrence",
    "appliance-trigger",
)


@dataclass(frozen=True)
class TriggerPlan:
    """Adversarial appliance activations as (slot, appliance) pairs."""

    activations: frozenset[tuple[int, int]] = frozenset()
    zones: frozenset[tuple[int, int]] = frozenset()

    @classmethod
    def empty(cls) -> "TriggerPlan":
        return cls()

    def __len__(self) -> int:
        return len(self.activations)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "activations": [list(pair) for pair in sorted(self.activations)],
            "zones": [list(pair) for pair in sorted(self.zones)],
        }


@dataclass(frozen=True, eq=False)
class AttackSchedule:
    """Fabricated zone and activity per slot and occupant."""

    zones: np.ndarray
    activities: np.ndarray
    strategy: str = "windowed"
    source: str = "search"
    deadlocks: tuple[Deadlock, ...] = ()
    windows: tuple[Mapping[str, Any], ...] = ()
    triggers: Optional[TriggerPlan] = None

    def __post_init__(self) -> None:
        zones = np.array(self.zones, dtype=int, copy=True)
        activities = np.array(self.activities, dtype=int, copy=True)
        if zones.shape != activities.shape or zones.ndim != 2:
            raise ValueError("Schedule zones and activities must share a [slot, occupant] shape.")
        zones.setflags(write=False)
        activities.setflags(write=False)
        object.__setattr__(self, "zones", zones)
        object.__setattr__(self, "activities", activities)

    @classmethod
    def from_trace(cls, trace: SensorTrace, *, strategy: str = "benign", source: str = "actual") -> "AttackSchedule":
        return cls(trace.occupant_zone, trace.activity, strategy=strategy, source=source)

    @property
    def n_slots(self) -> int:
        return int(self.zones.shape[0])

    def with_triggers(self, plan: Optional[TriggerPlan], **changes: Any) -> "AttackSchedule":
        return AttackSchedule(
            zones=self.zones,
            activities=self.activities,
            strategy=changes.get("strategy", self.strategy),
            source=changes.get("source", self.source),
            deadlocks=self.deadlocks,
            windows=self.windows,
            triggers=plan,
        )

    def to_frame(self, *, start_slot: int = 0) -> pd.DataFrame:
        n_slots, n_occupants = self.zones.shape
        return pd.DataFrame(
            {
                "slot": np.repeat(np.arange(n_slots) + start_slot, n_occupants),
                "occupant_id": np.tile(np.arange(n_occupants), n_slots),
                "zone_id": self.zones.ravel(),
                "activity_id": self.activities.ravel(),
            }
        )

    def as_dict(self) -> Dict[str, Any]:
        return {
            "strategy": self.strategy,
            "source": self.source,
            "zones": self.zones.tolist(),
            "activities": self.activities.tolist(),
            "deadlocks": [deadlock.as_dict() for deadlock in self.deadlocks],
            "windows": [dict(window) for window in self.windows],
            "triggers": self.triggers.as_dict() if self.triggers is not None else None,
        }


@dataclass(frozen=True)
class StealthViolation:
    constraint: str
    slot: Optional[int]
    detail: str

    def as_dict(self) -> Dict[str, Any]:
        return {"constraint": self.constraint, "slot": self.slot, "detail": self.detail}


@dataclass(frozen=True)
class StealthVerdict:
    violations: tuple[StealthViolation, ...] = ()

    @property
    def stealthy(self) -> bool:
        return not self.violations

    @property
    def violated(self) -> tuple[str, ...]:
        return tuple(name for name in CONSTRAINTS if any(v.constraint == name for v in self.violations))

    def as_dict(self) -> Dict[str, Any]:
        return {
            "stealthy": self.stealthy,
            "violated": list(self.violated),
            "violations": [violation.as_dict() for violation in self.violations],
        }


@dataclass(frozen=True, eq=False)
class AccessGate:
    """An access profile expanded to boolean masks over one trace."""

    slots: np.ndarray
    zones: np.ndarray
    occupants: np.ndarray
    appliances: np.ndarray

    @classmethod
    def build(cls, access: AccessProfile, trace: SensorTrace, home: HomeModel) -> "AccessGate":
        occupants = np.zeros(trace.n_occupants, dtype=bool)
        occupants[[o for o in access.occupant_tags if 0 <= o < trace.n_occupants]] = True
        appliances = np.zeros(home.n_appliances, dtype=bool)
        appliances[[d for d in access.appliances if 0 <= d < home.n_appliances]] = True
        return cls(
            slots=access.slot_mask(trace.n_slots),
            zones=access.zone_mask(home.n_zones),
            occupants=occupants,
            appliances=appliances,
        )

    def controllable(self, actual_zones: np.ndarray) -> np.ndarray:
        """[slot, occupant] cells whose occupancy report may be rewritten."""

        return self.slots[:, None] & self.occupants[None, :] & self.zones[actual_zones]

    def iaq_fixed(self) -> np.ndarray:
        """[slot, zone] cells whose CO2/temperature readings cannot be altered."""

        return ~(self.slots[:, None] & self.zones[None, :])


def apply_fdi(
    trace: SensorTrace,
    vector: AttackVector,
    access: Optional[AccessProfile] = None,
    home: Optional[HomeModel] = None,
) -> SensorTrace:
    """Apply injection deltas to a trace.

    Relocations move an occupant's report to another zone (one zone per occupant is kept);
    activations switch an appliance from off to on.

    Raises:
        AccessViolation: If ``access`` is given and a delta touches an inaccessible
            slot, zone, occupant or appliance, or if activations are checked without ``home``.
    """

    if vector.delta_co2.shape != trace.co2.shape or vector.delta_temp.shape != trace.temp.shape:
        raise ValueError("Attack vector deltas must match the trace's [slot, zone] shape.")
    if access is not None:
        _check_access(trace, vector, access, home)
    if vector.is_identity:
        return trace

    zones = trace.occupant_zone.copy()
    activity = trace.activity.copy()
    for (t, o), (zone, act) in vector.relocations.items():
        zones[t, o] = zone
        activity[t, o] = act
    appliance_on = trace.appliance_on.copy()
    for t, d in vector.activations:
        if appliance_on[t, d]:
            raise ValueError(f"Appliance {d} is already on at slot {t}; only off-to-on flips are allowed.")
        appliance_on[t, d] = True
    return trace.with_changes(
        occupant_zone=zones,
        activity=activity,
        co2=trace.co2 + vector.delta_co2,
        temp=trace.temp + vector.delta_temp,
        appliance_on=appliance_on,
    )


def _check_access(
    trace: SensorTrace, vector: AttackVector, access: AccessProfile, home: Optional[HomeModel]
) -> None:
    for name, delta in (("CO2", vector.delta_co2), ("temperature", vector.delta_temp)):
        for t, z in np.argwhere(delta != 0):
            if int(t) not in access.slots or int(z) not in access.zones:
                raise AccessViolation(f"{name} delta at slot {t}, zone {z} is outside the access profile.")
    for (t, o), (zone, _) in vector.relocations.items():
        actual = int(trace.occupant_zone[t, o])
        if t not in access.slots or o not in access.occupant_tags:
            raise AccessViolation(f"Relocation of occupant {o} at slot {t} is outside the access profile.")
        if zone not in access.zones or actual not in access.zones:
            raise AccessViolation(f"Relocation {actual}->{zone} at slot {t} touches an inaccessible zone.")
    if vector.activations and home is None:
        raise AccessViolation("Checking appliance activations against an access profile needs the home layout.")
    for t, d in vector.activations:
        zone = home.appliances[d].zone
        if t not in access.slots or d not in access.appliances or zone not in access.zones:
            raise AccessViolation(f"Activation of appliance {d} at slot {t} is outside the access profile.")


def verify_stealth(
    original: SensorTrace,
    attacked: SensorTrace,
    log: ControlLog,
    model: AdmModel,
    home: HomeModel,
    access: Optional[AccessProfile] = None,
) -> StealthVerdict:
    """Check an attacked trace against the five stealth constraints.

    Stays are checked against the model, counting only alarms the original trace does
    not raise itself. Conservation and the recurrences are checked on accessible slots;
    appliance flips on every slot.
    """

    if original.n_slots != attacked.n_slots or original.co2.shape != attacked.co2.shape:
        raise ValueError("Original and attacked traces must cover identical slots and zones.")
    access = access or AccessProfile.full(home, original.n_slots)
    slot_mask = access.slot_mask(original.n_slots)
    zone_mask = access.zone_mask(home.n_zones)
    violations: list[StealthViolation] = []

    baseline = {(a.occupant, a.zone, a.arrival, a.duration) for a in detect(original, model).alarms}
    for alarm in detect(attacked, model).alarms:
        if (alarm.occupant, alarm.zone, alarm.arrival, alarm.duration) in baseline:
            continue
        violations.append(
            StealthViolation(
                "cluster-consistency",
                alarm.arrival,
                f"Occupant {alarm.occupant} stays {alarm.duration} slots in zone {alarm.zone} "
                f"from slot-of-day {alarm.arrival_of_day}, outside every cluster.",
            )
        )

    totals_match = original.occupant_count.sum(axis=1) == attacked.occupant_count.sum(axis=1)
    scoped_match = (original.occupant_count[:, zone_mask].sum(axis=1)) == (
        attacked.occupant_count[:, zone_mask].sum(axis=1)
    )
    for t in np.flatnonzero(slot_mask & ~(totals_match & scoped_match)):
        violations.append(
            StealthViolation("occupant-conservation", int(t), f"Occupant total changed at slot {t}.")
        )

    co2_res, temp_res = recurrence_residuals(attacked, log, home)
    checked = slot_mask[:, None] & np.ones(co2_res.shape[1], dtype=bool)[None, :]
    for name, residual in (("co2-recurrence", co2_res), ("temperature-recurrence", temp_res)):
        bad = checked & ~np.isnan(residual) & (residual > RESIDUAL_TOLERANCE)
        for t, z in np.argwhere(bad):
            violations.append(
                StealthViolation(name, int(t), f"Residual {residual[t, z]:.3e} in zone {z} at slot {t}.")
            )

    flips = np.argwhere(attacked.appliance_on != original.appliance_on)
    for t, d in flips:
        zone = home.appliances[d].zone
        if original.appliance_on[t, d]:
            violations.append(
                StealthViolation("appliance-trigger", int(t), f"Appliance {d} switched off at slot {t}.")
            )
        elif original.occupant_count[t, zone] > 0:
            violations.append(
                StealthViolation(
                    "appliance-trigger",
                    int(t),
                    f"Appliance {d} activated at slot {t} while zone {zone} is occupied.",
                )
            )
    violations.sort(key=lambda v: (CONSTRAINTS.index(v.constraint), v.slot if v.slot is not None else -1))
    return StealthVerdict(tuple(violations))


class TriggerRules:
    """Appliance-triggering gate shared by the trigger decision and the schedule search.

    A zone can be triggered at slot ``t`` when an occupant is scheduled there, arrived at
    most ``min_stay`` slots ago (measured from that arrival), and no occupant is actually in
    the zone. Only accessible, voice-triggerable appliances that are currently off switch on.
    """

    def __init__(self, trace: SensorTrace, home: HomeModel, model: AdmModel, access: AccessProfile) -> None:
        gate = AccessGate.build(access, trace, home)
        self.trace = trace
        self.model = model
        self.slots = gate.slots
        self.zones = gate.zones
        self.actually_empty = trace.occupant_count == 0
        candidates = np.array(
            [gate.appliances[a.id] and a.voice_triggerable for a in home.appliances], dtype=bool
        )
        self._by_zone: dict[int, np.ndarray] = {
            zone.id: np.array(
                [a.id for a in home.appliances if a.zone == zone.id and candidates[a.id]], dtype=int
            )
            for zone in home.zones
        }
        self._thresholds: dict[tuple[int, int, int], Optional[int]] = {}

    def threshold(self, arrival: int, occupant: int, zone: int) -> Optional[int]:
        key = (arrival, occupant, zone)
        if key not in self._thresholds:
            self._thresholds[key] = min_stay(self.trace.start_slot + arrival, occupant, zone, self.model)
        return self._thresholds[key]

    def zones_at(self, t: int, zones_row: Sequence[int], arrivals: Sequence[Optional[int]]) -> tuple[int, ...]:
        if not self.slots[t]:
            return ()
        triggered = set()
        for occupant, zone in enumerate(zones_row):
            arrival = arrivals[occupant]
            if arrival is None or not self.zones[zone] or not self.actually_empty[t, zone]:
                continue
            limit = self.threshold(arrival, occupant, int(zone))
            if limit is not None and t - arrival <= limit:
                triggered.add(int(zone))
        return tuple(sorted(triggered))

    def appliances_at(self, t: int, zones: Iterable[int]) -> tuple[int, ...]:
        found: list[int] = []
        for zone in zones:
            candidates = self._by_zone.get(zone)
            if candidates is None or candidates.size == 0:
                continue
            found.extend(int(d) for d in candidates if not self.trace.appliance_on[t, d])
        return tuple(sorted(found))


def scheduled_arrivals(zones: np.ndarray) -> list[list[Optional[int]]]:
    """Arrival slot of the current scheduled stay per slot and occupant (None before any move)."""

    n_slots, n_occupants = zones.shape
    arrivals: list[list[Optional[int]]] = []
    current: list[Optional[int]] = [None] * n_occupants
    for t in range(n_slots):
        if t > 0:
            for o in range(n_occupants):
                if zones[t, o] != zones[t - 1, o]:
                    current[o] = t
        arrivals.append(list(current))
    return arrivals


def trigger_decision(
    schedule: AttackSchedule,
    trace: SensorTrace,
    model: AdmModel,
    home: HomeModel,
    access: Optional[AccessProfile] = None,
) -> TriggerPlan:
    """Decide which appliances to activate while the schedule keeps occupants away."""

    access = access or AccessProfile.full(home, trace.n_slots)
    rules = TriggerRules(trace, home, model, access)
    activations: set[tuple[int, int]] = set()
    zones_hit: set[tuple[int, int]] = set()
    for t, arrivals in enumerate(scheduled_arrivals(schedule.zones)):
        zones = rules.zones_at(t, schedule.zones[t], arrivals)
        for zone in zones:
            zones_hit.add((t, zone))
        activations.update((t, d) for d in rules.appliances_at(t, zones))
    return TriggerPlan(frozenset(activations), frozenset(zones_hit))


def realtime_replay(
    schedule: AttackSchedule,
    plan: Optional[TriggerPlan],
    trace: SensorTrace,
    home: HomeModel,
    access: Optional[AccessProfile] = None,
) -> tuple[SensorTrace, AttackVector]:
    """Turn a schedule and trigger plan into an attacked trace.

    A slot is rewritten for an occupant only when the slot, the occupant, the actual zone
    and the scheduled zone are all accessible. CO2 and temperature of accessible zones are
    re-derived from the slot recurrences from the first rewritten slot on, so the attacked
    readings stay consistent with the controller's physics.

    Returns:
        The attacked trace and the attack vector that produces it from ``trace``.
    """

    if schedule.zones.shape != trace.occupant_zone.shape:
        raise ValueError("Schedule and trace must cover the same slots and occupants.")
    access = access or AccessProfile.full(home, trace.n_slots)
    gate = AccessGate.build(access, trace, home)
    allowed = gate.controllable(trace.occupant_zone) & gate.zones[schedule.zones]
    zones = np.where(allowed, schedule.zones, trace.occupant_zone)
    activity = np.where(allowed, schedule.activities, trace.activity)
    changed = (zones != trace.occupant_zone) | (activity != trace.activity)

    appliance_on = trace.appliance_on.copy()
    activations: set[tuple[int, int]] = set()
    for t, d in sorted(plan.activations if plan is not None else ()):
        if gate.slots[t] and gate.appliances[d] and gate.zones[home.appliances[d].zone] and not appliance_on[t, d]:
            appliance_on[t, d] = True
            activations.add((t, d))

    touched = np.flatnonzero(changed.any(axis=1) | (appliance_on != trace.appliance_on).any(axis=1))
    if touched.size == 0:
        return trace, AttackVector.identity(trace)
    first = int(touched[0])

    fixed = gate.iaq_fixed()
    fixed[:first] = True
    co2, temp = propagate_iaq(
        home,
        occupant_zone=zones,
        activity=activity,
        appliance_on=appliance_on,
        outdoor_co2=trace.outdoor_co2,
        outdoor_temp=trace.outdoor_temp,
        initial_co2=trace.co2[0],
        initial_temp=trace.temp[0],
        fixed=fixed,
        fixed_co2=trace.co2,
        fixed_temp=trace.temp,
        slot_offset=trace.start_slot,
    )
    relocations = {
        (int(t), int(o)): (int(zones[t, o]), int(activity[t, o])) for t, o in np.argwhere(changed)
    }
    vector = AttackVector(
        delta_co2=co2 - trace.co2,
        delta_temp=temp - trace.temp,
        relocations=relocations,
        activations=frozenset(activations),
    )
    attacked = trace.with_changes(
        occupant_zone=zones, activity=activity, co2=co2, temp=temp, appliance_on=appliance_on
    )
    logger.debug(
        "Replayed schedule from slot %d: %d relocations, %d activations",
        first,
        len(relocations),
        len(activations),
    )
    return attacked, vector


def attack_cost(trace: SensorTrace, home: HomeModel) -> float:
    """Total bill of a (possibly attacked) trace."""

    return simulate(trace, home).total_cost


__all__ = [
    "CONSTRAINTS",
    "AccessGate",
    "AttackSchedule",
    "StealthVerdict",
    "StealthViolation",
    "TriggerPlan",
    "TriggerRules",
    "apply_fdi",
    "attack_cost",
    "realtime_replay",
    "scheduled_arrivals",
    "trigger_decision",
    "verify_stealth",
]
