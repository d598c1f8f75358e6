"""Attack schedule search: stay rules, slot valuation, greedy and windowed optimizers."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..core_model import (
    AIR_HEAT_FACTOR,
    AccessProfile,
    BudgetExceeded,
    Deadlock,
    HomeModel,
    InfeasibleSchedule,
    SensorTrace,
    SingularVentilation,
)
from .adm_service import AdmModel, detect
from .attack_service import (
    AccessGate,
    AttackSchedule,
    TriggerPlan,
    TriggerRules,
    attack_cost,
    realtime_replay,
    scheduled_arrivals,
    trigger_decision,
)
from .controller_service import ZoneDynamics, ZoneState, zone_airflow

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 10
DEFAULT_NODE_BUDGET = 2_000_000

ScheduleLike = Union[AttackSchedule, np.ndarray]


@dataclass(frozen=True)
class WindowSpec:
    start: int
    length: int

    def __post_init__(self) -> None:
        if self.length < 1 or self.start < 0:
            raise ValueError(f"Window needs start >= 0 and length >= 1; got {self.start}, {self.length}.")

    @property
    def stop(self) -> int:
        return self.start + self.length


def tile_windows(n_slots: int, length: int) -> list[WindowSpec]:
    """Consecutive windows covering ``[0, n_slots)``; the last one may be shorter."""

    if length < 1:
        raise ValueError("Window length must be >= 1.")
    return [WindowSpec(start, min(length, n_slots - start)) for start in range(0, n_slots, length)]


@dataclass(frozen=True)
class StayState:
    """Zone of an occupant's ongoing scheduled stay; ``arrival`` is None for the initial stay."""

    zone: int
    arrival: Optional[int]


@dataclass(frozen=True, eq=False)
class PhysicsCarry:
    co2: Optional[np.ndarray] = None
    emission: Optional[np.ndarray] = None
    airflow: Optional[np.ndarray] = None
    cumulative_peak: float = 0.0
    day: int = -1


@dataclass(frozen=True, eq=False)
class CarryState:
    """State handed from one window to the next."""

    stays: tuple[StayState, ...]
    physics: PhysicsCarry

    def as_dict(self) -> dict[str, Any]:
        return {"stays": [[s.zone, s.arrival] for s in self.stays]}


@dataclass(frozen=True, eq=False)
class WindowResult:
    window: WindowSpec
    zones: np.ndarray
    activities: np.ndarray
    value: float
    nodes: int
    carry: CarryState

    def summary(self) -> dict[str, Any]:
        return {
            "start": self.window.start,
            "length": self.window.length,
            "value_usd": self.value,
            "nodes": self.nodes,
        }


@dataclass(frozen=True, eq=False)
class OccupantViability:
    """Latest legal exit per arrival: ``last_exit[t, z]`` is -1 when arriving at ``z`` on ``t`` leads nowhere."""

    last_exit: np.ndarray

    def viable(self, t: int, zone: int) -> bool:
        return bool(self.last_exit[t, zone] >= 0)


def occupant_viability(
    allowed: np.ndarray, occupant: int, model: AdmModel, *, start_slot: int = 0
) -> OccupantViability:
    """Backward reachability of legal stays for one occupant.

    A stay arriving at ``t`` in zone ``z`` is viable when it can end at some exit slot that
    is in-cluster and followed by a viable arrival in another zone, or when it can run to the
    end of the horizon without exceeding the longest in-cluster stay.

    Args:
        allowed: Boolean [slot, zone] matrix of zones the occupant may be reported in.
        occupant: Occupant id, used to look up the model's clusters.
        model: Trained detector whose clusters bound every stay.
        start_slot: Absolute slot of row 0, for slot-of-day lookups.
    """

    n_slots, n_zones = allowed.shape
    run = np.zeros((n_slots + 1, n_zones), dtype=int)
    for t in range(n_slots - 1, -1, -1):
        run[t] = np.where(allowed[t], run[t + 1] + 1, 0)

    last_exit = np.full((n_slots, n_zones), -1, dtype=int)
    other = np.zeros((n_slots + 1, n_zones), dtype=bool)
    tables = [model.feasible_table(occupant, zone) for zone in range(n_zones)]
    for t in range(n_slots - 1, -1, -1):
        slot_of_day = (start_slot + t) % model.slots_per_day
        for zone in range(n_zones):
            length = int(run[t, zone])
            if length == 0:
                continue
            row = tables[zone][slot_of_day]
            span = min(length, row.size)
            exits = t + np.arange(span)
            ok = row[:span] & other[exits + 1, zone]
            best = int(exits[ok].max()) if ok.any() else -1
            if t + length == n_slots:
                feasible = np.flatnonzero(row)
                if feasible.size and n_slots - 1 - t <= feasible[-1]:
                    best = n_slots - 1
            last_exit[t, zone] = best
        viable_row = last_exit[t] >= 0
        other[t] = (viable_row.sum() - viable_row) > 0
    return OccupantViability(last_exit)


def best_activities(home: HomeModel, outdoor_co2: float) -> np.ndarray:
    """Most airflow-hungry activity per [occupant, zone] for a lone occupant at the setpoint.

    Ties go to the lowest activity id.
    """

    best = np.zeros((home.n_occupants, home.n_zones), dtype=int)
    for occupant in range(home.n_occupants):
        for zone in home.zones:
            top = -math.inf
            for activity in home.activities_for(occupant, zone.id):
                profile = home.profile(occupant, zone.id, activity)
                if profile is None:
                    continue
                state = ZoneState(
                    co2=zone.co2_setpoint, outdoor_co2=outdoor_co2, emission=profile[0], occupant_heat=profile[1]
                )
                try:
                    score = zone_airflow(
                        state, zone, sampling_minutes=home.sampling_minutes, form=home.ventilation_form
                    ).q
                except SingularVentilation:
                    score = profile[1]
                if score > top:
                    top = score
                    best[occupant, zone.id] = activity
    return best


class ScheduleContext:
    """Everything the schedule search needs about one attacked trace."""

    def __init__(
        self,
        trace: SensorTrace,
        home: HomeModel,
        model: AdmModel,
        access: Optional[AccessProfile] = None,
        *,
        trigger: bool = False,
        viability: bool = True,
    ) -> None:
        self.trace = trace
        self.home = home
        self.model = model
        self.access = access or AccessProfile.full(home, trace.n_slots)
        self.trigger = trigger
        self.gate = AccessGate.build(self.access, trace, home)
        self.actual = trace.occupant_zone
        self.controllable = self.gate.controllable(self.actual)
        self.zone_options = tuple(int(z) for z in np.flatnonzero(self.gate.zones))
        outdoor = float(np.median(trace.outdoor_co2)) if trace.n_slots else 400.0
        self.best_activity = best_activities(home, outdoor)
        self.rules = TriggerRules(trace, home, model, self.access) if trigger else None
        self._limits: dict[tuple[int, int, int], int] = {}

        n_slots, n_occupants = self.actual.shape
        self.initial_end = np.full(n_occupants, n_slots - 1, dtype=int)
        for o in range(n_occupants):
            moves = np.flatnonzero(np.diff(self.actual[:, o]) != 0)
            if moves.size:
                self.initial_end[o] = int(moves[0])

        self.allowed = np.zeros((n_slots, n_occupants, home.n_zones), dtype=bool)
        rows = np.arange(n_slots)
        self.passthrough = np.zeros(n_occupants, dtype=bool)
        for o in range(n_occupants):
            free = self.controllable[:, o] & (rows > self.initial_end[o])
            self.allowed[rows, o, self.actual[:, o]] = True
            self.allowed[np.ix_(free, [o], np.asarray(self.zone_options, dtype=int))] = True
            self.passthrough[o] = not free.any()

        self.deadlocks: list[Deadlock] = []
        self.viability: Optional[list[Optional[OccupantViability]]] = None
        if viability:
            self.viability = []
            for o in range(n_occupants):
                if self.passthrough[o]:
                    self.viability.append(None)
                    continue
                table = occupant_viability(self.allowed[:, o, :], o, model, start_slot=trace.start_slot)
                first = int(self.initial_end[o]) + 1
                initial_zone = int(self.actual[0, o])
                if first < n_slots and not any(
                    table.viable(first, z) for z in range(home.n_zones) if z != initial_zone
                ):
                    self.deadlocks.append(Deadlock(first, o, "no viable zone after the initial stay"))
                    logger.warning("Occupant %d has no feasible schedule; replaying actual zones.", o)
                    self.passthrough[o] = True
                    self.allowed[:, o, :] = False
                    self.allowed[rows, o, self.actual[:, o]] = True
                    self.viability.append(None)
                    continue
                self.viability.append(table)
        self.evaluator = SlotEvaluator(self)

    @property
    def n_slots(self) -> int:
        return self.trace.n_slots

    @property
    def n_occupants(self) -> int:
        return self.trace.n_occupants

    def initial_carry(self) -> CarryState:
        stays = tuple(StayState(int(self.actual[0, o]), None) for o in range(self.n_occupants))
        return CarryState(stays=stays, physics=PhysicsCarry())

    def stay_limit(self, arrival: int, occupant: int, zone: int) -> int:
        """Longest in-cluster duration for an arrival, or -1 when there is none."""

        slot_of_day = (self.trace.start_slot + arrival) % self.model.slots_per_day
        key = (slot_of_day, occupant, zone)
        if key not in self._limits:
            feasible = np.flatnonzero(self.model.feasible_table(occupant, zone)[slot_of_day])
            self._limits[key] = int(feasible[-1]) if feasible.size else -1
        return self._limits[key]

    def in_range(self, arrival: int, occupant: int, zone: int, duration: int) -> bool:
        table = self.model.feasible_table(occupant, zone)
        if duration >= table.shape[1]:
            return False
        slot_of_day = (self.trace.start_slot + arrival) % self.model.slots_per_day
        return bool(table[slot_of_day, duration])

    def options(self, t: int, occupant: int) -> tuple[int, ...]:
        if self.passthrough[occupant] or not self.allowed[t, occupant].sum() > 1:
            return (int(self.actual[t, occupant]),)
        return self.zone_options

    def check(self, occupant: int, state: StayState, t: int, zone: int) -> tuple[Optional[StayState], str]:
        """Apply the stay rules to reporting ``zone`` at slot ``t``.

        Returns the next stay state, or None with the name of the broken constraint.
        """

        if not self.allowed[t, occupant, zone]:
            return None, "access"
        if self.passthrough[occupant]:
            return (state if zone == state.zone else StayState(zone, t)), ""
        viability = self.viability[occupant] if self.viability is not None else None
        if zone == state.zone:
            if state.arrival is None:
                return (state, "") if t <= self.initial_end[occupant] else (None, "initial-stay")
            if viability is not None:
                ok = viability.last_exit[state.arrival, zone] >= t
            else:
                ok = t - state.arrival <= self.stay_limit(state.arrival, occupant, zone)
            return (state, "") if ok else (None, "max-stay")
        if state.arrival is None:
            if t != self.initial_end[occupant] + 1:
                return None, "initial-stay"
        elif not self.in_range(state.arrival, occupant, state.zone, t - 1 - state.arrival):
            return None, "in-range-exit"
        if viability is not None:
            if not viability.viable(t, zone):
                return None, "viability"
        elif self.stay_limit(t, occupant, zone) < 0:
            return None, "max-stay"
        return StayState(zone, t), ""

    def activities_row(self, t: int, zones_row: Sequence[int]) -> np.ndarray:
        """Keep the reported activity where the zone is unchanged, else the zone's best activity."""

        row = np.empty(len(zones_row), dtype=int)
        for o, zone in enumerate(zones_row):
            if zone == self.actual[t, o]:
                row[o] = self.trace.activity[t, o]
            else:
                row[o] = self.best_activity[o, zone]
        return row

    def activities_for(self, zones: np.ndarray, *, offset: int = 0) -> np.ndarray:
        return np.array(
            [self.activities_row(offset + k, zones[k]) for k in range(zones.shape[0])], dtype=int
        ).reshape(zones.shape)


class SlotEvaluator:
    """Slot-by-slot cost of a fabricated assignment, mirroring replay and billing."""

    def __init__(self, context: ScheduleContext) -> None:
        trace = context.trace
        home = context.home
        self.context = context
        self.dynamics = ZoneDynamics(home)
        self.emission_table, self.radiation_table = home.activity_tables
        self.actual_co2 = trace.co2
        self.outdoor_co2 = trace.outdoor_co2
        self.fixed = context.gate.iaq_fixed()
        self.indoor = self.dynamics.indoor
        self.base_heat = np.asarray(trace.appliance_on, dtype=float) @ self.dynamics.appliance_zone_heat
        self.base_appliance_kwh = np.asarray(trace.appliance_on, dtype=float) @ self.dynamics.appliance_kwh
        self.appliance_zone = home.appliance_zone
        self.appliance_heat = home.appliance_heat
        tariff = home.tariff
        self.peak = tariff.peak_mask(trace.n_slots, home.slots_per_day, trace.start_slot)
        self.day = (trace.start_slot + np.arange(trace.n_slots)) // home.slots_per_day
        self.tariff = tariff

    def _loads(
        self, t: int, zones_row: Sequence[int], stays: Optional[Sequence[StayState]], *, trigger: bool
    ) -> tuple[np.ndarray, np.ndarray, float]:
        context = self.context
        n_zones = self.indoor.shape[0]
        emission = np.zeros(n_zones)
        heat = self.base_heat[t].copy()
        for o, zone in enumerate(zones_row):
            activity = (
                context.trace.activity[t, o] if zone == context.actual[t, o] else context.best_activity[o, zone]
            )
            emission[zone] += self.emission_table[o, zone, activity]
            heat[zone] += self.radiation_table[o, zone, activity]
        appliance_kwh = float(self.base_appliance_kwh[t])
        if trigger and context.rules is not None and stays is not None:
            arrivals = [stay.arrival for stay in stays]
            for d in context.rules.appliances_at(t, context.rules.zones_at(t, zones_row, arrivals)):
                heat[self.appliance_zone[d]] += self.appliance_heat[d]
                appliance_kwh += float(self.dynamics.appliance_kwh[d])
        return emission, heat, appliance_kwh

    def step(
        self, t: int, zones_row: Sequence[int], stays: Sequence[StayState], carry: PhysicsCarry
    ) -> tuple[float, PhysicsCarry]:
        """Cost of slot ``t`` and the physics state after it."""

        emission, heat, appliance_kwh = self._loads(t, zones_row, stays, trigger=True)
        if carry.co2 is None:
            co2 = self.actual_co2[t].copy()
        else:
            co2 = self.dynamics.next_co2(carry.emission, carry.co2, self.outdoor_co2[t - 1], carry.airflow)
            co2 = np.where(self.indoor, co2, self.outdoor_co2[t])
            co2[self.fixed[t]] = self.actual_co2[t][self.fixed[t]]
        airflow = self.dynamics.airflow(
            co2, self.outdoor_co2[t], emission, heat, slot=self.context.trace.start_slot + t
        )
        kwh = self.dynamics.hvac_kwh(airflow) + appliance_kwh
        day = int(self.day[t])
        cumulative = carry.cumulative_peak if day == carry.day else 0.0
        rate = self.tariff.offpeak_rate
        if self.peak[t]:
            cumulative += kwh
            if cumulative > self.tariff.battery_kwh:
                rate = self.tariff.peak_rate
        return kwh * rate, PhysicsCarry(co2, emission, airflow, cumulative, day)

    def instant_value(self, t: int, zones_row: Sequence[int]) -> float:
        """Cost of slot ``t`` from the recorded CO2, ignoring history and the battery."""

        emission, heat, appliance_kwh = self._loads(t, zones_row, None, trigger=False)
        airflow = self.dynamics.airflow(
            self.actual_co2[t], self.outdoor_co2[t], emission, heat, slot=self.context.trace.start_slot + t
        )
        rate = self.tariff.peak_rate if self.peak[t] else self.tariff.offpeak_rate
        return (self.dynamics.hvac_kwh(airflow) + appliance_kwh) * rate

    def slot_upper_bounds(self, window: WindowSpec, carry: PhysicsCarry) -> Optional[np.ndarray]:
        """Admissible per-slot cost ceilings for a window, or None when no finite one exists.

        Each slot either lands CO2 on the setpoint (ventilation binds), leaves it rising
        (no airflow) or pulls it toward the supply term by at most ``r = q_temp_max / V``
        of the gap (temperature binds). The gap to the supply term therefore shrinks at most
        geometrically from the window's first reading, and the ventilation airflow is affine
        in the zone's emission over that gap.
        """

        context = self.context
        home = context.home
        dyn = self.dynamics
        constants = dyn.constants
        dt = dyn.dt
        corrected = dyn.form == "corrected"
        scale = dt if corrected else 1.0

        first = max(window.start - 1, 0)
        outdoor = self.outdoor_co2[first : window.stop]
        supply = outdoor if corrected else outdoor * dt
        supply_min = float(supply.min())
        supply_max = float(supply.max())
        setpoint = constants["co2_setpoint"]
        pinned = self.actual_co2[window.start : window.stop].min(axis=0)

        volume = constants["volume"]
        temp_delta = constants["temp_delta"]
        with np.errstate(divide="ignore", invalid="ignore"):
            temp_gain = np.where(temp_delta > 0, 1.0 / (temp_delta * AIR_HEAT_FACTOR), 0.0)
        emission_max = np.nan_to_num(np.nanmax(self.emission_table, axis=2))
        heat_max = np.nan_to_num(np.nanmax(self.radiation_table, axis=2))
        appliance_heat = dyn.appliance_zone_heat.sum(axis=0)
        coefficient = np.maximum(dyn.hvac_coefficient, 0.0)

        # gaps[k, z]: lower bound on CO2 minus the lowest supply term at slot start + k
        gaps = np.full((window.length, home.n_zones), np.inf)
        for zone in range(home.n_zones):
            if not self.indoor[zone]:
                continue
            shrink = (heat_max[:, zone].sum() + appliance_heat[zone]) * temp_gain[zone] * scale / volume[zone]
            if shrink > 1.0:
                return None
            ceiling = min(setpoint[zone], pinned[zone]) - supply_min
            if carry.co2 is None:
                gap = min(float(self.actual_co2[window.start, zone]) - supply_min, ceiling)
            else:
                gap = min((1.0 - shrink) * (float(carry.co2[zone]) - supply_min), ceiling)
            for k in range(window.length):
                if k:
                    gap = min((1.0 - shrink) * gap, ceiling)
                gaps[k, zone] = gap
        margins = gaps - (supply_max - supply_min)
        if np.any(margins[:, self.indoor] <= 0):
            return None

        appliances_kwh = float(dyn.appliance_kwh.sum())
        bounds = np.empty(window.length)
        for k, t in enumerate(range(window.start, window.stop)):
            base = 0.0
            increments = np.zeros((context.n_occupants, home.n_zones))
            for zone in np.flatnonzero(self.indoor):
                denominator = scale * margins[k, zone]
                vent_base = volume[zone] / scale + max(volume[zone] * (supply_max - setpoint[zone]), 0.0) / denominator
                base += max(vent_base, appliance_heat[zone] * temp_gain[zone]) * coefficient[zone]
                increments[:, zone] = (
                    np.maximum(emission_max[:, zone] * dt / denominator, heat_max[:, zone] * temp_gain[zone])
                    * coefficient[zone]
                )
            occupant_term = sum(
                float(increments[o, context.allowed[t, o]].max(initial=0.0)) for o in range(context.n_occupants)
            )
            rate = self.tariff.peak_rate if self.peak[t] else self.tariff.offpeak_rate
            bounds[k] = (base + occupant_term + appliances_kwh) * rate
        return bounds


def _presence_to_zones(presence: np.ndarray) -> np.ndarray:
    counts = presence.sum(axis=2)
    bad = np.argwhere(counts != 1)
    if bad.size:
        t, o = bad[0]
        raise InfeasibleSchedule(
            f"Occupant {o} is reported in {counts[t, o]} zones at slot {t}.", constraint="unique-zone", slot=int(t)
        )
    return presence.argmax(axis=2)


def _schedule_zones(schedule: ScheduleLike) -> np.ndarray:
    if isinstance(schedule, AttackSchedule):
        return schedule.zones
    array = np.asarray(schedule)
    if array.ndim == 3:
        return _presence_to_zones(array.astype(bool))
    if array.ndim != 2:
        raise ValueError("A schedule is a [slot, occupant] zone matrix or a [slot, occupant, zone] presence tensor.")
    return array.astype(int)


def schedule_value(
    schedule: ScheduleLike,
    context: ScheduleContext,
    *,
    window: Optional[WindowSpec] = None,
    carry: Optional[CarryState] = None,
) -> float:
    """Attack cost of a schedule over a window, after checking every stay rule.

    ``schedule`` may cover the whole trace or just the window.

    Raises:
        InfeasibleSchedule: Naming the first broken constraint and its slot.
    """

    zones = _schedule_zones(schedule)
    window = window or WindowSpec(0, context.n_slots)
    if zones.shape[0] == context.n_slots and window.length != context.n_slots:
        zones = zones[window.start : window.stop]
    if zones.shape != (window.length, context.n_occupants):
        raise ValueError(f"Schedule shape {zones.shape} does not match the window.")
    if carry is None:
        if window.start != 0:
            raise ValueError("A carry state is required for windows that start after slot 0.")
        carry = context.initial_carry()

    stays = list(carry.stays)
    physics = carry.physics
    value = 0.0
    for k, t in enumerate(range(window.start, window.stop)):
        for o in range(context.n_occupants):
            zone = int(zones[k, o])
            if not 0 <= zone < context.home.n_zones:
                raise InfeasibleSchedule(f"Unknown zone {zone}.", constraint="unique-zone", slot=t)
            state, broken = context.check(o, stays[o], t, zone)
            if state is None:
                raise InfeasibleSchedule(
                    f"Occupant {o} cannot be reported in zone {zone} at slot {t}.", constraint=broken, slot=t
                )
            stays[o] = state
        slot_value, physics = context.evaluator.step(t, zones[k], stays, physics)
        value += slot_value
    return value


def optimize_window(
    window: WindowSpec,
    carry: CarryState,
    context: ScheduleContext,
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
    strict_budget: bool = False,
    use_bound: bool = True,
) -> WindowResult:
    """Exact best schedule for one window by depth-first branch and bound.

    Assignments are explored slot by slot, occupant by occupant, zones in ascending id, and
    the incumbent only changes on a strictly larger value, so among equal-valued schedules
    the lexicographically smallest (slot, occupant, zone) one wins.

    Raises:
        BudgetExceeded: When more than ``node_budget`` nodes are explored, or up front when
            ``strict_budget`` is set and the raw search space exceeds the budget.
        InfeasibleSchedule: When no assignment satisfies the stay rules.
    """

    n_occupants = context.n_occupants
    attackable = int((~context.passthrough).sum())
    space = float(len(context.zone_options)) ** (window.length * attackable)
    logger.debug("Window %d+%d: search space up to %.3g assignments", window.start, window.length, space)
    if strict_budget and space > node_budget:
        raise BudgetExceeded(
            f"Window of {window.length} slots spans {space:.3g} assignments (> {node_budget}).", nodes=0
        )

    bounds = context.evaluator.slot_upper_bounds(window, carry.physics) if use_bound else None
    remaining = None
    if bounds is not None:
        # slack keeps the bound admissible under float rounding
        remaining = np.concatenate([np.cumsum(bounds[::-1])[::-1] * (1.0 + 1e-9) + 1e-12, [0.0]])

    positions = [(t, o) for t in range(window.start, window.stop) for o in range(n_occupants)]
    buffer = np.zeros((window.length, n_occupants), dtype=int)
    best: dict[str, Any] = {"value": -math.inf, "zones": None, "carry": None}
    nodes = 0

    def descend(index: int, stays: tuple[StayState, ...], physics: PhysicsCarry, value: float) -> None:
        nonlocal nodes
        if index == len(positions):
            if value > best["value"]:
                best["value"] = value
                best["zones"] = buffer.copy()
                best["carry"] = CarryState(stays, physics)
            return
        t, o = positions[index]
        k = t - window.start
        if o == 0 and remaining is not None and value + remaining[k] <= best["value"]:
            return
        for zone in context.options(t, o):
            state, _ = context.check(o, stays[o], t, zone)
            if state is None:
                continue
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceeded(
                    f"Window at slot {window.start} explored more than {node_budget} nodes.", nodes=nodes
                )
            buffer[k, o] = zone
            next_stays = stays[:o] + (state,) + stays[o + 1 :]
            if o == n_occupants - 1:
                slot_value, next_physics = context.evaluator.step(t, buffer[k], next_stays, physics)
                descend(index + 1, next_stays, next_physics, value + slot_value)
            else:
                descend(index + 1, next_stays, physics, value)

    descend(0, tuple(carry.stays), carry.physics, 0.0)
    if best["zones"] is None:
        raise InfeasibleSchedule(
            f"No assignment for slots {window.start}..{window.stop - 1} satisfies the stay rules.",
            constraint="window",
            slot=window.start,
        )
    logger.debug("Window %d+%d: %d nodes, value %.6f", window.start, window.length, nodes, best["value"])
    zones = best["zones"]
    return WindowResult(
        window=window,
        zones=zones,
        activities=context.activities_for(zones, offset=window.start),
        value=float(best["value"]),
        nodes=nodes,
        carry=best["carry"],
    )


def _benign_alarms(context: ScheduleContext) -> set[tuple[int, int, int, int]]:
    return {(a.occupant, a.zone, a.arrival, a.duration) for a in detect(context.trace, context.model).alarms}


def select_schedule(
    context: ScheduleContext,
    proposed: AttackSchedule,
    incumbents: Iterable[AttackSchedule] = (),
) -> AttackSchedule:
    """Keep the costliest stealthy option among the proposal, the incumbents and no attack at all.

    Options are replayed and billed for real. An option qualifies when it raises no alarm the
    actual trace does not raise itself. Ties keep the earlier option, so the proposal wins
    over incumbents and both win over the actual trace.
    """

    trace, home, access = context.trace, context.home, context.access
    options: list[tuple[AttackSchedule, TriggerPlan]] = []
    if context.trigger:
        options.append((proposed, trigger_decision(proposed, trace, context.model, home, access)))
    options.append((proposed, TriggerPlan.empty()))
    for incumbent in incumbents:
        if incumbent.zones.shape != proposed.zones.shape:
            logger.debug("Skipping incumbent with shape %s", incumbent.zones.shape)
            continue
        incumbent = incumbent.with_triggers(incumbent.triggers, source="incumbent")
        options.append((incumbent, incumbent.triggers or TriggerPlan.empty()))
        if context.trigger:
            options.append((incumbent, trigger_decision(incumbent, trace, context.model, home, access)))

    baseline = _benign_alarms(context)
    chosen: Optional[tuple[AttackSchedule, TriggerPlan]] = None
    best_cost = -math.inf
    for schedule, plan in options:
        attacked, _ = realtime_replay(schedule, plan, trace, home, access)
        fresh = [
            alarm
            for alarm in detect(attacked, context.model).alarms
            if (alarm.occupant, alarm.zone, alarm.arrival, alarm.duration) not in baseline
        ]
        if fresh:
            logger.warning("Discarding %s schedule: %d new alarms under the model.", schedule.source, len(fresh))
            continue
        cost = attack_cost(attacked, home)
        if cost > best_cost:
            best_cost, chosen = cost, (schedule, plan)

    benign_cost = attack_cost(trace, home)
    if chosen is None or benign_cost > best_cost:
        best_cost = benign_cost
        chosen = (AttackSchedule.from_trace(trace, strategy=proposed.strategy, source="actual"), TriggerPlan.empty())
    schedule, plan = chosen
    if schedule.source != proposed.source:
        logger.warning(
            "Retained the %s schedule (cost %.6f) over the %s proposal.", schedule.source, best_cost, proposed.strategy
        )
    return AttackSchedule(
        zones=schedule.zones,
        activities=schedule.activities,
        strategy=proposed.strategy,
        source=schedule.source,
        deadlocks=proposed.deadlocks,
        windows=proposed.windows,
        triggers=plan,
    )


def windowed_schedule(
    trace: SensorTrace,
    home: HomeModel,
    model: AdmModel,
    access: Optional[AccessProfile] = None,
    window: int = DEFAULT_WINDOW,
    *,
    trigger: bool = False,
    incumbents: Sequence[AttackSchedule] = (),
    node_budget: int = DEFAULT_NODE_BUDGET,
    strict_budget: bool = False,
    viability: bool = True,
    context: Optional[ScheduleContext] = None,
) -> AttackSchedule:
    """Optimize consecutive windows exactly and stitch them with the carried stay state.

    Args:
        trace: Actual (benign) trace of the attacked horizon.
        home: Home model.
        model: The attacker's copy of the detector.
        access: Attacker reach; defaults to full access.
        window: Window length in slots.
        trigger: Also activate appliances in zones the schedule keeps empty.
        incumbents: Schedules to fall back to when they cost more (for example, the same
            attack under a smaller access profile or without triggering).
        node_budget: Nodes explored per window before giving up.
        strict_budget: Refuse windows whose raw search space exceeds the budget.
        viability: Restrict arrivals to stays that can be completed legally.
        context: Prebuilt context, reused across calls on the same trace.

    Returns:
        The selected schedule; ``triggers`` holds the activation plan to replay with it.
    """

    context = context or ScheduleContext(trace, home, model, access, trigger=trigger, viability=viability)
    n_slots = context.n_slots
    zones = np.zeros((n_slots, context.n_occupants), dtype=int)
    activities = np.zeros_like(zones)
    carry = context.initial_carry()
    summaries = []
    for spec in tile_windows(n_slots, window):
        result = optimize_window(spec, carry, context, node_budget=node_budget, strict_budget=strict_budget)
        zones[spec.start : spec.stop] = result.zones
        activities[spec.start : spec.stop] = result.activities
        carry = result.carry
        summaries.append(result.summary())
    logger.info(
        "Stitched %d windows of %d slots; %d nodes explored",
        len(summaries),
        window,
        sum(item["nodes"] for item in summaries),
    )
    stitched = AttackSchedule(
        zones=zones,
        activities=activities,
        strategy="windowed",
        source="search",
        deadlocks=tuple(context.deadlocks),
        windows=tuple(summaries),
    )
    return select_schedule(context, stitched, incumbents)


def greedy_schedule(
    trace: SensorTrace,
    home: HomeModel,
    model: AdmModel,
    access: Optional[AccessProfile] = None,
    *,
    trigger: bool = False,
    incumbents: Sequence[AttackSchedule] = (),
    context: Optional[ScheduleContext] = None,
) -> AttackSchedule:
    """Occupant by occupant: at each arrival pick the zone with the highest instant cost and hold it.

    A stay is held until its latest legal exit; occupants scheduled earlier are seen at
    their scheduled zones, later ones at their actual zones.
    """

    context = context or ScheduleContext(trace, home, model, access, trigger=trigger, viability=True)
    zones = trace.occupant_zone.copy()
    deadlocks = list(context.deadlocks)
    n_slots = context.n_slots
    for o in range(context.n_occupants):
        if context.passthrough[o]:
            continue
        viability = context.viability[o]
        t = int(context.initial_end[o]) + 1
        while t < n_slots:
            current = int(zones[t - 1, o])
            best_zone, best_value = None, -math.inf
            for zone in context.options(t, o):
                if zone == current or not viability.viable(t, zone):
                    continue
                row = zones[t].copy()
                row[o] = zone
                value = context.evaluator.instant_value(t, row)
                if value > best_value:
                    best_zone, best_value = zone, value
            if best_zone is None:
                deadlocks.append(Deadlock(t, o, "no zone offers a feasible stay"))
                logger.warning("Greedy deadlock for occupant %d at slot %d; replaying actual zones.", o, t)
                zones[t:, o] = trace.occupant_zone[t:, o]
                break
            exit_slot = int(viability.last_exit[t, best_zone])
            zones[t : exit_slot + 1, o] = best_zone
            t = exit_slot + 1
    proposed = AttackSchedule(
        zones=zones,
        activities=context.activities_for(zones),
        strategy="greedy",
        source="search",
        deadlocks=tuple(deadlocks),
    )
    return select_schedule(context, proposed, incumbents)


def explain_schedule(schedule: AttackSchedule, context: ScheduleContext) -> pd.DataFrame:
    """Per slot and occupant, the constraint that decided the reported zone."""

    rows = []
    zones = schedule.zones
    n_slots = zones.shape[0]
    arrivals = scheduled_arrivals(zones)
    for t in range(n_slots):
        for o in range(zones.shape[1]):
            zone = int(zones[t, o])
            if t <= context.initial_end[o]:
                binding = "initial-stay"
            elif context.passthrough[o] or not context.controllable[t, o]:
                binding = "access-gate"
            elif t + 1 < n_slots and zones[t + 1, o] != zone:
                arrival = arrivals[t][o]
                limit = context.stay_limit(arrival, o, zone) if arrival is not None else -1
                binding = "max-stay-exit" if arrival is not None and t - arrival == limit else "in-range-exit"
            else:
                binding = "free"
            rows.append(
                {
                    "slot": t + context.trace.start_slot,
                    "occupant_id": o,
                    "zone_id": zone,
                    "activity_id": int(schedule.activities[t, o]),
                    "binding": binding,
                }
            )
    return pd.DataFrame(rows, columns=["slot", "occupant_id", "zone_id", "activity_id", "binding"])


__all__ = [
    "DEFAULT_NODE_BUDGET",
    "DEFAULT_WINDOW",
    "CarryState",
    "OccupantViability",
    "PhysicsCarry",
    "ScheduleContext",
    "SlotEvaluator",
    "StayState",
    "WindowResult",
    "WindowSpec",
    "best_activities",
    "explain_schedule",
    "greedy_schedule",
    "occupant_viability",
    "optimize_window",
    "schedule_value",
    "select_schedule",
    "tile_windows",
    "windowed_schedule",
]
