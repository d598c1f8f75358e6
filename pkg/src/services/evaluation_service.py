"""Evaluation harness: detection metrics, attack-impact sweeps and search benchmarks."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.metrics import accuracy_score, confusion_matrix, f1_score, precision_score, recall_score

from ..core_model import (
    AccessProfile,
    ActivityProfile,
    BudgetExceeded,
    HomeFdiError,
    HomeModel,
    SensorTrace,
    SingularVentilation,
    Zone,
)
from ..schemas import AdmConfig, BenchConfig, SweepConfig
from .adm_service import AdmModel, detect, train
from .attack_service import AttackSchedule, attack_cost, realtime_replay, verify_stealth
from .controller_service import ZoneDynamics, ZoneState, propagate_iaq, simulate, zone_airflow
from .scheduling_service import (
    ScheduleContext,
    best_activities,
    greedy_schedule,
    optimize_window,
    tile_windows,
    windowed_schedule,
)

logger = logging.getLogger(__name__)

STRATEGIES = ("benign", "naive", "greedy", "windowed")
KNOWLEDGE_LEVELS = ("all", "partial")
WARMUP_RUNS = 1
CLONE_VOLUME_STEP = 0.1


@dataclass(frozen=True)
class DetectionMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int

    def as_dict(self) -> Dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
        }


@dataclass(frozen=True)
class ImpactReport:
    """One end-to-end run of a strategy on one attacked day."""

    day: int
    strategy: str
    adm: str
    knowledge: str
    triggering: bool
    access: str
    total_usd: float
    benign_usd: float
    alarms: int
    stealthy: bool
    source: str = ""

    @property
    def uplift_usd(self) -> float:
        return self.total_usd - self.benign_usd

    @property
    def uplift_pct(self) -> float:
        if self.benign_usd == 0:
            return 0.0
        return 100.0 * (self.total_usd - self.benign_usd) / self.benign_usd

    def as_dict(self) -> Dict[str, Any]:
        return {
            "day": self.day,
            "strategy": self.strategy,
            "adm": self.adm,
            "knowledge": self.knowledge,
            "triggering": self.triggering,
            "access": self.access,
            "total_usd": self.total_usd,
            "benign_usd": self.benign_usd,
            "uplift_usd": self.uplift_usd,
            "uplift_pct": self.uplift_pct,
            "alarms": self.alarms,
            "stealthy": self.stealthy,
            "source": self.source,
        }


IMPACT_COLUMNS = list(
    ImpactReport(0, "", "", "", False, "", 0.0, 0.0, 0, True).as_dict()
)


@dataclass(frozen=True)
class BenchPoint:
    """Median search time for one window length or zone count.

    ``nodes_unbounded`` is -1 when the search without pruning ran out of budget; a censored
    point reports the time and nodes spent before the budget ran out.
    """

    axis: str
    value: int
    ms: float
    nodes: int
    nodes_unbounded: int
    censored: bool
    repetitions: int

    def as_dict(self) -> Dict[str, Any]:
        return {
            "axis": self.axis,
            "value": self.value,
            "ms": self.ms,
            "nodes": self.nodes,
            "nodes_unbounded": self.nodes_unbounded,
            "censored": self.censored,
            "repetitions": self.repetitions,
        }


BENCH_COLUMNS = ["axis", "value", "ms", "nodes", "nodes_unbounded", "censored", "repetitions"]
METRIC_COLUMNS = ["accuracy", "precision", "recall", "f1", "tp", "fp", "fn", "tn"]
ADM_EVAL_COLUMNS = ["algorithm", "knowledge", *METRIC_COLUMNS]
PROGRESSIVE_COLUMNS = ["days", "algorithm", *METRIC_COLUMNS]


def confusion_metrics(predicted: Sequence[bool], truth: Sequence[bool]) -> DetectionMetrics:
    """Accuracy, precision, recall and F1 of alarm flags against ground truth.

    Undefined ratios (no predicted or no actual positives) are reported as 0.
    """

    y_pred = np.asarray(predicted, dtype=bool)
    y_true = np.asarray(truth, dtype=bool)
    if y_pred.shape != y_true.shape:
        raise ValueError("Predictions and labels must be aligned.")
    if y_true.size == 0:
        return DetectionMetrics(0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0)
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[False, True]).ravel()
    return DetectionMetrics(
        accuracy=float(accuracy_score(y_true, y_pred)),
        precision=float(precision_score(y_true, y_pred, zero_division=0)),
        recall=float(recall_score(y_true, y_pred, zero_division=0)),
        f1=float(f1_score(y_true, y_pred, zero_division=0)),
        tp=int(tp),
        fp=int(fp),
        fn=int(fn),
        tn=int(tn),
    )


def zone_cost_table(home: HomeModel, trace: Optional[SensorTrace] = None) -> pd.DataFrame:
    """Per-slot cost of each occupant's most intensive activity per zone, and of each appliance.

    Occupant rows assume the occupant alone in the zone at the CO2 setpoint; appliance rows
    price the appliance's energy plus the airflow its radiated heat requires.
    """

    outdoor = float(np.median(trace.outdoor_co2)) if trace is not None and trace.n_slots else 400.0
    dynamics = ZoneDynamics(home)
    best = best_activities(home, outdoor)
    tariff = home.tariff
    rows: list[dict[str, Any]] = []
    for occupant in range(home.n_occupants):
        for zone in home.zones:
            if zone.is_outside:
                continue
            activity = int(best[occupant, zone.id])
            emission, heat = home.profile(occupant, zone.id, activity) or (0.0, 0.0)
            state = ZoneState(co2=zone.co2_setpoint, outdoor_co2=outdoor, emission=emission, occupant_heat=heat)
            try:
                airflow = zone_airflow(state, zone, sampling_minutes=home.sampling_minutes, form=home.ventilation_form).q
            except SingularVentilation:
                airflow = 0.0
            kwh = airflow * float(dynamics.hvac_coefficient[zone.id])
            rows.append(
                {
                    "kind": "occupant",
                    "member_id": occupant,
                    "zone_id": zone.id,
                    "activity_id": activity,
                    "airflow_cfm": airflow,
                    "kwh_per_slot": kwh,
                    "offpeak_usd": kwh * tariff.offpeak_rate,
                    "peak_usd": kwh * tariff.peak_rate,
                }
            )
    for appliance in home.appliances:
        zone = home.zones[appliance.zone]
        state = ZoneState(co2=zone.co2_setpoint, outdoor_co2=outdoor, appliance_heat=float(home.appliance_heat[appliance.id]))
        try:
            airflow = zone_airflow(state, zone, sampling_minutes=home.sampling_minutes, form=home.ventilation_form).q_temp
        except SingularVentilation:
            airflow = 0.0
        kwh = airflow * float(dynamics.hvac_coefficient[zone.id]) + float(dynamics.appliance_kwh[appliance.id])
        rows.append(
            {
                "kind": "appliance",
                "member_id": appliance.id,
                "zone_id": appliance.zone,
                "activity_id": -1,
                "airflow_cfm": airflow,
                "kwh_per_slot": kwh,
                "offpeak_usd": kwh * tariff.offpeak_rate,
                "peak_usd": kwh * tariff.peak_rate,
            }
        )
    return pd.DataFrame(rows)


def naive_attack(
    trace: SensorTrace, home: HomeModel, access: Optional[AccessProfile] = None
) -> tuple[SensorTrace, AttackSchedule]:
    """Relocate every controllable occupant to its most expensive accessible zone.

    No detector constraint is applied. The attacked readings are replayed through the
    zone dynamics, so only the detector can tell the attack apart.
    """

    access = access or AccessProfile.full(home, trace.n_slots)
    table = zone_cost_table(home, trace)
    occupants = table[(table["kind"] == "occupant") & table["zone_id"].isin(sorted(access.zones))]
    zones = trace.occupant_zone.copy()
    activities = trace.activity.copy()
    for occupant, group in occupants.groupby("member_id"):
        ranked = group.sort_values(["peak_usd", "zone_id"], ascending=[False, True], kind="stable")
        if ranked.empty:
            continue
        target = ranked.iloc[0]
        moved = zones[:, occupant] != int(target["zone_id"])
        zones[moved, occupant] = int(target["zone_id"])
        activities[moved, occupant] = int(target["activity_id"])
    schedule = AttackSchedule(zones, activities, strategy="naive", source="naive")
    attacked, _ = realtime_replay(schedule, None, trace, home, access)
    return attacked, schedule


def split_days(trace: SensorTrace, home: HomeModel) -> list[SensorTrace]:
    return trace.split_days(home.slots_per_day)


def split_attack_days(
    days: Sequence[SensorTrace], attack_days: Sequence[int]
) -> tuple[list[SensorTrace], list[SensorTrace]]:
    """Separate training days from attacked days; negative indexes count from the end."""

    if len(days) < 2:
        raise ValueError("Need at least one training day and one attacked day.")
    indices = sorted({index % len(days) for index in attack_days})
    train_days = [day for index, day in enumerate(days) if index not in indices]
    if not train_days:
        raise ValueError("Every day is attacked; no day is left for training.")
    return train_days, [days[index] for index in indices]


def train_knowledge(
    train_days: Sequence[SensorTrace], adm: AdmConfig, knowledge: str, home: HomeModel
) -> AdmModel:
    """Train on every day (``all``) or on the first half of the days (``partial``)."""

    if knowledge not in KNOWLEDGE_LEVELS:
        raise ValueError(f"Unknown knowledge level {knowledge!r}.")
    days = list(train_days)
    if knowledge == "partial":
        days = days[: max(1, len(days) // 2)]
    return train(days, adm.algorithm, adm.hyperparameters(), slots_per_day=home.slots_per_day)


def _access_size(profile: AccessProfile) -> int:
    return len(profile.zones) + len(profile.slots) + len(profile.occupant_tags) + len(profile.appliances)


def _access_within(inner: AccessProfile, outer: AccessProfile) -> bool:
    return (
        inner.zones <= outer.zones
        and inner.slots <= outer.slots
        and inner.occupant_tags <= outer.occupant_tags
        and inner.appliances <= outer.appliances
    )


@dataclass(frozen=True)
class _DayCell:
    day_index: int
    day: SensorTrace
    adm: AdmConfig
    knowledge: str
    defender: AdmModel
    attacker: AdmModel


def _run_day_cell(
    cell: _DayCell, home: HomeModel, config: SweepConfig
) -> list[ImpactReport]:
    """Every strategy, trigger setting and access profile for one (day, ADM, knowledge)."""

    day = cell.day
    benign = attack_cost(day, home)
    profiles = [access.to_profile(home, day.n_slots, start_slot=day.start_slot) for access in config.access]
    order = sorted(range(len(profiles)), key=lambda i: (_access_size(profiles[i]), i))
    solved: dict[tuple[str, int, bool], AttackSchedule] = {}
    reports: dict[tuple[str, int, bool], ImpactReport] = {}

    for strategy in config.strategies:
        for triggering in sorted(set(config.triggering)):
            for index in order:
                profile = profiles[index]
                coordinates = (
                    f"day={cell.day_index} strategy={strategy} adm={cell.adm.algorithm} "
                    f"knowledge={cell.knowledge} triggering={triggering} access={profile.name}"
                )
                try:
                    attacked, source = _attack(strategy, cell, profile, triggering, index, profiles, solved, home, config)
                    total = attack_cost(attacked, home)
                    verdict = verify_stealth(day, attacked, simulate(attacked, home), cell.defender, home, profile)
                except HomeFdiError as exc:
                    logger.error("Sweep cell failed: %s", coordinates)
                    if hasattr(exc, "add_note"):
                        exc.add_note(f"sweep cell: {coordinates}")
                    raise
                alarms = sum(v.constraint == "cluster-consistency" for v in verdict.violations)
                reports[(strategy, index, triggering)] = ImpactReport(
                    day=cell.day_index,
                    strategy=strategy,
                    adm=cell.adm.algorithm,
                    knowledge=cell.knowledge,
                    triggering=triggering,
                    access=profile.name,
                    total_usd=total,
                    benign_usd=benign,
                    alarms=alarms,
                    stealthy=verdict.stealthy,
                    source=source,
                )
                logger.info("%s -> %.6f USD", coordinates, total)
    return [
        reports[(strategy, index, triggering)]
        for strategy in config.strategies
        for triggering in config.triggering
        for index in range(len(profiles))
    ]


def _attack(
    strategy: str,
    cell: _DayCell,
    profile: AccessProfile,
    triggering: bool,
    index: int,
    profiles: Sequence[AccessProfile],
    solved: dict[tuple[str, int, bool], AttackSchedule],
    home: HomeModel,
    config: SweepConfig,
) -> tuple[SensorTrace, str]:
    day = cell.day
    if strategy == "benign":
        return day, "actual"
    if strategy == "naive":
        attacked, schedule = naive_attack(day, home, profile)
        return attacked, schedule.source

    # schedules found with less reach or without triggering stay feasible here
    incumbents = [
        schedule
        for (name, other, trig), schedule in solved.items()
        if name == strategy and (trig is False or triggering) and _access_within(profiles[other], profile)
    ]
    if strategy == "greedy":
        schedule = greedy_schedule(day, home, cell.attacker, profile, trigger=triggering, incumbents=incumbents)
    else:
        schedule = windowed_schedule(
            day,
            home,
            cell.attacker,
            profile,
            config.search.window,
            trigger=triggering,
            incumbents=incumbents,
            node_budget=config.search.node_budget,
            strict_budget=config.search.strict_budget,
        )
    solved[(strategy, index, triggering)] = schedule
    attacked, _ = realtime_replay(schedule, schedule.triggers, day, home, profile)
    return attacked, schedule.source


def _run_cell_star(args: tuple[_DayCell, HomeModel, SweepConfig]) -> list[ImpactReport]:
    return _run_day_cell(*args)


def impact_sweep(
    home: HomeModel,
    days: Sequence[SensorTrace],
    config: SweepConfig,
    *,
    jobs: int = 1,
) -> list[ImpactReport]:
    """Cross every strategy, ADM, knowledge level, trigger setting and access profile.

    The defender's model is trained on every non-attacked day; the attacker's copy on all of
    them or on the first half. Stealth is judged against the defender's model.

    Args:
        home: Home model.
        days: One trace per day.
        config: Sweep document.
        jobs: Worker processes; cells are independent per (day, ADM, knowledge).

    Returns:
        Reports ordered by attacked day, ADM, knowledge, strategy, triggering, access.
    """

    train_days, _ = split_attack_days(days, config.attack_days)
    attack_indices = sorted({index % len(days) for index in config.attack_days})

    cells: list[_DayCell] = []
    for adm in config.adm:
        defender = train_knowledge(train_days, adm, "all", home)
        for knowledge in config.knowledge:
            attacker = defender if knowledge == "all" else train_knowledge(train_days, adm, knowledge, home)
            cells.extend(
                _DayCell(index, days[index], adm, knowledge, defender, attacker) for index in attack_indices
            )

    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_star, [(cell, home, config) for cell in cells]))
    else:
        results = [_run_day_cell(cell, home, config) for cell in cells]
    return [report for batch in results for report in batch]


def detection_labels(
    days: Sequence[SensorTrace], model: AdmModel, home: HomeModel, access: Optional[AccessProfile] = None
) -> tuple[list[bool], list[bool]]:
    """Flag each benign day and its naive-attack twin; returns (predicted, truth)."""

    predicted: list[bool] = []
    truth: list[bool] = []
    for day in days:
        predicted.append(detect(day, model).alarm_count > 0)
        truth.append(False)
        attacked, _ = naive_attack(day, home, access)
        predicted.append(detect(attacked, model).alarm_count > 0)
        truth.append(True)
    return predicted, truth


def adm_evaluation(
    home: HomeModel,
    train_days: Sequence[SensorTrace],
    test_days: Sequence[SensorTrace],
    adm_configs: Sequence[AdmConfig],
    knowledge_levels: Sequence[str] = KNOWLEDGE_LEVELS,
) -> pd.DataFrame:
    """Detection metrics per algorithm and knowledge level on benign and naive-attack days."""

    rows = []
    for adm in adm_configs:
        for knowledge in knowledge_levels:
            model = train_knowledge(train_days, adm, knowledge, home)
            metrics = confusion_metrics(*detection_labels(test_days, model, home))
            rows.append({"algorithm": adm.algorithm, "knowledge": knowledge, **metrics.as_dict()})
            logger.info("ADM %s (%s knowledge): f1=%.3f", adm.algorithm, knowledge, metrics.f1)
    return pd.DataFrame(rows, columns=ADM_EVAL_COLUMNS)


def progressive_evaluation(
    home: HomeModel,
    train_days: Sequence[SensorTrace],
    test_days: Sequence[SensorTrace],
    adm: AdmConfig,
    prefixes: Optional[Sequence[int]] = None,
) -> pd.DataFrame:
    """Retrain on growing prefixes of the training days and score each model."""

    prefixes = prefixes or range(1, len(train_days) + 1)
    rows = []
    for prefix in prefixes:
        model = train(train_days[:prefix], adm.algorithm, adm.hyperparameters(), slots_per_day=home.slots_per_day)
        metrics = confusion_metrics(*detection_labels(test_days, model, home))
        rows.append({"days": prefix, "algorithm": adm.algorithm, **metrics.as_dict()})
    return pd.DataFrame(rows, columns=PROGRESSIVE_COLUMNS)


def clone_zones(
    home: HomeModel, trace: SensorTrace, model: AdmModel, indoor_count: int
) -> tuple[HomeModel, SensorTrace, AdmModel, AccessProfile]:
    """Grow or restrict the attackable zones to ``indoor_count`` indoor zones.

    Extra zones copy an existing indoor zone with a larger volume, its activity profiles and
    its clusters; nobody is present in them, and their readings are re-simulated.
    """

    if indoor_count < 1:
        raise ValueError("indoor_count must be >= 1")
    indoor = list(home.indoor_zones())
    if not indoor:
        raise ValueError("The home has no indoor zone to clone.")
    zones = list(home.zones)
    activities = list(home.activities)
    clusters = dict(model.clusters)
    for k in range(max(0, indoor_count - len(indoor))):
        source = home.zones[indoor[k % len(indoor)]]
        new_id = len(zones)
        zones.append(
            Zone(
                id=new_id,
                name=f"{source.name}-clone{k + 1}",
                volume=source.volume * (1.0 + CLONE_VOLUME_STEP * (k + 1)),
                co2_setpoint=source.co2_setpoint,
                temp_setpoint=source.temp_setpoint,
                supply_air_temp=source.supply_air_temp,
                mixed_air_temp=source.mixed_air_temp,
                initial_co2=source.initial_co2,
                initial_temp=source.initial_temp,
            )
        )
        activities.extend(
            ActivityProfile(p.occupant, new_id, p.activity, p.co2_emission, p.heat_radiation, p.name)
            for p in home.activities
            if p.zone == source.id
        )
        for (occupant, zone), hulls in model.clusters.items():
            if zone == source.id:
                clusters[(occupant, new_id)] = tuple(replace(hull, zone=new_id) for hull in hulls)

    grown = replace(home, zones=tuple(zones), activities=tuple(activities))
    if len(zones) > home.n_zones:
        extra = len(zones) - home.n_zones
        initial_co2 = np.concatenate([trace.co2[0], [z.start_co2 for z in zones[home.n_zones :]]])
        initial_temp = np.concatenate([trace.temp[0], [z.start_temp for z in zones[home.n_zones :]]])
        co2, temp = propagate_iaq(
            grown,
            occupant_zone=trace.occupant_zone,
            activity=trace.activity,
            appliance_on=trace.appliance_on,
            outdoor_co2=trace.outdoor_co2,
            outdoor_temp=trace.outdoor_temp,
            initial_co2=initial_co2,
            initial_temp=initial_temp,
            fixed=np.column_stack([np.ones((trace.n_slots, home.n_zones), dtype=bool), np.zeros((trace.n_slots, extra), dtype=bool)]),
            fixed_co2=np.column_stack([trace.co2, np.zeros((trace.n_slots, extra))]),
            fixed_temp=np.column_stack([trace.temp, np.zeros((trace.n_slots, extra))]),
            slot_offset=trace.start_slot,
        )
        trace = trace.with_changes(co2=co2, temp=temp)
        model = replace(model, clusters=clusters, _tables={})
    attacked_zones = [0, *sorted(z.id for z in zones if not z.is_outside)[:indoor_count]]
    access = replace(AccessProfile.full(grown, trace.n_slots), zones=frozenset(attacked_zones), name=f"zones-{indoor_count}")
    return grown, trace, model, access


def search_nodes(
    context: ScheduleContext,
    window: int,
    *,
    node_budget: int,
    use_bound: bool = True,
) -> int:
    """Stitch windows over the context's trace and count the explored nodes."""

    carry = context.initial_carry()
    nodes = 0
    for spec in tile_windows(context.n_slots, window):
        result = optimize_window(spec, carry, context, node_budget=node_budget, use_bound=use_bound)
        nodes += result.nodes
        carry = result.carry
    return nodes


def _timed_point(
    axis: str,
    value: int,
    context: ScheduleContext,
    window: int,
    repetitions: int,
    node_budget: int,
) -> BenchPoint:
    timings: list[float] = []
    nodes = 0
    for run in range(WARMUP_RUNS + repetitions):
        started = time.perf_counter()
        try:
            nodes = search_nodes(context, window, node_budget=node_budget)
        except BudgetExceeded as exc:
            elapsed = (time.perf_counter() - started) * 1000.0
            logger.warning("Censored %s=%d after %d nodes: %s", axis, value, exc.nodes, exc)
            return BenchPoint(axis, value, elapsed, exc.nodes, -1, True, len(timings))
        if run >= WARMUP_RUNS:
            timings.append((time.perf_counter() - started) * 1000.0)
    try:
        unbounded = search_nodes(context, window, node_budget=node_budget, use_bound=False)
    except BudgetExceeded:
        unbounded = -1
    return BenchPoint(axis, value, float(np.median(timings)), nodes, unbounded, False, repetitions)


def scalability_bench(
    home: HomeModel,
    days: Sequence[SensorTrace],
    config: BenchConfig,
) -> list[BenchPoint]:
    """Time the windowed search over window lengths, then over attackable zone counts.

    The last day is attacked and the model is trained on the others; only the first
    ``config.horizon`` slots of the attacked day are scheduled.
    """

    if len(days) < 2:
        raise ValueError("A benchmark needs at least one training day and one attacked day.")
    model = train(days[:-1], config.adm.algorithm, config.adm.hyperparameters(), slots_per_day=home.slots_per_day)
    attacked = days[-1]
    attacked = attacked.window(0, min(config.horizon, attacked.n_slots))

    points: list[BenchPoint] = []
    context = ScheduleContext(attacked, home, model)
    for window in config.windows:
        point = _timed_point("window", window, context, window, config.repetitions, config.node_budget)
        logger.info("window=%d: %.3f ms, %d nodes", window, point.ms, point.nodes)
        points.append(point)
    for count in config.zone_counts:
        grown, trace, grown_model, access = clone_zones(home, attacked, model, count)
        context = ScheduleContext(trace, grown, grown_model, access)
        point = _timed_point("zones", count, context, config.zone_window, config.repetitions, config.node_budget)
        logger.info("zones=%d: %.3f ms, %d nodes", count, point.ms, point.nodes)
        points.append(point)
    return points


def impact_frame(reports: Sequence[ImpactReport]) -> pd.DataFrame:
    return pd.DataFrame([report.as_dict() for report in reports], columns=IMPACT_COLUMNS)


__all__ = [
    "ADM_EVAL_COLUMNS",
    "BENCH_COLUMNS",
    "IMPACT_COLUMNS",
    "KNOWLEDGE_LEVELS",
    "METRIC_COLUMNS",
    "PROGRESSIVE_COLUMNS",
    "STRATEGIES",
    "BenchPoint",
    "DetectionMetrics",
    "ImpactReport",
    "adm_evaluation",
    "clone_zones",
    "confusion_metrics",
    "detection_labels",
    "impact_frame",
    "impact_sweep",
    "naive_attack",
    "progressive_evaluation",
    "scalability_bench",
    "search_nodes",
    "split_attack_days",
    "split_days",
    "train_knowledge",
    "zone_cost_table",
]
