"""Clustering-based anomaly detection over (arrival, stay-duration) events."""
from __future__ import annotations

import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.cluster import DBSCAN, KMeans
from sklearn.metrics import calinski_harabasz_score, davies_bouldin_score, silhouette_score

from ..core_model import DegenerateCluster, SensorTrace, UndefinedMetric
from ..utils.hull import Vertex, hull_contains, quickhull, rectangle_hull, within_hull

logger = logging.getLogger(__name__)

ALGORITHMS = ("dbscan", "kmeans")
DEFAULT_DBSCAN = {"eps": 3.0, "min_pts": 30}
DEFAULT_KMEANS = {"k": 29, "seed": 0}
MODEL_FORMAT_VERSION = 1

PairKey = tuple[int, int]


@dataclass(frozen=True)
class PresenceRun:
    """A maximal run of one occupant in one zone, possibly cut by the trace edges."""

    occupant: int
    zone: int
    start: int
    end: int
    arrival_observed: bool
    exit_observed: bool

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class StayEvent:
    occupant: int
    zone: int
    arrival: int
    exit: int
    arrival_of_day: int

    @property
    def duration(self) -> int:
        return self.exit - self.arrival

    @property
    def feature(self) -> tuple[int, int]:
        return (self.arrival_of_day, self.duration)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "occupant": self.occupant,
            "zone": self.zone,
            "arrival": self.arrival,
            "exit": self.exit,
            "arrival_of_day": self.arrival_of_day,
            "duration": self.duration,
        }


@dataclass(frozen=True)
class HullCluster:
    occupant: int
    zone: int
    vertices: tuple[Vertex, ...]
    degenerate: bool = False
    size: int = 0

    def contains(self, t1: float, t2: float) -> bool:
        return within_hull(t1, t2, self.vertices)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "occupant": self.occupant,
            "zone": self.zone,
            "vertices": [list(vertex) for vertex in self.vertices],
            "degenerate": self.degenerate,
            "size": self.size,
        }


@dataclass(frozen=True)
class ClusterFit:
    labels: np.ndarray
    centers: Optional[np.ndarray] = None
    inertia: Optional[float] = None

    @property
    def noise_count(self) -> int:
        return int(np.sum(self.labels < 0))

    @property
    def n_clusters(self) -> int:
        return len({int(label) for label in self.labels if label >= 0})


@dataclass(frozen=True)
class ClusterQuality:
    dbi: float
    sc: float
    chi: float

    def as_dict(self) -> Dict[str, float]:
        return {"dbi": self.dbi, "sc": self.sc, "chi": self.chi}


@dataclass(frozen=True)
class TrainingSummary:
    days: float
    events: int
    point_counts: Mapping[PairKey, int]
    noise_count: int
    degenerate_count: int

    def as_dict(self) -> Dict[str, Any]:
        return {
            "days": self.days,
            "events": self.events,
            "point_counts": [[o, z, n] for (o, z), n in sorted(self.point_counts.items())],
            "noise_count": self.noise_count,
            "degenerate_count": self.degenerate_count,
        }


@dataclass(frozen=True)
class AdmModel:
    """Trained detector: convex hulls per (occupant, zone) pair."""

    algorithm: str
    hyperparameters: Mapping[str, float]
    clusters: Mapping[PairKey, tuple[HullCluster, ...]]
    summary: TrainingSummary
    slots_per_day: int
    duration_ceiling: int
    _tables: Dict[PairKey, np.ndarray] = field(default_factory=dict, compare=False, repr=False)

    def clusters_for(self, occupant: int, zone: int) -> tuple[HullCluster, ...]:
        return tuple(self.clusters.get((occupant, zone), ()))

    def feasible_table(self, occupant: int, zone: int) -> np.ndarray:
        """Boolean table [arrival slot-of-day, duration] of in-cluster stays."""

        key = (occupant, zone)
        table = self._tables.get(key)
        if table is None:
            table = _build_feasible_table(
                self.clusters_for(occupant, zone), self.slots_per_day, self.duration_ceiling
            )
            table.setflags(write=False)
            self._tables[key] = table
        return table

    def as_dict(self) -> Dict[str, Any]:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "algorithm": self.algorithm,
            "hyperparameters": dict(self.hyperparameters),
            "slots_per_day": self.slots_per_day,
            "duration_ceiling": self.duration_ceiling,
            "summary": self.summary.as_dict(),
            "clusters": [
                cluster.as_dict()
                for key in sorted(self.clusters)
                for cluster in self.clusters[key]
            ],
        }


@dataclass(frozen=True)
class Alarm:
    occupant: int
    zone: int
    arrival: int
    duration: int
    arrival_of_day: int

    def as_dict(self) -> Dict[str, Any]:
        return {
            "occupant": self.occupant,
            "zone": self.zone,
            "arrival": self.arrival,
            "duration": self.duration,
            "arrival_of_day": self.arrival_of_day,
        }


@dataclass(frozen=True)
class DetectionResult:
    alarms: tuple[Alarm, ...]
    events: tuple[StayEvent, ...]
    flags: tuple[bool, ...]

    @property
    def alarm_count(self) -> int:
        return len(self.alarms)

    def to_frame(self) -> pd.DataFrame:
        columns = ["occupant", "zone", "arrival", "duration", "arrival_of_day"]
        return pd.DataFrame([alarm.as_dict() for alarm in self.alarms], columns=columns)


def _build_feasible_table(
    clusters: Sequence[HullCluster], slots_per_day: int, ceiling: int
) -> np.ndarray:
    table = np.zeros((slots_per_day, ceiling + 1), dtype=bool)
    if not clusters:
        return table
    arrivals, durations = np.meshgrid(
        np.arange(slots_per_day, dtype=float), np.arange(ceiling + 1, dtype=float), indexing="ij"
    )
    grid = np.column_stack([arrivals.ravel(), durations.ravel()])
    inside = np.zeros(len(grid), dtype=bool)
    for cluster in clusters:
        inside |= hull_contains(cluster.vertices, grid)
    table = inside.reshape(table.shape)
    # a stay lasts at least one slot past its arrival
    table[:, 0] = False
    return table


def presence_runs(trace: SensorTrace) -> list[PresenceRun]:
    """Every maximal presence run, flagged by whether its arrival and exit were observed."""

    runs: list[PresenceRun] = []
    last = trace.n_slots - 1
    for occupant in range(trace.n_occupants):
        column = trace.occupant_zone[:, occupant]
        if column.size == 0:
            continue
        changes = np.flatnonzero(np.diff(column) != 0) + 1
        starts = np.concatenate([[0], changes])
        ends = np.concatenate([changes - 1, [last]])
        for start, end in zip(starts, ends):
            runs.append(
                PresenceRun(
                    occupant=occupant,
                    zone=int(column[start]),
                    start=int(start),
                    end=int(end),
                    arrival_observed=bool(start > 0),
                    exit_observed=bool(end < last),
                )
            )
    return runs


def extract_stay_events(trace: SensorTrace, *, slots_per_day: int = 1440) -> list[StayEvent]:
    """Completed stays: runs whose arrival and exit both happen inside the trace.

    A one-slot run is a pass-through (exit equals arrival) and yields no event.
    """

    return [
        StayEvent(
            occupant=run.occupant,
            zone=run.zone,
            arrival=run.start,
            exit=run.end,
            arrival_of_day=(trace.start_slot + run.start) % slots_per_day,
        )
        for run in presence_runs(trace)
        if run.arrival_observed and run.exit_observed and run.end > run.start
    ]


def within_cluster(t1: float, t2: float, clusters: Sequence[HullCluster]) -> bool:
    """True when (t1, t2) lies inside-or-on at least one hull."""

    return any(cluster.contains(t1, t2) for cluster in clusters)


def dbscan_fit(points: Any, eps: float = DEFAULT_DBSCAN["eps"], min_pts: int = DEFAULT_DBSCAN["min_pts"]) -> ClusterFit:
    """Density clustering; label -1 marks noise."""

    if eps <= 0 or min_pts < 1:
        raise ValueError(f"DBSCAN needs eps > 0 and min_pts >= 1; got eps={eps}, min_pts={min_pts}.")
    array = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(array) == 0:
        return ClusterFit(labels=np.zeros(0, dtype=int))
    labels = DBSCAN(eps=eps, min_samples=min_pts).fit_predict(array)
    return ClusterFit(labels=labels.astype(int))


def farthest_point_seeds(points: np.ndarray, k: int) -> np.ndarray:
    """Pick ``k`` seeds: point 0 first, then repeatedly the farthest from the chosen set."""

    chosen = [0]
    distance = np.linalg.norm(points - points[0], axis=1)
    while len(chosen) < k:
        # argmax returns the lowest index among ties
        index = int(np.argmax(distance))
        chosen.append(index)
        distance = np.minimum(distance, np.linalg.norm(points - points[index], axis=1))
    return points[chosen].copy()


def kmeans_fit(points: Any, k: int = DEFAULT_KMEANS["k"], seed: int = DEFAULT_KMEANS["seed"]) -> ClusterFit:
    """Lloyd iteration to an assignment fixpoint from farthest-point seeds."""

    array = np.asarray(points, dtype=float).reshape(-1, 2)
    if k < 1 or k > len(array):
        raise ValueError(f"k must lie in [1, {len(array)}]; got {k}.")
    model = KMeans(
        n_clusters=k,
        init=farthest_point_seeds(array, k),
        n_init=1,
        max_iter=1000,
        tol=0.0,
        algorithm="lloyd",
        random_state=seed,
    )
    labels = model.fit_predict(array)
    return ClusterFit(labels=labels.astype(int), centers=model.cluster_centers_, inertia=float(model.inertia_))


def cluster_quality(points: Any, labels: Any) -> ClusterQuality:
    """Davies-Bouldin, silhouette and Calinski-Harabasz scores; noise points are ignored.

    Raises:
        UndefinedMetric: If fewer than two clusters remain, or every point is its own cluster.
    """

    array = np.asarray(points, dtype=float).reshape(-1, 2)
    label_array = np.asarray(labels, dtype=int)
    keep = label_array >= 0
    array, label_array = array[keep], label_array[keep]
    n_labels = len(np.unique(label_array))
    if n_labels < 2:
        raise UndefinedMetric(f"Cluster quality needs at least two clusters; got {n_labels}.")
    if n_labels >= len(array):
        raise UndefinedMetric("Cluster quality needs fewer clusters than points.")
    return ClusterQuality(
        dbi=float(davies_bouldin_score(array, label_array)),
        sc=float(silhouette_score(array, label_array)),
        chi=float(calinski_harabasz_score(array, label_array)),
    )


def rank_quality(frame: pd.DataFrame) -> pd.DataFrame:
    """Add per-metric ranks and a combined rank (1 is best) to a quality table."""

    ranked = frame.copy()
    ranked["sc_rank"] = ranked["sc"].rank(ascending=False, method="min")
    ranked["chi_rank"] = ranked["chi"].rank(ascending=False, method="min")
    ranked["dbi_rank"] = ranked["dbi"].rank(ascending=True, method="min")
    ranked["combined_rank"] = (
        ranked[["sc_rank", "chi_rank", "dbi_rank"]].sum(axis=1).rank(method="min")
    )
    return ranked.sort_values(["combined_rank"], kind="mergesort").reset_index(drop=True)


def _collect_points(
    traces: Iterable[SensorTrace], slots_per_day: int
) -> tuple[dict[PairKey, list[tuple[int, int]]], int, float]:
    points: dict[PairKey, list[tuple[int, int]]] = defaultdict(list)
    events = 0
    slots = 0
    for trace in traces:
        slots += trace.n_slots
        for event in extract_stay_events(trace, slots_per_day=slots_per_day):
            points[(event.occupant, event.zone)].append(event.feature)
            events += 1
    return points, events, slots / slots_per_day


def _fit_pair(points: np.ndarray, algorithm: str, params: Mapping[str, float]) -> ClusterFit:
    if algorithm == "dbscan":
        return dbscan_fit(points, float(params["eps"]), int(params["min_pts"]))
    k = min(int(params["k"]), len(points))
    return kmeans_fit(points, k, int(params.get("seed", 0)))


def _hull_for(occupant: int, zone: int, members: np.ndarray) -> HullCluster:
    try:
        vertices = quickhull(members)
        degenerate = False
    except DegenerateCluster:
        vertices = rectangle_hull(members)
        degenerate = True
        logger.debug("Degenerate cluster for occupant %d zone %d; using rectangle.", occupant, zone)
    return HullCluster(occupant, zone, vertices, degenerate=degenerate, size=len(members))


def resolve_hyperparameters(algorithm: str, hyperparams: Optional[Mapping[str, float]]) -> dict[str, float]:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"Unknown ADM algorithm {algorithm!r}; expected one of {ALGORITHMS}.")
    defaults = DEFAULT_DBSCAN if algorithm == "dbscan" else DEFAULT_KMEANS
    resolved = dict(defaults)
    resolved.update(hyperparams or {})
    return resolved


def train(
    traces: Sequence[SensorTrace],
    algorithm: str = "dbscan",
    hyperparams: Optional[Mapping[str, float]] = None,
    *,
    slots_per_day: int = 1440,
) -> AdmModel:
    """Fit one clustering per (occupant, zone) pair and wrap each cluster in a hull.

    Args:
        traces: Benign training traces.
        algorithm: ``"dbscan"`` or ``"kmeans"``.
        hyperparams: ``eps``/``min_pts`` or ``k``/``seed``; missing keys use defaults.
        slots_per_day: Day length used to fold arrivals to slot-of-day.

    Returns:
        The trained model with a training summary.
    """

    params = resolve_hyperparameters(algorithm, hyperparams)
    pair_points, event_count, days = _collect_points(traces, slots_per_day)

    clusters: dict[PairKey, tuple[HullCluster, ...]] = {}
    noise = 0
    degenerate = 0
    max_duration = 0
    for (occupant, zone), features in sorted(pair_points.items()):
        points = np.asarray(features, dtype=float)
        max_duration = max(max_duration, int(points[:, 1].max()))
        fit = _fit_pair(points, algorithm, params)
        noise += fit.noise_count
        hulls = []
        for label in sorted({int(value) for value in fit.labels if value >= 0}):
            hull = _hull_for(occupant, zone, points[fit.labels == label])
            degenerate += int(hull.degenerate)
            hulls.append(hull)
        if hulls:
            clusters[(occupant, zone)] = tuple(hulls)
        logger.info(
            "Trained occupant %d zone %d: %d points, %d clusters, %d noise",
            occupant,
            zone,
            len(points),
            len(hulls),
            fit.noise_count,
        )

    summary = TrainingSummary(
        days=days,
        events=event_count,
        point_counts={key: len(value) for key, value in pair_points.items()},
        noise_count=noise,
        degenerate_count=degenerate,
    )
    return AdmModel(
        algorithm=algorithm,
        hyperparameters=params,
        clusters=clusters,
        summary=summary,
        slots_per_day=slots_per_day,
        duration_ceiling=max_duration + 1,
    )


def model_from_hulls(
    hulls: Sequence[HullCluster],
    *,
    slots_per_day: int = 1440,
    algorithm: str = "dbscan",
    hyperparameters: Optional[Mapping[str, float]] = None,
    duration_ceiling: Optional[int] = None,
) -> AdmModel:
    """Assemble a model from explicit hulls; the ceiling defaults to the tallest vertex + 1."""

    grouped: dict[PairKey, list[HullCluster]] = defaultdict(list)
    for hull in hulls:
        grouped[(hull.occupant, hull.zone)].append(hull)
    if duration_ceiling is None:
        tallest = max((y for hull in hulls for _, y in hull.vertices), default=0.0)
        duration_ceiling = int(np.floor(tallest)) + 1
    return AdmModel(
        algorithm=algorithm,
        hyperparameters=dict(hyperparameters or resolve_hyperparameters(algorithm, None)),
        clusters={key: tuple(value) for key, value in grouped.items()},
        summary=TrainingSummary(days=0.0, events=0, point_counts={}, noise_count=0, degenerate_count=0),
        slots_per_day=slots_per_day,
        duration_ceiling=duration_ceiling,
    )


def model_from_dict(payload: Mapping[str, Any]) -> AdmModel:
    """Rebuild a model from its ``as_dict`` form."""

    version = payload.get("format_version", MODEL_FORMAT_VERSION)
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"Unsupported model format version {version}.")
    hulls = [
        HullCluster(
            occupant=int(item["occupant"]),
            zone=int(item["zone"]),
            vertices=tuple((float(x), float(y)) for x, y in item["vertices"]),
            degenerate=bool(item.get("degenerate", False)),
            size=int(item.get("size", 0)),
        )
        for item in payload["clusters"]
    ]
    model = model_from_hulls(
        hulls,
        slots_per_day=int(payload["slots_per_day"]),
        algorithm=str(payload["algorithm"]),
        hyperparameters=payload["hyperparameters"],
        duration_ceiling=int(payload["duration_ceiling"]),
    )
    summary = payload.get("summary", {})
    restored = TrainingSummary(
        days=float(summary.get("days", 0.0)),
        events=int(summary.get("events", 0)),
        point_counts={(int(o), int(z)): int(n) for o, z, n in summary.get("point_counts", [])},
        noise_count=int(summary.get("noise_count", 0)),
        degenerate_count=int(summary.get("degenerate_count", 0)),
    )
    return AdmModel(
        algorithm=model.algorithm,
        hyperparameters=model.hyperparameters,
        clusters=model.clusters,
        summary=restored,
        slots_per_day=model.slots_per_day,
        duration_ceiling=model.duration_ceiling,
    )


def _slot_of_day(t: int, model: AdmModel) -> int:
    return int(t) % model.slots_per_day


def feasible_durations(t: int, occupant: int, zone: int, model: AdmModel) -> np.ndarray:
    """Durations d >= 1 up to the ceiling with (t, d) inside a hull."""

    row = model.feasible_table(occupant, zone)[_slot_of_day(t, model)]
    return np.flatnonzero(row[1:]) + 1


def max_stay(t: int, occupant: int, zone: int, model: AdmModel) -> Optional[int]:
    """Longest in-cluster stay for an arrival at slot-of-day ``t``; None if there is none."""

    durations = feasible_durations(t, occupant, zone, model)
    return int(durations[-1]) if durations.size else None


def min_stay(t: int, occupant: int, zone: int, model: AdmModel) -> Optional[int]:
    durations = feasible_durations(t, occupant, zone, model)
    return int(durations[0]) if durations.size else None


def in_range_stay(t: int, occupant: int, zone: int, d: int, model: AdmModel) -> bool:
    if d < 1:
        return False
    if d <= model.duration_ceiling:
        return bool(model.feasible_table(occupant, zone)[_slot_of_day(t, model), d])
    return within_cluster(_slot_of_day(t, model), d, model.clusters_for(occupant, zone))


def consistent_events(
    events: Iterable[StayEvent], model: AdmModel
) -> tuple[bool, list[StayEvent]]:
    violations = [
        event
        for event in events
        if not in_range_stay(event.arrival_of_day, event.occupant, event.zone, event.duration, model)
    ]
    return (not violations, violations)


def consistent(trace: SensorTrace, model: AdmModel) -> tuple[bool, list[StayEvent]]:
    """Check every completed stay of a trace against the model."""

    return consistent_events(extract_stay_events(trace, slots_per_day=model.slots_per_day), model)


def detect(trace: SensorTrace, model: AdmModel) -> DetectionResult:
    """Raise one alarm per stay that falls outside every hull."""

    events = extract_stay_events(trace, slots_per_day=model.slots_per_day)
    flags = tuple(
        not in_range_stay(event.arrival_of_day, event.occupant, event.zone, event.duration, model)
        for event in events
    )
    alarms = tuple(
        Alarm(event.occupant, event.zone, event.arrival, event.duration, event.arrival_of_day)
        for event, flagged in zip(events, flags)
        if flagged
    )
    return DetectionResult(alarms=alarms, events=tuple(events), flags=flags)


def sweep_hyperparameters(
    traces: Sequence[SensorTrace],
    algorithm: str,
    grid: Mapping[str, Sequence[float]],
    *,
    slots_per_day: int = 1440,
) -> pd.DataFrame:
    """Grid-search clustering hyperparameters and rank them by DBI/SC/CHI.

    Scores are averaged over the (occupant, zone) pairs where they are defined.
    """

    pair_points, _, _ = _collect_points(traces, slots_per_day)
    names = sorted(grid)
    rows: list[dict[str, Any]] = []
    for values in itertools.product(*(grid[name] for name in names)):
        params = resolve_hyperparameters(algorithm, dict(zip(names, values)))
        scores: list[ClusterQuality] = []
        clusters = 0
        noise = 0
        for _, features in sorted(pair_points.items()):
            points = np.asarray(features, dtype=float)
            fit = _fit_pair(points, algorithm, params)
            clusters += fit.n_clusters
            noise += fit.noise_count
            try:
                scores.append(cluster_quality(points, fit.labels))
            except UndefinedMetric:
                continue
        row: dict[str, Any] = dict(zip(names, values))
        row.update(
            {
                "clusters": clusters,
                "noise": noise,
                "scored_pairs": len(scores),
                "dbi": float(np.mean([s.dbi for s in scores])) if scores else np.nan,
                "sc": float(np.mean([s.sc for s in scores])) if scores else np.nan,
                "chi": float(np.mean([s.chi for s in scores])) if scores else np.nan,
            }
        )
        rows.append(row)
    frame = pd.DataFrame(rows)
    if frame.empty:
        return frame
    return rank_quality(frame)


__all__ = [
    "ALGORITHMS",
    "DEFAULT_DBSCAN",
    "DEFAULT_KMEANS",
    "AdmModel",
    "Alarm",
    "ClusterFit",
    "ClusterQuality",
    "DetectionResult",
    "HullCluster",
    "PresenceRun",
    "StayEvent",
    "TrainingSummary",
    "cluster_quality",
    "consistent",
    "consistent_events",
    "dbscan_fit",
    "detect",
    "extract_stay_events",
    "farthest_point_seeds",
    "feasible_durations",
    "in_range_stay",
    "kmeans_fit",
    "max_stay",
    "min_stay",
    "model_from_dict",
    "model_from_hulls",
    "presence_runs",
    "rank_quality",
    "resolve_hyperparameters",
    "sweep_hyperparameters",
    "train",
    "within_cluster",
]
