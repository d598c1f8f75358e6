"""Pydantic schemas for the JSON configuration files."""
from __future__ import annotations

from typing import Iterable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .core_model import (
    AccessProfile,
    ActivityProfile,
    Appliance,
    HomeModel,
    OccupantProfile,
    Tariff,
    Zone,
)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ZoneConfig(_Strict):
    id: int = Field(ge=0)
    name: str
    volume: float = Field(description="Zone volume in ft^3; ignored for the outside zone.")
    co2_setpoint: float = 800.0
    temp_setpoint: float = 75.0
    supply_air_temp: float = 55.0
    mixed_air_temp: float = 75.0
    initial_co2: Optional[float] = None
    initial_temp: Optional[float] = None


class OccupantConfig(_Strict):
    id: int = Field(ge=0)
    name: str


class ApplianceConfig(_Strict):
    id: int = Field(ge=0)
    name: str
    zone: int
    power_w: float
    heat_radiation_factor: float
    voice_triggerable: bool = False


class ActivityConfig(_Strict):
    occupant: int
    zone: int
    activity: int
    co2_emission: float
    heat_radiation: float
    name: str = ""


class TariffConfig(_Strict):
    offpeak_rate: float
    peak_rate: float
    battery_kwh: float = 0.0
    peak_start: Optional[int] = None
    peak_end: Optional[int] = None
    peak_slots: Optional[list[int]] = None

    @model_validator(mode="after")
    def one_peak_definition(self) -> "TariffConfig":
        has_window = self.peak_start is not None or self.peak_end is not None
        if has_window and self.peak_slots is not None:
            raise ValueError("give either peak_start/peak_end or peak_slots, not both")
        if has_window and (self.peak_start is None or self.peak_end is None):
            raise ValueError("peak_start and peak_end must be given together")
        if has_window and self.peak_end < self.peak_start:
            raise ValueError("peak_end must not precede peak_start")
        return self

    def resolved_peak_slots(self) -> frozenset[int]:
        if self.peak_slots is not None:
            return frozenset(self.peak_slots)
        if self.peak_start is None or self.peak_end is None:
            return frozenset()
        return frozenset(range(self.peak_start, self.peak_end))


class PhysicsConfig(_Strict):
    ventilation_form: Literal["verbatim", "corrected"] = "verbatim"


class HomeConfig(_Strict):
    name: str = "home"
    sampling_minutes: int = Field(default=1, ge=1)
    slots_per_day: int = Field(default=1440, ge=1)
    zones: list[ZoneConfig]
    occupants: list[OccupantConfig]
    appliances: list[ApplianceConfig] = Field(default_factory=list)
    activities: list[ActivityConfig] = Field(default_factory=list)
    tariff: TariffConfig
    physics: PhysicsConfig = Field(default_factory=PhysicsConfig)

    def to_home(self) -> HomeModel:
        """Convert the validated document into the frozen domain model."""

        return HomeModel(
            zones=tuple(Zone(**zone.model_dump()) for zone in sorted(self.zones, key=lambda z: z.id)),
            occupants=tuple(
                OccupantProfile(**occupant.model_dump())
                for occupant in sorted(self.occupants, key=lambda o: o.id)
            ),
            appliances=tuple(
                Appliance(**appliance.model_dump())
                for appliance in sorted(self.appliances, key=lambda a: a.id)
            ),
            activities=tuple(ActivityProfile(**activity.model_dump()) for activity in self.activities),
            tariff=Tariff(
                offpeak_rate=self.tariff.offpeak_rate,
                peak_rate=self.tariff.peak_rate,
                peak_slots=self.tariff.resolved_peak_slots(),
                battery_kwh=self.tariff.battery_kwh,
            ),
            sampling_minutes=self.sampling_minutes,
            slots_per_day=self.slots_per_day,
            ventilation_form=self.physics.ventilation_form,
            name=self.name,
        )


class DwellConfig(_Strict):
    """Either a dwell length range or an exit slot-of-day range."""

    range: Optional[tuple[int, int]] = None
    until: Optional[tuple[int, int]] = None

    @model_validator(mode="after")
    def exactly_one_bound(self) -> "DwellConfig":
        if (self.range is None) == (self.until is None):
            raise ValueError("dwell needs exactly one of 'range' or 'until'")
        low, high = self.range if self.range is not None else self.until
        if low > high:
            raise ValueError("dwell bounds must be ordered")
        if self.range is not None and low < 1:
            raise ValueError("dwell ranges must be positive")
        if self.until is not None and low < 0:
            raise ValueError("exit slots must be non-negative")
        return self


def _check_weight_rows(rows: dict[int, dict[int, float]]) -> dict[int, dict[int, float]]:
    for source, row in rows.items():
        if any(weight < 0 for weight in row.values()):
            raise ValueError(f"row {source} has a negative weight")
        if sum(row.values()) <= 0:
            raise ValueError(f"row {source} needs a positive sum")
    return rows


class BandConfig(_Strict):
    """Transition weights and dwell overrides for one time-of-day band."""

    start: int = Field(ge=0)
    end: int = Field(gt=0)
    transitions: dict[int, dict[int, float]] = Field(default_factory=dict)
    dwell: dict[int, DwellConfig] = Field(default_factory=dict)

    @field_validator("transitions")
    @classmethod
    def positive_transition_rows(cls, rows: dict[int, dict[int, float]]) -> dict[int, dict[int, float]]:
        return _check_weight_rows(rows)

    @model_validator(mode="after")
    def ordered_bounds(self) -> "BandConfig":
        if self.end <= self.start:
            raise ValueError("band end must follow its start")
        return self


class OccupantRoutineConfig(_Strict):
    occupant: int
    start_zone: int
    bands: list[BandConfig]


class SynthConfigModel(_Strict):
    seed: int = 0
    outdoor_co2: float = 400.0
    outdoor_temp_mean: float = 85.0
    outdoor_temp_amplitude: float = 8.0
    routines: list[OccupantRoutineConfig]
    zone_dwell: dict[int, DwellConfig] = Field(default_factory=dict)
    activity_weights: dict[int, dict[int, float]] = Field(default_factory=dict)
    activity_appliances: dict[int, list[int]] = Field(default_factory=dict)
    always_on: list[int] = Field(default_factory=list)

    @field_validator("activity_weights")
    @classmethod
    def positive_activity_rows(cls, rows: dict[int, dict[int, float]]) -> dict[int, dict[int, float]]:
        return _check_weight_rows(rows)


class DbscanParams(_Strict):
    eps: float = Field(default=3.0, gt=0)
    min_pts: int = Field(default=30, ge=1)


class KmeansParams(_Strict):
    k: int = Field(default=29, ge=1)
    seed: int = 0


class AdmConfig(_Strict):
    algorithm: Literal["dbscan", "kmeans"] = "dbscan"
    dbscan: DbscanParams = Field(default_factory=DbscanParams)
    kmeans: KmeansParams = Field(default_factory=KmeansParams)

    def hyperparameters(self) -> dict[str, float]:
        if self.algorithm == "dbscan":
            return self.dbscan.model_dump()
        return self.kmeans.model_dump()


class AccessConfig(_Strict):
    """Access profile; omitted members mean "everything"."""

    name: str = "full"
    zones: Optional[list[int]] = None
    slots: Optional[list[tuple[int, int]]] = Field(
        default=None, description="Half-open slot-of-day ranges repeated every day."
    )
    occupant_tags: Optional[list[int]] = None
    appliances: Optional[list[int]] = None

    def to_profile(self, home: HomeModel, n_slots: int, *, start_slot: int = 0) -> AccessProfile:
        """Expand the document over a trace of ``n_slots`` slots starting at ``start_slot``."""

        slot_of_day = (start_slot + np.arange(n_slots)) % home.slots_per_day
        if self.slots is None:
            slots = frozenset(range(n_slots))
        else:
            mask = np.zeros(n_slots, dtype=bool)
            for low, high in self.slots:
                mask |= (slot_of_day >= low) & (slot_of_day < high)
            slots = frozenset(int(t) for t in np.flatnonzero(mask))

        def members(values: Optional[list[int]], everything: Iterable[int]) -> frozenset[int]:
            return frozenset(everything if values is None else values)

        return AccessProfile(
            zones=members(self.zones, (zone.id for zone in home.zones)),
            slots=slots,
            occupant_tags=members(self.occupant_tags, (occupant.id for occupant in home.occupants)),
            appliances=members(self.appliances, (appliance.id for appliance in home.appliances)),
            name=self.name,
        )


class SearchConfig(_Strict):
    window: int = Field(default=10, ge=1)
    node_budget: int = Field(default=2_000_000, ge=1)
    strict_budget: bool = False


class SweepConfig(_Strict):
    home: str
    synth: str
    days: int = Field(default=30, ge=2)
    attack_days: list[int] = Field(default_factory=lambda: [-1])
    seed: int = 0
    strategies: list[Literal["benign", "naive", "greedy", "windowed"]] = Field(
        default_factory=lambda: ["benign", "naive", "greedy", "windowed"]
    )
    adm: list[AdmConfig] = Field(default_factory=lambda: [AdmConfig()], min_length=1)
    knowledge: list[Literal["all", "partial"]] = Field(default_factory=lambda: ["all"])
    triggering: list[bool] = Field(default_factory=lambda: [False, True])
    access: list[AccessConfig] = Field(default_factory=lambda: [AccessConfig()])
    search: SearchConfig = Field(default_factory=SearchConfig)


class BenchConfig(_Strict):
    home: str
    synth: str
    days: int = Field(default=3, ge=2)
    seed: int = 0
    windows: list[int] = Field(default_factory=lambda: [4, 6, 8, 10])
    zone_counts: list[int] = Field(default_factory=lambda: [2, 3, 4, 5, 6])
    zone_window: int = Field(default=4, ge=1)
    repetitions: int = Field(default=5, ge=1)
    horizon: int = Field(default=120, ge=1, description="Slots of the attacked day that are benchmarked.")
    adm: AdmConfig = Field(default_factory=AdmConfig)
    node_budget: int = Field(default=5_000_000, ge=1)


__all__ = [
    "AccessConfig",
    "ActivityConfig",
    "AdmConfig",
    "ApplianceConfig",
    "BandConfig",
    "BenchConfig",
    "DbscanParams",
    "DwellConfig",
    "HomeConfig",
    "KmeansParams",
    "OccupantConfig",
    "OccupantRoutineConfig",
    "PhysicsConfig",
    "SearchConfig",
    "SweepConfig",
    "SynthConfigModel",
    "TariffConfig",
    "ZoneConfig",
]
