"""Service layer public API exports."""
from .adm_service import AdmModel, detect, max_stay, min_stay, sweep_hyperparameters, train
from .attack_service import (
    AttackSchedule,
    StealthVerdict,
    TriggerPlan,
    apply_fdi,
    attack_cost,
    realtime_replay,
    trigger_decision,
    verify_stealth,
)
from .controller_service import billing, propagate_iaq, simulate, zone_airflow
from .evaluation_service import (
    BenchPoint,
    ImpactReport,
    adm_evaluation,
    confusion_metrics,
    impact_sweep,
    naive_attack,
    progressive_evaluation,
    scalability_bench,
    zone_cost_table,
)
from .scheduling_service import (
    ScheduleContext,
    explain_schedule,
    greedy_schedule,
    optimize_window,
    schedule_value,
    windowed_schedule,
)
from .synthesis_service import synth_trace

__all__ = [
    "AdmModel",
    "AttackSchedule",
    "BenchPoint",
    "ImpactReport",
    "ScheduleContext",
    "StealthVerdict",
    "TriggerPlan",
    "adm_evaluation",
    "apply_fdi",
    "attack_cost",
    "billing",
    "confusion_metrics",
    "detect",
    "explain_schedule",
    "greedy_schedule",
    "impact_sweep",
    "max_stay",
    "min_stay",
    "naive_attack",
    "optimize_window",
    "progressive_evaluation",
    "propagate_iaq",
    "realtime_replay",
    "scalability_bench",
    "schedule_value",
    "simulate",
    "sweep_hyperparameters",
    "synth_trace",
    "train",
    "trigger_decision",
    "verify_stealth",
    "windowed_schedule",
    "zone_airflow",
]
