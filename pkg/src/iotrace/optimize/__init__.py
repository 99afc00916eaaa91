from .activities import workload_activities
from .hints import HintKey, HintSet, HistoryStore, PerfRecord, best_hints, history_observe
from .readahead import ReadAheadAdvice, ReadAheadAdvisor, StreamTracker, track_and_advise
from .sieving import SieveCycle, apply_data_sieving
from .storage import (
    StorageModel,
    StreamResult,
    WorkloadResult,
    calibrate,
    default_model,
    hint_multiplier,
    simulate,
    simulate_workload,
)
from .workload import IOAccess, WorkloadSpec, gen_strided, gen_workload

__all__ = [
    "HintKey",
    "HintSet",
    "HistoryStore",
    "IOAccess",
    "PerfRecord",
    "ReadAheadAdvice",
    "ReadAheadAdvisor",
    "SieveCycle",
    "StorageModel",
    "StreamResult",
    "StreamTracker",
    "WorkloadResult",
    "WorkloadSpec",
    "apply_data_sieving",
    "best_hints",
    "calibrate",
    "default_model",
    "gen_strided",
    "gen_workload",
    "hint_multiplier",
    "history_observe",
    "simulate",
    "simulate_workload",
    "track_and_advise",
    "workload_activities",
]
