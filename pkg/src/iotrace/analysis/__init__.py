from .histogram import RuntimeHistogram, SpeedCategory, hist_categorize, hist_learn
from .phases import Phase, detect_phases, phases_by_stream
from .reasoner import AnomalySignal, HealthReport, Scope, reason
from .screening import JobStatsRow, ScreeningRule, parse_rule, screen_jobs
from .survey import AccessClass, SurveyTable, classify_access, survey_report, survey_update

__all__ = [
    "AccessClass",
    "AnomalySignal",
    "HealthReport",
    "JobStatsRow",
    "Phase",
    "RuntimeHistogram",
    "Scope",
    "ScreeningRule",
    "SpeedCategory",
    "SurveyTable",
    "classify_access",
    "detect_phases",
    "hist_categorize",
    "hist_learn",
    "parse_rule",
    "phases_by_stream",
    "reason",
    "screen_jobs",
    "survey_report",
    "survey_update",
]
