"""
Evaluation protocol: trial scene sampling, the five baselines, success-rate
reports and the necessity-threshold compatibility sweep.
"""

from .baselines import (
    BASELINES,
    CENTER_POINT,
    NO_PREGRASP,
    OURS,
    OURS_NO_CLOSED_LOOP,
    RANDOM_DIRECTION,
    center_point_index,
    direct_grasp,
    randomize_direction,
    run_baseline,
)
from .harness import EvalSpec, compatibility_sweep, run_eval
from .report import (
    CSV_FIELDS,
    EvalCell,
    EvalReport,
    SweepRow,
    half_width,
    report_table,
    report_to_csv,
    report_to_json,
    save_report,
    save_sweep,
    sweep_table,
    sweep_to_json,
)
from .trials import sample_trial_state, trial_assets

__all__ = [
    # baselines
    "BASELINES",
    "NO_PREGRASP",
    "RANDOM_DIRECTION",
    "CENTER_POINT",
    "OURS_NO_CLOSED_LOOP",
    "OURS",
    "run_baseline",
    "direct_grasp",
    "center_point_index",
    "randomize_direction",
    # runs
    "EvalSpec",
    "run_eval",
    "compatibility_sweep",
    "sample_trial_state",
    "trial_assets",
    # reports
    "CSV_FIELDS",
    "EvalCell",
    "EvalReport",
    "SweepRow",
    "half_width",
    "report_to_json",
    "report_to_csv",
    "report_table",
    "save_report",
    "sweep_to_json",
    "sweep_table",
    "save_sweep",
]
