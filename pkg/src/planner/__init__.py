"""
Inference-time planning: the necessity check, candidate selection for both
modules, affordance maps and the closed-loop push-then-grasp controller.
"""

from .loop import (
    GRASP_DECISION,
    PUSH,
    TRACE_SCHEMA_VERSION,
    PlanStep,
    PlanTrace,
    PushPolicy,
    camera_seed,
    closed_loop,
    module_push_policy,
    save_trace,
    trace_from_json,
    trace_to_json,
)
from .select import (
    NecessityResult,
    Selection,
    affordance_map,
    as_net,
    best_candidate,
    necessity_check,
    propose_grasp,
    propose_pregrasp,
    select_action,
)

__all__ = [
    # selection
    "NecessityResult",
    "Selection",
    "necessity_check",
    "propose_pregrasp",
    "propose_grasp",
    "select_action",
    "best_candidate",
    "affordance_map",
    "as_net",
    # closed loop
    "PUSH",
    "GRASP_DECISION",
    "TRACE_SCHEMA_VERSION",
    "PlanStep",
    "PlanTrace",
    "PushPolicy",
    "closed_loop",
    "module_push_policy",
    "camera_seed",
    # traces
    "trace_to_json",
    "trace_from_json",
    "save_trace",
]
