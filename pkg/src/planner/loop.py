"""
Closed-loop push-then-reassess controller and its JSON trace.

Each iteration renders a fresh cloud, estimates the grasp score and either
grasps (terminal) or pushes. After max_iterations pushes the grasp is
attempted anyway and marked as forced. A push that triggers a safety event
aborts the trace. Simulator errors never escape the loop: they are stored
on the step that raised them.
"""

import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np

from src.cloudgen import LabeledPointCloud, observe
from src.config import RunConfig, config_hash
from src.errors import PregraspError
from src.logger import log_function
from src.nets import GRASP, PREGRASP, ModuleNet, ModuleWeights, encode
from src.scenesim import (
    GraspAction,
    PreGraspAction,
    SafetyEvent,
    SceneState,
    apply_push,
    grasp_outcome,
    state_to_json,
)
from src.storage import BaseStorage, LocalStorage

from .select import as_net, necessity_check, select_action

logger = logging.getLogger("planner")

TRACE_SCHEMA_VERSION = 1

PUSH = "push"
GRASP_DECISION = "grasp"

# (cloud, seed) -> push to execute
PushPolicy = Callable[[LabeledPointCloud, Any], PreGraspAction]


@dataclass
class PlanStep:
    decision: str  # push | grasp
    c2_hat: Optional[float] = None
    action: Optional[PreGraspAction | GraspAction] = None
    safety: SafetyEvent = SafetyEvent.NONE
    slip: Optional[float] = None
    rotation: Optional[tuple[float, float, float]] = None
    r: Optional[int] = None
    forced: bool = False
    error: Optional[str] = None


@dataclass
class PlanTrace:
    """Ordered steps of one planning episode and its terminal grasp result."""

    steps: list[PlanStep] = field(default_factory=list)
    r: int = 0
    aborted: bool = False
    error: Optional[str] = None
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def pushes(self) -> int:
        return sum(step.decision == PUSH for step in self.steps)

    @property
    def pushed(self) -> bool:
        return self.pushes > 0

    @property
    def forced(self) -> bool:
        return any(step.forced for step in self.steps)

    @property
    def success(self) -> bool:
        return self.r == 1


def _action_to_json(action) -> Optional[dict[str, Any]]:
    if action is None:
        return None
    if isinstance(action, PreGraspAction):
        return {"type": "push", "contact": list(action.contact), "displacement": list(action.displacement)}
    return {"type": "grasp", "contact": list(action.contact), "orientation": list(action.orientation)}


def _action_from_json(doc: Optional[dict[str, Any]]):
    if doc is None:
        return None
    if doc["type"] == "push":
        return PreGraspAction(tuple(doc["contact"]), tuple(doc["displacement"]))
    return GraspAction(tuple(doc["contact"]), tuple(doc["orientation"]))


def trace_to_json(trace: PlanTrace) -> dict[str, Any]:
    return {
        "trace_schema_version": TRACE_SCHEMA_VERSION,
        "r": trace.r,
        "aborted": trace.aborted,
        "pushes": trace.pushes,
        "error": trace.error,
        "steps": [
            {
                "decision": s.decision,
                "c2_hat": s.c2_hat,
                "action": _action_to_json(s.action),
                "safety": s.safety.value,
                "slip": s.slip,
                "rotation": None if s.rotation is None else list(s.rotation),
                "r": s.r,
                "forced": s.forced,
                "error": s.error,
            }
            for s in trace.steps
        ],
        **trace.metadata,
    }


def trace_from_json(doc: dict[str, Any]) -> PlanTrace:
    known = {"trace_schema_version", "r", "aborted", "pushes", "error", "steps"}
    steps = [
        PlanStep(
            decision=s["decision"],
            c2_hat=s["c2_hat"],
            action=_action_from_json(s["action"]),
            safety=SafetyEvent(s["safety"]),
            slip=s["slip"],
            rotation=None if s["rotation"] is None else tuple(s["rotation"]),
            r=s["r"],
            forced=s["forced"],
            error=s["error"],
        )
        for s in doc["steps"]
    ]
    return PlanTrace(
        steps=steps,
        r=doc["r"],
        aborted=doc["aborted"],
        error=doc["error"],
        metadata={k: v for k, v in doc.items() if k not in known},
    )


def save_trace(trace: PlanTrace, path: str, storage: Optional[BaseStorage] = None) -> str:
    storage = storage or LocalStorage()
    workspace = storage.create_workspace(os.path.dirname(path))
    saved = storage.save_text(workspace, os.path.basename(path), json.dumps(trace_to_json(trace), indent=2))
    logger.info(f"Saved plan trace ({trace.pushes} pushes, r={trace.r}) to {saved}")
    return saved


def module_push_policy(
    pregrasp: ModuleNet,
    cfg: RunConfig,
) -> PushPolicy:
    """Push selected by the pre-grasp module over n1 points and m1 latents."""

    def policy(cloud: LabeledPointCloud, seed) -> PreGraspAction:
        features = encode(pregrasp, cloud)
        pc = cfg.planner
        return select_action(pregrasp, features, pc.n1, pc.m1, seed, cfg.scenesim.push_max).action

    return policy


def camera_seed(seed: int, iteration: int) -> int:
    """Camera seed of iteration i of a plan."""
    return int(np.random.default_rng([seed, iteration]).integers(2**31))


@log_function(logger_name="planner", log_execution_time=True)
def closed_loop(
    state: SceneState,
    pregrasp_weights: Optional[ModuleWeights | ModuleNet],
    grasp_weights: ModuleWeights | ModuleNet,
    cfg: Optional[RunConfig] = None,
    seed: Optional[int] = None,
    push_policy: Optional[PushPolicy] = None,
    max_iterations: Optional[int] = None,
    check_necessity: bool = True,
) -> PlanTrace:
    """
    Push until the grasp estimate clears theta_g, then grasp.

    Args:
        state: Initial scene.
        pregrasp_weights: Pre-grasp module; may be None when push_policy is given.
        grasp_weights: Grasp module.
        cfg: Run configuration (planner, simulator and camera groups).
        seed: Plan seed (default cfg.planner.seed). Iteration i observes with a
            camera drawn from [seed, i]; the observe call itself tries up to
            camera_retries fresh cameras on occlusion.
        push_policy: Replaces the module's push selection.
        max_iterations: Push cap K (default cfg.planner.max_iterations).
        check_necessity: If False, never skip: push K times, then force the grasp.

    Returns:
        PlanTrace: At most K push steps followed by one grasp step, unless a
            push safety event aborted the trace or no cloud could be observed.
    """
    cfg = cfg or RunConfig()
    seed = cfg.planner.seed if seed is None else seed
    k_max = cfg.planner.max_iterations if max_iterations is None else max_iterations
    if k_max < 1:
        raise ValueError(f"max_iterations must be at least 1, got {k_max}")

    grasp_net = as_net(grasp_weights, GRASP)
    if push_policy is None:
        if pregrasp_weights is None:
            raise ValueError("Either pregrasp weights or a push policy is required")
        push_policy = module_push_policy(as_net(pregrasp_weights, PREGRASP), cfg)

    trace = PlanTrace(metadata={"seed": seed, "config_hash": config_hash(cfg), "initial_state": state_to_json(state)})
    for i in range(k_max + 1):
        try:
            cloud = observe(state, camera_seed(seed, i), cfg.cloudgen)
        except PregraspError as e:
            logger.warning(f"Iteration {i}: observation failed: {e}")
            trace.error = str(e)
            return trace

        features = encode(grasp_net, cloud)
        necessity = necessity_check(features, grasp_net, cfg.planner, [seed, i, 0])
        skip = necessity.skip and check_necessity

        if skip or i >= k_max:
            step = PlanStep(decision=GRASP_DECISION, c2_hat=necessity.c2_hat, forced=not skip)
            trace.steps.append(step)
            try:
                pc = cfg.planner
                step.action = select_action(grasp_net, features, pc.n2, pc.m2, [seed, i, 2]).action
                r, step.safety = grasp_outcome(state, step.action, cfg.grasp_oracle, cfg.scenesim)
                step.r = trace.r = int(r)
            except PregraspError as e:
                logger.warning(f"Iteration {i}: grasp failed: {e}")
                step.error = trace.error = str(e)
                step.r = trace.r = 0
            logger.info(
                f"Grasp after {trace.pushes} pushes (c2_hat={necessity.c2_hat:.3f}, "
                f"forced={step.forced}): r={trace.r}"
            )
            return trace

        step = PlanStep(decision=PUSH, c2_hat=necessity.c2_hat)
        trace.steps.append(step)
        try:
            step.action = push_policy(cloud, [seed, i, 1])
            outcome = apply_push(state, step.action, cfg=cfg.scenesim)
        except PregraspError as e:
            # Failed push: keep the scene and fall through to the forced grasp
            logger.warning(f"Iteration {i}: push failed: {e}")
            step.error = str(e)
            k_max = i + 1
            continue

        step.safety, step.slip, step.rotation = outcome.safety, outcome.slip, outcome.rotation
        logger.debug(f"Iteration {i}: pushed, slip={outcome.slip:.4f}, safety={outcome.safety.value}")
        if outcome.safety is not SafetyEvent.NONE:
            trace.aborted = True
            logger.info(f"Aborted after push {i + 1}: {outcome.safety.value}")
            return trace
        state = replace(state, pose=outcome.new_pose)

    return trace
