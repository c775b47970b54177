"""Tests for the necessity check, candidate selection, affordance maps and the closed loop."""

import json

import numpy as np
import pytest
import torch

from src.cloudgen import LabeledPointCloud, canonicalize
from src.config import CloudGenConfig, PlannerConfig, RunConfig
from src.errors import NoObjectPoints
from src.nets import GRASP, PREGRASP, ModuleNet, encode
from src.nets.inference import critic
from src.planner import (
    GRASP_DECISION,
    PUSH,
    affordance_map,
    closed_loop,
    necessity_check,
    propose_grasp,
    propose_pregrasp,
    save_trace,
    select_action,
    trace_from_json,
    trace_to_json,
)
from src.scenesim import PreGraspAction, SafetyEvent, build_scene
from tests.helpers import ConstantCritic, flat_state, rectangle_object


def toy_cloud(n: int = 160, seed: int = 0) -> LabeledPointCloud:
    rng = np.random.default_rng(seed)
    points = rng.uniform((0.4, 0.2, 0.0), (0.8, 0.6, 0.02), size=(n, 3))
    labels = (np.arange(n) % 2).astype(np.uint8)
    return LabeledPointCloud(points=points, labels=labels)


class TargetCritic(ModuleNet):
    """Scores minus the distance between the contact and a fixed canonical point."""

    def __init__(self, module, cfg, target):
        super().__init__(module, cfg)
        self.target = torch.as_tensor(np.asarray(target), dtype=torch.float32)

    def critic(self, f_s, contact, action):
        return -(contact - self.target.to(contact.dtype)).norm(dim=-1)


def planner_config(**overrides) -> PlannerConfig:
    return PlannerConfig(**{"n1": 3, "m1": 2, "n2": 3, "m2": 2, **overrides})


def loop_config(tiny_nets, **planner) -> RunConfig:
    return RunConfig(
        nets=tiny_nets,
        cloudgen=CloudGenConfig(n_points=256),
        planner=PlannerConfig(**{"n1": 2, "m1": 2, "n2": 2, "m2": 2, **planner}),
    )


def push_along(dx: float, dy: float):
    """Push policy: from the visible object point nearest the object's centroid (top face)."""

    def policy(cloud, seed) -> PreGraspAction:
        points = cloud.world_points()[cloud.object_indices]
        contact = points[np.argmin(np.linalg.norm(points - points.mean(axis=0), axis=1))]
        return PreGraspAction(contact=tuple(float(v) for v in contact), displacement=(dx, dy))

    return policy


@pytest.fixture
def plate_state():
    return flat_state(build_scene("edge"), rectangle_object(0.3, 0.2), 0.6, 0.4)


# ----------------------------------------------------------------------------- necessity


def test_high_estimate_skips_pregrasping(tiny_nets):
    result = necessity_check(toy_cloud(), ConstantCritic(GRASP, tiny_nets, 0.75), planner_config(theta_g=0.5))
    assert result.skip
    assert result.c2_hat == pytest.approx(0.75)


def test_threshold_is_strict(tiny_nets):
    result = necessity_check(toy_cloud(), ConstantCritic(GRASP, tiny_nets, 0.75), planner_config(theta_g=0.75))
    assert result.c2_hat == 0.75
    assert not result.skip


def test_top_threshold_never_skips_a_certain_critic(tiny_nets):
    result = necessity_check(toy_cloud(), ConstantCritic(GRASP, tiny_nets, 1.0), planner_config(theta_g=1.0))
    assert result.c2_hat == 1.0
    assert not result.skip


def test_zero_critic_never_skips(tiny_nets):
    assert not necessity_check(toy_cloud(), ConstantCritic(GRASP, tiny_nets, 0.0)).skip


def test_necessity_needs_grasp_weights(tiny_nets):
    with pytest.raises(ValueError):
        necessity_check(toy_cloud(), ConstantCritic(PREGRASP, tiny_nets, 0.9))


# ----------------------------------------------------------------------------- selection


def test_pregrasp_selection_finds_the_critic_peak(tiny_nets):
    cloud = toy_cloud()
    j = int(cloud.object_indices[17])
    net = TargetCritic(PREGRASP, tiny_nets, canonicalize(cloud).points[j])
    action = propose_pregrasp(cloud, net, planner_config(n1=cloud.n_points, m1=2))
    assert np.allclose(action.contact, cloud.points[j], atol=1e-9)


def test_single_candidate_is_returned(tiny_nets):
    torch.manual_seed(0)
    net = ModuleNet(PREGRASP, tiny_nets)
    features = encode(net, toy_cloud())
    selection = select_action(net, features, 1, 1, seed=5, push_max=0.4)
    assert len(selection.point_indices) == 1
    assert selection.point_index == selection.point_indices[0]


def test_ties_go_to_the_lowest_point_index(tiny_nets):
    net = ConstantCritic(PREGRASP, tiny_nets, 0.3)
    features = encode(net, toy_cloud())
    selection = select_action(net, features, 4, 3, seed=1, push_max=0.4)
    assert selection.point_index == selection.point_indices.min()


def test_selected_action_has_the_maximum_critic_score(tiny_nets):
    torch.manual_seed(2)
    net = ModuleNet(GRASP, tiny_nets)
    features = encode(net, toy_cloud())
    selection = select_action(net, features, 4, 4, seed=9)
    assert selection.score == selection.scores.max()
    assert critic(net, features, selection.point_index, selection.action) == pytest.approx(selection.score, abs=1e-5)
    assert toy_cloud().labels[selection.point_indices].all()


def test_grasp_proposal_is_deterministic(tiny_nets):
    torch.manual_seed(3)
    net = ModuleNet(GRASP, tiny_nets)
    first = propose_grasp(toy_cloud(), net, planner_config(), seed=4)
    second = propose_grasp(toy_cloud(), net, planner_config(), seed=4)
    assert first == second


def test_environment_only_cloud_has_nothing_to_act_on(tiny_nets):
    cloud = toy_cloud()
    background = LabeledPointCloud(points=cloud.points, labels=np.zeros_like(cloud.labels))
    with pytest.raises(NoObjectPoints):
        propose_grasp(background, ModuleNet(GRASP, tiny_nets))
    with pytest.raises(NoObjectPoints):
        propose_pregrasp(background, ModuleNet(PREGRASP, tiny_nets))


# ----------------------------------------------------------------------------- affordance maps


def test_affordance_map_scores_object_points_only(tiny_nets):
    torch.manual_seed(4)
    net = ModuleNet(PREGRASP, tiny_nets)
    cloud = toy_cloud()
    scores = affordance_map(cloud, net, PREGRASP)
    assert scores.shape == (cloud.n_points,)
    assert (scores[cloud.labels == 0] == 0.0).all()
    assert ((scores >= 0.0) & (scores <= 1.0)).all()


def test_environment_only_map_is_zero(tiny_nets):
    cloud = toy_cloud()
    background = LabeledPointCloud(points=cloud.points, labels=np.zeros_like(cloud.labels))
    assert not affordance_map(background, ModuleNet(GRASP, tiny_nets)).any()


def test_affordance_map_follows_point_order(tiny_nets):
    torch.manual_seed(5)
    net = ModuleNet(GRASP, tiny_nets)
    cloud = toy_cloud()
    perm = np.random.default_rng(1).permutation(cloud.n_points)
    shuffled = LabeledPointCloud(points=cloud.points[perm], labels=cloud.labels[perm])
    assert np.allclose(affordance_map(shuffled, net), affordance_map(cloud, net)[perm], atol=1e-5)


# ----------------------------------------------------------------------------- closed loop


def test_graspable_estimate_grasps_without_pushing(tiny_nets, plate_state):
    cfg = loop_config(tiny_nets)
    trace = closed_loop(plate_state, None, ConstantCritic(GRASP, tiny_nets, 0.95), cfg, push_policy=push_along(-0.05, 0.0))
    assert trace.pushes == 0
    assert [s.decision for s in trace.steps] == [GRASP_DECISION]
    assert not trace.steps[0].forced
    assert trace.r in (0, 1)


def test_push_cap_forces_the_grasp(tiny_nets, plate_state):
    cfg = loop_config(tiny_nets, max_iterations=1)
    trace = closed_loop(plate_state, None, ConstantCritic(GRASP, tiny_nets, 0.0), cfg, push_policy=push_along(-0.05, 0.0))
    assert [s.decision for s in trace.steps] == [PUSH, GRASP_DECISION]
    assert trace.steps[0].safety is SafetyEvent.NONE
    assert trace.steps[-1].forced and trace.forced
    assert not trace.aborted


def test_unsafe_push_aborts(tiny_nets):
    state = flat_state(build_scene("edge"), rectangle_object(0.3, 0.2), 1.05, 0.4)
    cfg = loop_config(tiny_nets, max_iterations=3)
    trace = closed_loop(state, None, ConstantCritic(GRASP, tiny_nets, 0.0), cfg, push_policy=push_along(0.3, 0.0))
    assert trace.aborted and trace.r == 0
    assert trace.steps[-1].decision == PUSH
    assert trace.steps[-1].safety is SafetyEvent.OBJECT_FELL


def test_push_errors_stay_in_the_trace(tiny_nets, plate_state):
    cfg = loop_config(tiny_nets, max_iterations=3)
    trace = closed_loop(plate_state, None, ConstantCritic(GRASP, tiny_nets, 0.0), cfg, push_policy=push_along(0.0, 0.0))
    assert [s.decision for s in trace.steps] == [PUSH, GRASP_DECISION]
    assert "below" in trace.steps[0].error
    assert trace.steps[-1].forced


def test_module_loop_respects_the_cap_and_is_deterministic(tiny_nets, plate_state):
    torch.manual_seed(6)
    pregrasp = ModuleNet(PREGRASP, tiny_nets)
    grasp = ConstantCritic(GRASP, tiny_nets, 0.0)
    cfg = loop_config(tiny_nets, max_iterations=2)
    first = closed_loop(plate_state, pregrasp, grasp, cfg, seed=8)
    second = closed_loop(plate_state, pregrasp, grasp, cfg, seed=8)

    assert len(first.steps) <= 3 and first.pushes <= 2
    decisions = [s.decision for s in first.steps]
    assert GRASP_DECISION not in decisions[:-1]
    if not first.aborted and first.error is None:
        assert decisions[-1] == GRASP_DECISION
    assert trace_to_json(first) == trace_to_json(second)


def test_trace_json_round_trip(tiny_nets, plate_state, tmp_path):
    cfg = loop_config(tiny_nets, max_iterations=1)
    trace = closed_loop(plate_state, None, ConstantCritic(GRASP, tiny_nets, 0.0), cfg, push_policy=push_along(-0.05, 0.0))
    doc = json.loads(json.dumps(trace_to_json(trace)))
    assert json.loads(json.dumps(trace_to_json(trace_from_json(doc)))) == doc

    path = save_trace(trace, str(tmp_path / "plans" / "trace.json"))
    saved = json.loads(open(path).read())
    assert saved["pushes"] == 1 and len(saved["config_hash"]) == 64
