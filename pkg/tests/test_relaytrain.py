"""Tests for the push penalty, the losses, critic-averaged labels and relay training."""

import csv
import math

import numpy as np
import pytest
import torch

from src.cloudgen import LabeledPointCloud
from src.config import RunConfig, TrainConfig
from src.datagen import GRASP_KIND, PREGRASP_KIND, EpisodeRecord
from src.errors import EmptyDataset, NoPositiveSamples
from src.nets import GRASP, PREGRASP, ModuleNet, encode, euler_to_6d
from src.relaytrain import (
    NetworkScorer,
    PenaltyCoeffs,
    affordance_label,
    affordance_loss,
    critic1_loss,
    critic2_loss,
    critic_auc,
    estimate_c2,
    gain_successful,
    geometric_loss,
    kl_divergence,
    penalty,
    proposal_loss,
    push_targets,
    split_holdout,
    train_grasp_module,
    train_pregrasp_module,
)
from src.scenesim import GraspAction, ObjectPose, PreGraspAction, PushOutcome, SafetyEvent, build_scene
from tests.helpers import ConstantCritic, flat_state, rectangle_object


def toy_cloud(n: int = 128, seed: int = 0, height: float = 0.02) -> LabeledPointCloud:
    rng = np.random.default_rng(seed)
    points = rng.uniform((0.4, 0.2, 0.0), (0.8, 0.6, height), size=(n, 3))
    labels = (np.arange(n) % 2).astype(np.uint8)
    return LabeledPointCloud(points=points, labels=labels)


class RampCritic(ModuleNet):
    """j-th of K rows scores j / K."""

    def critic(self, f_s, contact, action):
        k = len(f_s)
        return torch.arange(1, k + 1, dtype=f_s.dtype) / k


class HeightCritic(ModuleNet):
    """Scores 0.5 plus the height of the contact above the object centroid."""

    def critic(self, f_s, contact, action):
        return 0.5 + contact[:, 2].abs()


class FirstRowsCritic(ModuleNet):
    """Scores 1 on the first `hits` rows, 0 elsewhere."""

    def __init__(self, module, cfg, hits: int):
        super().__init__(module, cfg)
        self.hits = hits

    def critic(self, f_s, contact, action):
        return (torch.arange(len(f_s)) < self.hits).to(f_s.dtype)


def train_config(tiny_nets, **overrides) -> RunConfig:
    settings = {
        "epochs": 2,
        "batch_size": 8,
        "affordance_points": 4,
        "n_i": 2,
        "n2": 2,
        "m2": 2,
        "checkpoint_every": 1,
        **overrides,
    }
    return RunConfig(nets=tiny_nets, relaytrain=TrainConfig(**settings))


def grasp_records(count: int, success_every: int = 4) -> list[EpisodeRecord]:
    state = flat_state(build_scene("edge"), rectangle_object(0.3, 0.2), 0.6, 0.4)
    rng = np.random.default_rng(0)
    records = []
    for i in range(count):
        cloud = toy_cloud(seed=i)
        r = int(i % success_every == 0)
        records.append(
            EpisodeRecord(
                kind=GRASP_KIND,
                scene="edge",
                state=state,
                cloud_seed=i,
                point_index=2 * int(rng.integers(60)) + 1,
                action=GraspAction(contact=(0.6, 0.4, 0.01), orientation=tuple(rng.uniform(-1, 1, 3))),
                success=r == 1,
                episode_seed=(0, i),
                r=r,
                embedded_before=cloud,
            )
        )
    return records


def push_records(count: int) -> list[EpisodeRecord]:
    state = flat_state(build_scene("edge"), rectangle_object(0.3, 0.2), 0.6, 0.4)
    records = []
    for i in range(count):
        fell = i % 3 == 2
        outcome = PushOutcome(
            new_pose=ObjectPose(0.7, 0.4, supported=not fell),
            slip=0.0,
            rotation=(0.0, 0.0, 0.0),
            safety=SafetyEvent.OBJECT_FELL if fell else SafetyEvent.NONE,
        )
        records.append(
            EpisodeRecord(
                kind=PREGRASP_KIND,
                scene="edge",
                state=state,
                cloud_seed=i,
                point_index=1,
                action=PreGraspAction(contact=(0.45, 0.4, 0.005), displacement=(0.1, 0.0)),
                success=not fell,
                episode_seed=(0, i),
                outcome=outcome,
                embedded_before=toy_cloud(seed=i, height=0.0),
                embedded_after=None if fell else toy_cloud(seed=100 + i, height=0.1),
            )
        )
    return records


def stepped_scorer(cloud, seed) -> float:
    """0.2 before a push, 0.6 after it."""
    return 0.2 + 0.4 * seed[2]


# ----------------------------------------------------------------------------- penalty


def test_penalty_of_a_clean_push_is_one():
    assert penalty(0.0, (0.0, 0.0, 0.0), SafetyEvent.NONE) == 1.0


def test_penalty_terms():
    coeffs = PenaltyCoeffs(a=0.1, b=0.5)
    assert penalty(0.2, (0, 0, 0), SafetyEvent.NONE, coeffs) == pytest.approx(math.exp(-2), rel=1e-12)
    assert penalty(0.0, (0.3, 0.0, 0.4), SafetyEvent.NONE, coeffs) == pytest.approx(math.exp(-1), rel=1e-12)
    assert penalty(0.0, (0, 0, 0), SafetyEvent.OBJECT_FELL, coeffs) == 0.0


def test_penalty_matches_direct_evaluation():
    rng = np.random.default_rng(0)
    for _ in range(100):
        slip, rot = rng.uniform(0, 0.3), rng.uniform(-1, 1, 3)
        a, b = rng.uniform(0.01, 1, 2)
        expected = math.exp(-slip / a) * math.exp(-math.sqrt(float(rot @ rot)) / b)
        assert penalty(slip, rot, SafetyEvent.NONE, PenaltyCoeffs(a, b)) == pytest.approx(expected, rel=1e-9)


def test_penalty_is_monotone():
    slips = [penalty(s, (0, 0, 0), SafetyEvent.NONE) for s in np.linspace(0, 0.5, 20)]
    turns = [penalty(0.0, (0, 0, g), SafetyEvent.NONE) for g in np.linspace(0, 2, 20)]
    assert all(x >= y for x, y in zip(slips, slips[1:]))
    assert all(x >= y for x, y in zip(turns, turns[1:]))


def test_penalty_rejects_bad_inputs():
    with pytest.raises(ValueError):
        penalty(-0.01, (0, 0, 0), SafetyEvent.NONE)
    with pytest.raises(ValueError):
        PenaltyCoeffs(a=0.0)


# ----------------------------------------------------------------------------- losses


def test_critic1_loss_examples():
    assert float(critic1_loss(0.3, 0.2, 0.5, 1.0)) == pytest.approx(0.0, abs=1e-12)
    assert float(critic1_loss(0.0, 0.2, 0.5, 0.5)) == pytest.approx(0.15, abs=1e-12)
    assert float(critic1_loss(0.1, 0.6, 0.2, 1.0)) == pytest.approx(0.5, abs=1e-12)


def test_critic2_loss_examples_and_monotonicity():
    assert float(critic2_loss(0.5, 1)) == pytest.approx(math.log(2), rel=1e-12)
    assert float(critic2_loss(0.5, 0)) == pytest.approx(math.log(2), rel=1e-12)
    assert math.isfinite(float(critic2_loss(0.0, 1))) and math.isfinite(float(critic2_loss(1.0, 0)))
    preds = torch.linspace(0.05, 0.95, 19, dtype=torch.float64)
    up, down = critic2_loss(preds, 1), critic2_loss(preds, 0)
    assert (up[1:] < up[:-1]).all() and (down[1:] > down[:-1]).all()


def test_kl_of_unit_variance_posterior():
    mu = torch.tensor([[0.3, -0.4, 1.2]], dtype=torch.float64)
    assert float(kl_divergence(mu, torch.zeros_like(mu))[0]) == pytest.approx(float(mu.square().sum()) / 2)
    assert float(kl_divergence(torch.zeros(1, 4), torch.zeros(1, 4))[0]) == 0.0


def test_displacement_reconstruction_loss():
    recon = torch.tensor([[0.4, 0.5]], dtype=torch.float64)
    truth = torch.tensor([[0.1, 0.1]], dtype=torch.float64)
    zeros = torch.zeros(1, 8, dtype=torch.float64)
    assert float(proposal_loss(PREGRASP, recon, truth, zeros, zeros)[0]) == pytest.approx(0.5, rel=1e-12)


def test_rotation_reconstruction_loss_is_geodesic():
    truth = torch.as_tensor(euler_to_6d((0.0, 0.0, 0.0)))[None]
    turned = torch.as_tensor(euler_to_6d((0.0, 0.0, 0.5)))[None]
    assert float(geometric_loss(GRASP, turned, truth)[0]) == pytest.approx(0.5, abs=1e-5)
    assert float(geometric_loss(GRASP, truth, truth)[0]) < 2e-3
    with pytest.raises(ValueError):
        geometric_loss(3, truth, truth)


def test_affordance_loss_examples():
    assert float(affordance_loss(0.4, 0.4)) == 0.0
    assert float(affordance_loss(0.0, 1.0)) == 1.0
    assert float(affordance_loss(0.25, 0.75)) == 0.5


def test_gain_rules():
    relative = TrainConfig()
    absolute = TrainConfig(gain_rule="absolute")
    assert not gain_successful(0.2, 0.30, absolute)
    assert gain_successful(0.2, 0.30, relative)
    assert gain_successful(0.5, 0.75, relative) and not gain_successful(0.5, 0.75, absolute)
    assert gain_successful(0.0, 0.05, relative) and not gain_successful(0.0, 0.03, relative)
    with pytest.raises(ValueError):
        gain_successful(0.1, 0.2, TrainConfig(gain_rule="bogus"))


# ----------------------------------------------------------------------------- labels


def test_affordance_label_of_a_constant_critic(tiny_nets):
    net = ConstantCritic(PREGRASP, tiny_nets, 0.7)
    features = encode(net, toy_cloud())
    assert affordance_label(features, 1, net, n_i=10, seed=0) == pytest.approx(0.7)
    assert affordance_label(features, 1, net, n_i=1, seed=0) == pytest.approx(0.7)


def test_affordance_label_averages_the_proposals(tiny_nets):
    net = RampCritic(GRASP, tiny_nets)
    features = encode(net, toy_cloud())
    for n_i in (1, 4, 10):
        assert affordance_label(features, 3, net, n_i=n_i, seed=0) == pytest.approx((n_i + 1) / (2 * n_i))


def test_affordance_label_is_reproducible(tiny_nets):
    torch.manual_seed(0)
    net = ModuleNet(GRASP, tiny_nets)
    features = encode(net, toy_cloud())
    assert affordance_label(features, 5, net, seed=3) == affordance_label(features, 5, net, seed=3)


def test_estimate_c2_with_stub_critics(tiny_nets):
    cloud = toy_cloud()
    assert estimate_c2(cloud, ConstantCritic(GRASP, tiny_nets, 0.5), n2=3, m2=4) == pytest.approx(0.5)
    assert estimate_c2(cloud, FirstRowsCritic(GRASP, tiny_nets, 5), n2=3, m2=4) == pytest.approx(5 / 12)
    assert estimate_c2(cloud, ConstantCritic(GRASP, tiny_nets, 0.9), n2=1, m2=1) == pytest.approx(0.9)


def test_estimate_c2_is_bounded_and_deterministic(tiny_nets):
    torch.manual_seed(2)
    net = ModuleNet(GRASP, tiny_nets)
    values = [estimate_c2(toy_cloud(seed=s), net, 3, 3, seed=s) for s in range(5)]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert values[0] == estimate_c2(toy_cloud(seed=0), net, 3, 3, seed=0)


def test_estimate_c2_without_object_points_is_zero(tiny_nets):
    cloud = toy_cloud()
    background = LabeledPointCloud(points=cloud.points, labels=np.zeros(cloud.n_points, dtype=np.uint8))
    assert estimate_c2(background, ModuleNet(GRASP, tiny_nets)) == 0.0


# ----------------------------------------------------------------------------- training


def test_holdout_split_is_stratified_and_deterministic():
    success = [i % 4 == 0 for i in range(40)]
    train, hold = split_holdout(success, 0.1, seed=0)
    assert len(train) + len(hold) == 40 and not set(train) & set(hold)
    assert sum(success[i] for i in hold) == 1
    assert np.array_equal(split_holdout(success, 0.1, seed=0)[1], hold)
    train, hold = split_holdout([True], 0.5, seed=0)
    assert list(train) == [0] and len(hold) == 0


def test_critic_auc():
    assert critic_auc([0.9, 0.8, 0.1, 0.2], [True, True, False, False]) == 1.0
    assert critic_auc([0.5, 0.5], [True, False]) == 0.5
    assert math.isnan(critic_auc([0.5, 0.6], [True, True]))


def test_train_grasp_module_writes_metrics_and_checkpoints(tiny_nets, tmp_path):
    cfg = train_config(tiny_nets)
    weights = train_grasp_module(grasp_records(20), cfg, output_dir=str(tmp_path), dataset_hash="abc")

    assert weights.module == GRASP
    assert weights.metadata["dataset_hash"] == "abc"
    assert weights.metadata["heldout"] == 2
    auc = weights.metadata["metrics"]["heldout_auc"]
    assert auc is None or 0.0 <= auc <= 1.0
    with open(tmp_path / "metrics_grasp.csv") as f:
        rows = list(csv.DictReader(f))
    assert [(r["epoch"], r["phase"]) for r in rows] == [
        ("1", "critic_proposal"),
        ("2", "critic_proposal"),
        ("1", "affordance"),
        ("2", "affordance"),
    ]
    assert len(list((tmp_path / "checkpoints").glob("grasp_*.pgwt"))) == 4
    assert isinstance(weights.to_net(), ModuleNet)


def test_training_is_deterministic(tiny_nets):
    cfg = train_config(tiny_nets, checkpoint_every=0)
    first = train_grasp_module(grasp_records(12), cfg)
    second = train_grasp_module(grasp_records(12), cfg)
    assert first.equals(second)


def test_training_needs_records_and_successes(tiny_nets):
    cfg = train_config(tiny_nets)
    with pytest.raises(EmptyDataset):
        train_grasp_module([], cfg)
    with pytest.raises(NoPositiveSamples):
        train_grasp_module(grasp_records(6, success_every=100)[1:], cfg)
    with pytest.raises(EmptyDataset):
        train_pregrasp_module([], stepped_scorer, cfg)


def test_grasp_critic_loss_falls_on_a_small_set(tiny_nets):
    cfg = train_config(tiny_nets, epochs=30, batch_size=32, holdout_fraction=0.0, checkpoint_every=0)
    history = train_grasp_module(grasp_records(8, success_every=2), cfg).metadata["history"]
    critic = [row["critic_loss"] for row in history if row["phase"] == "critic_proposal"]
    assert critic[-1] < critic[0]


def test_push_targets_follow_the_penalty(tiny_nets):
    labels = push_targets(push_records(3), stepped_scorer, train_config(tiny_nets))
    (b0, a0, p0, ok0), _, (b2, a2, p2, ok2) = labels
    assert (b0, a0, p0, ok0) == (pytest.approx(0.2), pytest.approx(0.6), 1.0, True)
    assert p2 == 0.0 and a2 == b2 and not ok2


def test_pregrasp_success_uses_the_gain_rule():
    cfg = RunConfig(relaytrain=TrainConfig(gain_rule="absolute"))
    labels = push_targets(push_records(2), lambda cloud, seed: 0.2 + 0.1 * seed[2], cfg)
    assert not any(ok for *_, ok in labels)


def test_train_pregrasp_module_with_a_stub_scorer(tiny_nets, tmp_path):
    cfg = train_config(tiny_nets)
    weights = train_pregrasp_module(push_records(9), stepped_scorer, cfg, output_dir=str(tmp_path))
    assert weights.module == PREGRASP
    assert weights.metadata["mean_gain"] == pytest.approx(0.4 * 6 / 9)
    assert (tmp_path / "metrics_pregrasp.csv").is_file()


def test_train_pregrasp_module_with_a_grasp_network(tiny_nets):
    cfg = train_config(tiny_nets, checkpoint_every=0, success_gain_threshold=0.01)
    weights = train_pregrasp_module(push_records(6), HeightCritic(GRASP, tiny_nets), cfg)
    assert weights.module == PREGRASP
    assert weights.metadata["mean_gain"] > 0.0


def test_grasp_weights_score_clouds_in_the_unit_interval(tiny_nets):
    grasp = train_grasp_module(grasp_records(8, success_every=2), train_config(tiny_nets, checkpoint_every=0))
    labels = push_targets(push_records(3), NetworkScorer(grasp.to_net(), 2, 2), train_config(tiny_nets))
    assert all(0.0 <= before <= 1.0 and 0.0 <= after <= 1.0 for before, after, _, _ in labels)


@pytest.mark.slow
def test_push_critic_reproduces_relay_targets(tiny_nets):
    cfg = train_config(
        tiny_nets, epochs=150, batch_size=32, learning_rate=1e-2, holdout_fraction=0.0, checkpoint_every=0
    )
    records = [r for r in push_records(12) if r.outcome.safety is SafetyEvent.NONE]
    history = train_pregrasp_module(records, stepped_scorer, cfg).metadata["history"]
    critic = [row["critic_loss"] for row in history if row["phase"] == "critic_proposal"]
    assert critic[-1] < 0.05
