"""Tests for the encoder, the module heads, rotations and PGWT weight files."""

import numpy as np
import pytest
import torch

from src.cloudgen import LabeledPointCloud
from src.errors import CorruptFile, MissingDependency, SchemaMismatch
from src.nets import (
    GRASP,
    PREGRASP,
    ModuleNet,
    ModuleWeights,
    decode_orientation,
    encode,
    encode_action,
    euler_to_6d,
    farthest_point_sample,
    geodesic_distance,
    gram_schmidt,
    load_weights,
    propose,
    query_ball_point,
    sample_latents,
    save_weights,
    score_affordance_map,
)
from src.nets.inference import affordance, critic
from src.scenesim import GraspAction, PreGraspAction, grasp_frame


def toy_cloud(n: int = 200, seed: int = 0) -> LabeledPointCloud:
    rng = np.random.default_rng(seed)
    points = rng.uniform(-0.3, 0.3, size=(n, 3))
    points[:, 2] *= 0.1
    labels = (np.arange(n) < n // 2).astype(np.uint8)
    return LabeledPointCloud(points=points, labels=labels)


@pytest.fixture
def grasp_net(tiny_nets):
    torch.manual_seed(0)
    return ModuleNet(GRASP, tiny_nets)


@pytest.fixture
def push_net(tiny_nets):
    torch.manual_seed(1)
    return ModuleNet(PREGRASP, tiny_nets)


def test_encoder_output_shape(grasp_net):
    features = encode(grasp_net, toy_cloud())
    assert features.per_point.shape == (200, 160)
    assert torch.isfinite(features.per_point).all()


def test_encoder_is_permutation_equivariant(grasp_net):
    cloud = toy_cloud()
    perm = np.random.default_rng(3).permutation(cloud.n_points)
    shuffled = LabeledPointCloud(points=cloud.points[perm], labels=cloud.labels[perm])

    a = encode(grasp_net, cloud).per_point
    b = encode(grasp_net, shuffled).per_point
    assert torch.allclose(a[torch.as_tensor(perm)], b, atol=1e-5)


def test_encoder_output_is_not_constant(grasp_net):
    cloud = toy_cloud()
    features = encode(grasp_net, cloud).per_point
    assert features.std(dim=0).max() > 0

    moved = cloud.points.copy()
    moved[-1] = (5.0, 5.0, 0.5)
    other = encode(grasp_net, LabeledPointCloud(points=moved, labels=cloud.labels)).per_point
    assert not torch.allclose(features, other)


def test_sampling_and_grouping_shapes():
    xyz = torch.rand(2, 50, 3)
    idx = farthest_point_sample(xyz, 10)
    assert idx.shape == (2, 10)
    assert all(len(set(row.tolist())) == 10 for row in idx)

    groups = query_ball_point(0.2, 8, xyz, xyz[:, :10])
    assert groups.shape == (2, 10, 8)
    # The nearest neighbour of a point is itself
    assert torch.equal(groups[:, :, 0], torch.arange(10).expand(2, 10))


def test_affordance_scores_are_bounded_and_repeatable(grasp_net):
    features = encode(grasp_net, toy_cloud())
    scores = score_affordance_map(grasp_net, features)
    assert scores.shape == (200,)
    assert np.all((scores >= 0) & (scores <= 1))
    assert affordance(grasp_net, features, 7) == affordance(grasp_net, features, 7)
    assert affordance(grasp_net, features, 7) == pytest.approx(scores[7], abs=1e-6)


def test_grasp_critic_is_bounded_under_fuzzing(grasp_net):
    g = torch.Generator().manual_seed(0)
    f_s = 100 * torch.randn(500, 160, generator=g)
    contact = 10 * torch.randn(500, 3, generator=g)
    action = 10 * torch.randn(500, 6, generator=g)
    with torch.no_grad():
        scores = grasp_net.critic(f_s, contact, action)
        aff = grasp_net.affordance(f_s, contact)
    assert torch.all((scores >= 0) & (scores <= 1))
    assert torch.all((aff >= 0) & (aff <= 1))


def test_push_critic_is_unbounded(push_net):
    features = encode(push_net, toy_cloud())
    with torch.no_grad():
        push_net.critic_head.mlp2.weight.zero_()
        push_net.critic_head.mlp2.bias.fill_(-5.0)
    action = PreGraspAction(contact=features.world_point(0), displacement=(0.1, 0.0))
    assert critic(push_net, features, 0, action) == pytest.approx(-5.0)


def test_push_proposals_are_planar_and_clipped(push_net):
    features = encode(push_net, toy_cloud())
    with torch.no_grad():
        push_net.actor_decoder.mlp[-1].bias.copy_(torch.tensor([3.0, 4.0]))
    action = propose(push_net, features, 5, np.zeros(32), push_max=0.4)

    assert isinstance(action, PreGraspAction)
    assert len(action.displacement) == 2
    assert np.hypot(*action.displacement) == pytest.approx(0.4)
    assert action.contact == features.world_point(5)


def test_grasp_proposals_approach_from_above_the_surface(grasp_net):
    features = encode(grasp_net, toy_cloud())
    latents = sample_latents(40, 32, seed=2)
    for j, z in enumerate(latents):
        p = j % features.n_points
        action = propose(grasp_net, features, p, 3 * z)
        assert isinstance(action, GraspAction)
        _, _, approach = grasp_frame(action.orientation)
        assert approach @ features.normals[p] <= 1e-9


def test_proposals_are_deterministic(grasp_net):
    features = encode(grasp_net, toy_cloud())
    z = sample_latents(1, 32, seed=5)[0]
    assert propose(grasp_net, features, 3, z) == propose(grasp_net, features, 3, z)


def test_encode_action_dimensions(grasp_net, push_net):
    cloud = toy_cloud()
    for net, action in (
        (grasp_net, GraspAction(contact=(0, 0, 0), orientation=(0.1, -0.4, 2.0))),
        (push_net, PreGraspAction(contact=(0, 0, 0), displacement=(0.2, -0.1))),
    ):
        mean, logvar = encode_action(net, encode(net, cloud), 4, action)
        assert mean.shape == (32,) and logvar.shape == (32,)
        assert np.isfinite(logvar).all()


def test_six_value_rotation_round_trip():
    orientation = (0.3, -0.2, 1.1)
    matrix = gram_schmidt(torch.as_tensor(euler_to_6d(orientation)[None]))[0].numpy()
    g, w, a = grasp_frame(orientation)
    assert np.allclose(matrix, np.column_stack([g, w, a]), atol=1e-12)

    decoded = decode_orientation(euler_to_6d(orientation), normal=-a)
    assert np.allclose(np.column_stack(grasp_frame(decoded)), matrix, atol=1e-9)


def test_geodesic_distance():
    a = gram_schmidt(torch.as_tensor(euler_to_6d([(0.0, 0.0, 0.0)])))
    b = gram_schmidt(torch.as_tensor(euler_to_6d([(0.0, 0.0, 0.5)])))
    assert geodesic_distance(a, b).item() == pytest.approx(0.5, abs=1e-6)
    assert geodesic_distance(a, a).item() < 2e-3


def test_head_gradients_match_finite_differences(tiny_nets):
    torch.manual_seed(0)
    net = ModuleNet(GRASP, tiny_nets).double()
    g = torch.Generator().manual_seed(1)
    f_s = torch.randn(16, 160, generator=g, dtype=torch.float64, requires_grad=True)
    contact = torch.randn(16, 3, generator=g, dtype=torch.float64, requires_grad=True)
    action = torch.randn(16, 6, generator=g, dtype=torch.float64, requires_grad=True)
    z = torch.randn(16, 32, generator=g, dtype=torch.float64)

    assert torch.autograd.gradcheck(net.critic, (f_s, contact, action), eps=1e-6, atol=1e-4)
    assert torch.autograd.gradcheck(net.affordance, (f_s, contact), eps=1e-6, atol=1e-4)
    assert torch.autograd.gradcheck(lambda f, c: net.propose(f, c, z), (f_s, contact), eps=1e-6, atol=1e-4)
    assert torch.autograd.gradcheck(net.encode_action, (f_s, contact, action), eps=1e-6, atol=1e-4)


def test_weights_round_trip(tmp_path, grasp_net):
    weights = ModuleWeights.from_net(grasp_net, seed=3, epochs=2, dataset_hash="abc")
    path = save_weights(weights, str(tmp_path / "w" / "grasp.pgwt"))
    loaded = load_weights(path)

    assert loaded.equals(weights)
    assert loaded.metadata["seed"] == 3
    features_a = encode(grasp_net, toy_cloud())
    features_b = encode(loaded.to_net(), toy_cloud())
    assert torch.equal(features_a.per_point, features_b.per_point)


def test_weights_reject_damage(tmp_path, push_net):
    path = save_weights(ModuleWeights.from_net(push_net), str(tmp_path / "push.pgwt"))
    data = (tmp_path / "push.pgwt").read_bytes()

    (tmp_path / "bumped.pgwt").write_bytes(data[:4] + (2).to_bytes(2, "little") + data[6:])
    with pytest.raises(SchemaMismatch):
        load_weights(str(tmp_path / "bumped.pgwt"))

    (tmp_path / "short.pgwt").write_bytes(data[: len(data) // 2])
    with pytest.raises(CorruptFile):
        load_weights(str(tmp_path / "short.pgwt"))

    flipped = bytearray(data)
    flipped[len(data) // 2] ^= 0xFF
    (tmp_path / "flipped.pgwt").write_bytes(bytes(flipped))
    with pytest.raises(CorruptFile):
        load_weights(str(tmp_path / "flipped.pgwt"))

    with pytest.raises(MissingDependency):
        load_weights(str(tmp_path / "absent.pgwt"))
    assert load_weights(path).module == PREGRASP
