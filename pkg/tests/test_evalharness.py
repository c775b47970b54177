"""Tests for trial sampling, the baselines, report arithmetic and the compatibility sweep."""

import csv
import io
import json

import numpy as np
import pytest
import torch
from scipy.stats import kstest

from src.cloudgen import LabeledPointCloud, observe
from src.config import CloudGenConfig, EvalConfig, NetsConfig, PlannerConfig, RunConfig
from src.errors import ConfigError
from src.evalharness import (
    BASELINES,
    CSV_FIELDS,
    EvalCell,
    EvalReport,
    EvalSpec,
    center_point_index,
    compatibility_sweep,
    half_width,
    randomize_direction,
    report_table,
    report_to_csv,
    report_to_json,
    run_baseline,
    run_eval,
    sample_trial_state,
    save_report,
    trial_assets,
)
from src.nets import GRASP, PREGRASP, ModuleNet
from src.planner import camera_seed
from src.scenesim import PreGraspAction, build_scene, feature_geometry, footprint_polygon
from tests.helpers import ConstantCritic, flat_state, rectangle_object


def eval_config(tiny_nets, **evalharness) -> RunConfig:
    return RunConfig(
        nets=tiny_nets,
        cloudgen=CloudGenConfig(n_points=256),
        planner=PlannerConfig(n1=2, m1=2, n2=2, m2=2, max_iterations=2),
        evalharness=EvalConfig(**{"scenes": ("edge",), "category_sets": ("train-hard", "train-easy"), **evalharness}),
    )


@pytest.fixture
def nets(tiny_nets):
    torch.manual_seed(0)
    return ModuleNet(PREGRASP, tiny_nets), ModuleNet(GRASP, tiny_nets)


@pytest.fixture
def plate_state():
    return flat_state(build_scene("edge"), rectangle_object(0.3, 0.2), 0.6, 0.4)


# ----------------------------------------------------------------------------- report arithmetic


def test_half_width():
    assert half_width(0.5, 100) == pytest.approx(0.098)
    assert half_width(0.0, 50) == 0.0
    assert half_width(0.3, 0) == 0.0


def test_rates_are_exact_fractions():
    cell = EvalCell("edge", "train-hard", "ours", trials=7, successes=3, pushed=5)
    assert cell.success_rate * cell.trials == pytest.approx(3)
    assert cell.pregrasp_rate == 5 / 7


def test_aggregates_are_trial_weighted():
    report = EvalReport(
        cells=[
            EvalCell("edge", "train-hard", "ours", trials=10, successes=8),
            EvalCell("wall", "train-hard", "ours", trials=30, successes=6),
            EvalCell("edge", "train-hard", "no_pregrasp", trials=40, successes=2),
        ]
    )
    assert report.aggregate("ours").success_rate == pytest.approx(14 / 40)
    assert report.improvement("ours") == pytest.approx(100 * (14 / 40 - 2 / 40))
    assert report.improvement("no_pregrasp") == 0.0


def test_spec_validation():
    with pytest.raises(ConfigError):
        EvalSpec(scenes=("edge",), category_sets=("train-hard",), baselines=("ours",), trials=0)
    with pytest.raises(ConfigError):
        EvalSpec(scenes=("edge",), category_sets=("train-hard",), baselines=("teleport",), trials=1)


# ----------------------------------------------------------------------------- trial scenes


def test_hard_objects_start_at_a_distance_from_the_feature():
    cfg = RunConfig()
    assets = trial_assets(0, ("train-hard",), cfg)
    env = build_scene("edge")
    geom = feature_geometry(env, env.features[0])
    rng = np.random.default_rng(1)
    for _ in range(20):
        state = sample_trial_state("edge", "train-hard", rng, assets, cfg)
        assert not state.object.graspable_tag and state.pose.tilt == 0.0
        distance = footprint_polygon(state.object, state.pose).distance(geom)
        assert cfg.datagen.feature_distance_min - 1e-6 <= distance <= cfg.datagen.feature_distance_max + 1e-6


def test_easy_objects_land_on_the_table():
    cfg = RunConfig()
    assets = trial_assets(0, ("train-easy",), cfg)
    for seed in range(20):
        state = sample_trial_state("wall", "train-easy", np.random.default_rng(seed), assets, cfg)
        assert state.object.graspable_tag and state.pose.supported


def test_trial_scenes_are_reproducible():
    cfg = RunConfig()
    assets = trial_assets(3, ("train-hard",), cfg)
    first = sample_trial_state("slot", "train-hard", np.random.default_rng([3, 0, 0, 5]), assets, cfg)
    second = sample_trial_state("slot", "train-hard", np.random.default_rng([3, 0, 0, 5]), assets, cfg)
    assert first == second


# ----------------------------------------------------------------------------- baselines


def test_center_point_is_the_object_point_nearest_the_footprint_centroid():
    grid = np.array([(x, y, 0.01) for x in np.linspace(0.4, 0.6, 5) for y in np.linspace(0.3, 0.5, 5)])
    background = np.array([(0.1, 0.1, 0.0), (0.9, 0.7, 0.0), (0.5, 0.4, -0.05)])
    cloud = LabeledPointCloud(
        points=np.vstack([background, grid]),
        labels=np.array([0] * len(background) + [1] * len(grid), dtype=np.uint8),
    )
    index = center_point_index(cloud)
    assert np.allclose(cloud.points[index], (0.5, 0.4, 0.01))


def test_random_directions_are_uniform():
    action = PreGraspAction(contact=(0.5, 0.4, 0.005), displacement=(0.12, 0.05))
    rng = np.random.default_rng(0)
    pushes = [randomize_direction(action, rng) for _ in range(10_000)]
    angles = np.array([np.arctan2(p.displacement[1], p.displacement[0]) % (2 * np.pi) for p in pushes])
    assert kstest(angles / (2 * np.pi), "uniform").pvalue > 0.01
    assert all(np.hypot(*p.displacement) == pytest.approx(0.13) for p in pushes[:100])
    assert all(p.contact == action.contact for p in pushes[:100])


def test_direct_grasp_never_pushes(tiny_nets, nets, plate_state):
    trace = run_baseline("no_pregrasp", plate_state, None, nets[1], eval_config(tiny_nets), seed=2)
    assert trace.pushes == 0
    assert len(trace.steps) == 1 and trace.steps[0].decision == "grasp"


@pytest.mark.parametrize("kind", ["random_direction", "center_point", "ours_no_closed_loop"])
def test_single_push_baselines_push_exactly_once(kind, tiny_nets, nets, plate_state):
    trace = run_baseline(kind, plate_state, nets[0], nets[1], eval_config(tiny_nets), seed=2)
    assert trace.pushes == 1
    assert trace.steps[0].decision == "push"
    assert trace.aborted or trace.error is not None or trace.steps[-1].decision == "grasp"


def test_center_point_push_starts_at_the_centre(tiny_nets, nets, plate_state):
    cfg = eval_config(tiny_nets)
    trace = run_baseline("center_point", plate_state, nets[0], nets[1], cfg, seed=4)
    cloud = observe(plate_state, camera_seed(4, 0), cfg.cloudgen)
    expected = cloud.world_points()[center_point_index(cloud)]
    assert np.allclose(trace.steps[0].action.contact, expected, atol=1e-9)


def test_baseline_arguments_are_checked(tiny_nets, nets, plate_state):
    with pytest.raises(ValueError):
        run_baseline("teleport", plate_state, nets[0], nets[1], eval_config(tiny_nets), seed=0)
    with pytest.raises(ValueError):
        run_baseline("ours", plate_state, None, nets[1], eval_config(tiny_nets), seed=0)


# ----------------------------------------------------------------------------- runs


@pytest.fixture(scope="module")
def small_report():
    tiny = NetsConfig(sa_centroids=(32, 8), sa_neighbours=8)
    torch.manual_seed(0)
    pregrasp, grasp = ModuleNet(PREGRASP, tiny), ModuleNet(GRASP, tiny)
    cfg = eval_config(tiny, trials=1)
    return run_eval(EvalSpec.from_config(cfg, seed=5), pregrasp, grasp, cfg), (pregrasp, grasp, cfg)


def test_one_trial_per_cell(small_report):
    report, _ = small_report
    assert len(report.cells) == 2 * len(BASELINES)
    assert all(c.trials == 1 for c in report.cells)
    assert report.baselines == list(BASELINES)


def test_reports_are_reproducible(small_report):
    report, (pregrasp, grasp, cfg) = small_report
    again = run_eval(EvalSpec.from_config(cfg, seed=5), pregrasp, grasp, cfg)
    assert report_to_json(again) == report_to_json(report)


def test_report_outputs(small_report, tmp_path):
    report, _ = small_report
    rows = list(csv.DictReader(io.StringIO(report_to_csv(report))))
    assert tuple(rows[0]) == CSV_FIELDS
    assert len(rows) == len(report.cells)
    assert report_table(report).row_count == len(BASELINES)

    paths = save_report(report, str(tmp_path / "eval"))
    doc = json.loads(open(paths["json"]).read())
    assert doc["trials"] == 1 and len(doc["config_hash"]) == 64
    assert set(doc["aggregates"]) == set(BASELINES)


def test_threshold_extremes_of_the_sweep(tiny_nets, nets):
    cfg = eval_config(tiny_nets, trials=2)
    rows = compatibility_sweep(nets[0], nets[1], theta_grid=(0.0, 1.0), seed=1, cfg=cfg)
    never, always = rows
    assert never.graspable.pushed == 0 and never.ungraspable.pushed == 0
    for cell in (always.graspable, always.ungraspable):
        assert cell.pushed >= cell.trials - cell.errors


def test_top_threshold_pushes_even_for_a_certain_grasp_critic(tiny_nets, nets):
    cfg = eval_config(tiny_nets, trials=2)
    certain = ConstantCritic(GRASP, tiny_nets, 1.0)
    (row,) = compatibility_sweep(nets[0], certain, theta_grid=(1.0,), seed=1, cfg=cfg)
    for cell in (row.graspable, row.ungraspable):
        assert cell.pushed >= cell.trials - cell.errors


@pytest.mark.slow
def test_worker_count_does_not_change_the_report(small_report):
    report, (pregrasp, grasp, cfg) = small_report
    pooled = run_eval(EvalSpec.from_config(cfg, seed=5, workers=2), pregrasp, grasp, cfg)
    assert report_to_json(pooled) == report_to_json(report)
