"""Tests for the pregrasp command line: exit codes, artifacts and reproducibility."""

import csv
import json

import numpy as np
import pytest
import torch

from src.cli import affordance_figure, project_camera
from src.cli.__main__ import build_parser, main
from src.cloudgen import CameraPose, LabeledPointCloud, encode_cloud
from src.nets import GRASP, PREGRASP, ModuleNet, ModuleWeights, save_weights
from src.scenesim import build_scene, state_to_json
from tests.helpers import flat_state, rectangle_object

BASE_TABLES = {
    "cloudgen": {"n_points": 256},
    "nets": {"sa_centroids": [32, 8], "sa_neighbours": 8},
    "datagen": {
        "shapes_per_category": 2,
        "chunk_size": 8,
        "max_attempts": 3000,
        "scenes": ["edge", "wall"],
        "categories": ["block", "tablet"],
        "hard_categories": ["tablet"],
    },
    "relaytrain": {"epochs": 2, "batch_size": 8, "affordance_points": 4, "n_i": 2, "n2": 2, "m2": 2},
    "planner": {"n1": 2, "m1": 2, "n2": 2, "m2": 2, "max_iterations": 2},
    "evalharness": {"scenes": ["edge"], "category_sets": ["train-hard", "train-easy"], "trials": 1},
}


def write_config(tmp_path, **tables) -> str:
    """Small TOML run configuration; keyword tables are merged into the base ones."""
    merged = {name: dict(values) for name, values in BASE_TABLES.items()}
    for name, values in tables.items():
        merged.setdefault(name, {}).update(values)
    lines = []
    for name, values in merged.items():
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {json.dumps(value)}" for key, value in values.items())
        lines.append("")
    path = tmp_path / "run.toml"
    path.write_text("\n".join(lines))
    return str(path)


def save_random_module(module: int, path, tiny_nets) -> str:
    torch.manual_seed(module)
    return save_weights(ModuleWeights.from_net(ModuleNet(module, tiny_nets)), str(path))


@pytest.fixture
def run_dir(tmp_path, tiny_nets):
    """Output directory holding untrained weights for both modules."""
    out = tmp_path / "runs"
    save_random_module(GRASP, out / "weights" / "grasp.pgwt", tiny_nets)
    save_random_module(PREGRASP, out / "weights" / "pregrasp.pgwt", tiny_nets)
    return out


# ----------------------------------------------------------------------------- parsing and exit codes


def test_unknown_kind_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["collect", "--kind", "bogus"])
    assert exc.value.code == 2
    assert "invalid choice" in capsys.readouterr().err


def test_common_options_follow_the_subcommand():
    args = build_parser().parse_args(["eval", "--seed", "4", "--output-dir", "out", "--baseline", "ours", "center_point"])
    assert (args.command, args.seed, args.output_dir) == ("eval", 4, "out")
    assert args.baseline == ["ours", "center_point"]


def test_unknown_config_key_exits_with_a_usage_code(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[planner]\ntheta = 0.5\n")
    assert main(["plan", "--config", str(path), "--output-dir", str(tmp_path)]) == 2


def test_pregrasp_training_without_grasp_weights(tmp_path, capsys):
    code = main(["train", "--module", "pregrasp", "--output-dir", str(tmp_path)])
    assert code == 3
    assert "MissingDependency" in capsys.readouterr().err


def test_training_without_a_dataset(tmp_path):
    assert main(["train", "--module", "grasp", "--output-dir", str(tmp_path)]) == 3


def test_corrupt_weights_exit_with_code_4(tmp_path, run_dir):
    (run_dir / "weights" / "grasp.pgwt").write_bytes(b"not a weight file at all")
    assert main(["plan", "--config", write_config(tmp_path), "--output-dir", str(run_dir)]) == 4


def test_weights_of_the_wrong_module_are_rejected(tmp_path, run_dir, tiny_nets):
    save_random_module(PREGRASP, run_dir / "weights" / "grasp.pgwt", tiny_nets)
    assert main(["plan", "--config", write_config(tmp_path), "--output-dir", str(run_dir)]) == 3


# ----------------------------------------------------------------------------- collect


def test_collect_meets_the_quotas_reproducibly(tmp_path):
    cfg = write_config(tmp_path)
    out = str(tmp_path / "runs")
    for name in ("first", "second"):
        code = main(
            ["collect", "--kind", "grasp", "--success", "1", "--failure", "3", "--seed", "7"]
            + ["--config", cfg, "--output-dir", out, "--data", str(tmp_path / name)]
        )
        assert code == 0

    first = json.loads((tmp_path / "first" / "manifest.json").read_text())
    second = json.loads((tmp_path / "second" / "manifest.json").read_text())
    assert (first["counts"]["success"], first["counts"]["failure"]) == (1, 3)
    assert first["kind"] == "grasp" and first["seed"] == 7
    assert len(first["config_hash"]) == 64
    assert [s["sha256"] for s in first["shards"]] == [s["sha256"] for s in second["shards"]]


# ----------------------------------------------------------------------------- plan


def test_plan_with_a_zero_threshold_grasps_directly(tmp_path, run_dir):
    cfg = write_config(tmp_path, planner={"theta_g": 0.0})
    code = main(
        ["plan", "--config", cfg, "--output-dir", str(run_dir), "--scene", "wall", "--category-set", "train-easy"]
    )
    assert code == 0
    trace = json.loads((run_dir / "plan" / "trace.json").read_text())
    assert trace["pushes"] == 0
    assert all(step["decision"] == "grasp" for step in trace["steps"])
    assert len(trace["config_hash"]) == 64


def test_plan_from_a_state_file_is_reproducible(tmp_path, run_dir):
    state = flat_state(build_scene("edge"), rectangle_object(0.3, 0.2), 0.6, 0.4)
    state_file = tmp_path / "state.json"
    state_file.write_text(json.dumps(state_to_json(state)))
    cfg = write_config(tmp_path, planner={"theta_g": 1.0})

    docs = []
    for name in ("a.json", "b.json"):
        trace_file = tmp_path / name
        args = ["plan", "--config", cfg, "--output-dir", str(run_dir), "--seed", "5"]
        assert main(args + ["--state", str(state_file), "--trace", str(trace_file)]) == 0
        docs.append(json.loads(trace_file.read_text()))
    assert docs[0] == docs[1]
    assert docs[0]["initial_state"] == json.loads(json.dumps(state_to_json(state)))


def test_plan_with_a_missing_state_file(tmp_path, run_dir):
    args = ["plan", "--config", write_config(tmp_path), "--output-dir", str(run_dir)]
    assert main(args + ["--state", str(tmp_path / "nowhere.json")]) == 3


# ----------------------------------------------------------------------------- eval


def test_direct_grasp_evaluation_needs_only_grasp_weights(tmp_path, run_dir):
    (run_dir / "weights" / "pregrasp.pgwt").unlink()
    code = main(
        ["eval", "--config", write_config(tmp_path), "--output-dir", str(run_dir), "--baseline", "no_pregrasp"]
    )
    assert code == 0
    report = json.loads((run_dir / "eval" / "eval.json").read_text())
    assert set(report["aggregates"]) == {"no_pregrasp"}
    assert report["trials"] == 1


def test_evaluating_all_baselines(tmp_path, run_dir, capsys):
    code = main(["eval", "--config", write_config(tmp_path), "--output-dir", str(run_dir), "--baseline", "all"])
    assert code == 0
    report = json.loads((run_dir / "eval" / "eval.json").read_text())
    assert len(report["aggregates"]) == 5
    with open(run_dir / "eval" / "eval.csv") as f:
        assert len(list(csv.DictReader(f))) == 2 * 5
    assert "ours_no_closed_loop" in capsys.readouterr().out


# ----------------------------------------------------------------------------- render


def environment_cloud(n: int = 256) -> LabeledPointCloud:
    rng = np.random.default_rng(0)
    points = np.column_stack([rng.uniform(0, 1, n), rng.uniform(0, 0.8, n), np.zeros(n)])
    return LabeledPointCloud(points=points, labels=np.zeros(n, dtype=np.uint8))


def test_environment_only_cloud_renders_in_one_colour():
    fig = affordance_figure(environment_cloud(), np.zeros(256), "top")
    fig.canvas.draw()
    colours = fig.axes[0].collections[0].get_facecolors()
    assert len(colours) == 256
    assert np.allclose(colours, colours[0])


def test_render_writes_a_png(tmp_path, run_dir):
    cloud_file = tmp_path / "env.pgrc"
    cloud_file.write_bytes(encode_cloud(environment_cloud()))
    out = tmp_path / "map.png"
    code = main(
        ["render", "--module", "2", "--output-dir", str(run_dir)]
        + ["--cloud", str(cloud_file), "--out", str(out)]
    )
    assert code == 0
    data = out.read_bytes()
    assert data.startswith(b"\x89PNG")
    assert b"config_hash=" in data


def test_render_camera_view_of_an_observed_scene(tmp_path, run_dir):
    code = main(
        ["render", "--module", "1", "--view", "camera", "--config", write_config(tmp_path)]
        + ["--output-dir", str(run_dir), "--scene", "slot", "--category-set", "train-hard"]
    )
    assert code == 0
    assert (run_dir / "render" / "affordance_m1_camera.png").exists()


def test_camera_view_needs_a_camera(tmp_path, run_dir):
    cloud_file = tmp_path / "env.pgrc"
    cloud_file.write_bytes(encode_cloud(environment_cloud()))
    args = ["render", "--module", "2", "--view", "camera", "--output-dir", str(run_dir)]
    assert main(args + ["--cloud", str(cloud_file)]) == 1


def test_camera_projection():
    camera = CameraPose(position=(0.0, 0.0, 1.0), look_at=(1.0, 0.0, 1.0))
    points = np.array([[1.0, 0.0, 1.0], [2.0, 0.0, 1.5], [1.0, 0.5, 1.0]])
    uv, depth = project_camera(points, camera)
    assert np.allclose(uv[0], 0.0) and depth[0] == pytest.approx(1.0)
    assert uv[1, 1] == pytest.approx(0.25) and depth[1] == pytest.approx(2.0)
    # +y lies to the left when looking along +x with z up
    assert uv[2, 0] == pytest.approx(-0.5)


# ----------------------------------------------------------------------------- relay


@pytest.mark.slow
@pytest.mark.integration
def test_relay_order_end_to_end(tmp_path, capsys):
    # every safe push counts as successful so the push quota is reachable with untrained weights
    cfg = write_config(tmp_path, relaytrain={"gain_rule": "absolute", "success_gain_threshold": -1.0})
    common = ["--config", cfg, "--output-dir", str(tmp_path / "runs"), "--seed", "7"]

    assert main(["collect", "--kind", "grasp", "--success", "2", "--failure", "4"] + common) == 0
    assert main(["train", "--module", "grasp"] + common) == 0
    assert "held-out critic AUC" in capsys.readouterr().out
    assert main(["collect", "--kind", "pregrasp", "--success", "3", "--failure", "0"] + common) == 0
    assert main(["train", "--module", "pregrasp"] + common) == 0

    runs = tmp_path / "runs"
    assert (runs / "weights" / "grasp.pgwt").exists() and (runs / "weights" / "pregrasp.pgwt").exists()
    with open(runs / "train" / "pregrasp" / "metrics_pregrasp.csv") as f:
        rows = list(csv.DictReader(f))
    assert [(r["epoch"], r["phase"]) for r in rows] == [
        ("1", "critic_proposal"),
        ("2", "critic_proposal"),
        ("1", "affordance"),
        ("2", "affordance"),
    ]
