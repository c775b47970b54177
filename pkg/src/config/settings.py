"""
Configuration settings for the pre-grasp relay project.

Every parameter group is a dataclass whose field defaults are the documented
desk-scale defaults. A run configuration aggregates the groups and can be
overridden from a TOML document (one table per group).
"""

import os
from dataclasses import dataclass, field

from dotenv import load_dotenv

# Load environment variables at module import time (PGR_SEED, PGR_OUTPUT_DIR)
load_dotenv()


@dataclass
class SceneSimConfig:
    """Table geometry and push-dynamics constants of the planar simulator"""

    # Table (meters)
    table_width: float = 1.2
    table_depth: float = 0.8
    table_thickness: float = 0.05
    table_height: float = 0.75  # floor sits this far below the table top

    # Push dynamics
    k_rot: float = 1.0  # dipole yaw gain
    k_wall: float = 0.5  # rad of tilt per meter of blocked push
    tilt_max: float = 0.5  # rad
    push_steps: int = 100  # integrator sub-steps per push
    push_max: float = 0.4  # m, longest admissible push
    gripper_radius: float = 0.01  # pusher finger radius

    # Tolerances
    eps_contact: float = 0.005
    eps_disp: float = 0.001


@dataclass
class GraspOracleConfig:
    """Analytic grasp-success oracle parameters"""

    clearance_min: float = 0.015  # free gap needed under the rim
    overhang_min: float = 0.03
    gripper_opening: float = 0.085
    finger_length: float = 0.04
    finger_thickness: float = 0.01
    finger_width: float = 0.02
    finger_margin: float = 0.005  # gap between pad and object before closing
    grip_depth: float = 0.015  # pinch centre lies this far past the contact
    approach_distance: float = 0.1  # pre-grasp standoff swept by the pads
    section_step: float = 0.0005  # sampling step of the object section

    # Lift test stand-ins (honored by construction, kept for traceability)
    close_descent: float = 0.02
    hold_duration: float = 1.0
    lift_min: float = 0.1
    rotation_max: float = 0.3


@dataclass
class CloudGenConfig:
    """Virtual depth-camera parameters"""

    n_points: int = 2048
    min_elevation_deg: float = 35.0
    distance_min: float = 3.0
    distance_max: float = 5.0
    object_ray_fraction: float = 0.5  # share of rays aimed at the object box
    window_half: float = 0.6  # half-size of the observation window
    ray_batch: int = 4096
    max_batches: int = 64
    camera_retries: int = 5  # fresh cameras tried on occlusion
    normal_neighbours: int = 16


@dataclass
class NetsConfig:
    """Encoder and head widths"""

    feature_dim: int = 160
    embed_dim: int = 32
    latent_dim: int = 32
    hidden_dim: int = 128
    critic_hidden: int = 32
    sa_centroids: tuple[int, int] = (512, 128)
    sa_radii: tuple[float, float] = (0.1, 0.4)
    sa_neighbours: int = 32


@dataclass
class TrainConfig:
    """Relay training schedule, label estimation and loss coefficients"""

    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 50  # per phase
    n2: int = 10  # top affordance points for the grasp estimate
    m2: int = 10  # latents per point for the grasp estimate
    n_i: int = 10  # proposals averaged per affordance label
    affordance_points: int = 32  # object points labelled per cloud in phase 2
    success_gain_threshold: float = 0.4
    gain_rule: str = "relative_floor"  # or "absolute"
    gain_floor: float = 0.1
    penalty_a: float = 0.1  # m
    penalty_b: float = 0.5  # rad
    kl_weight: float = 1.0
    holdout_fraction: float = 0.1
    checkpoint_every: int = 10
    seed: int = 0


@dataclass
class DataGenConfig:
    """Dataset collection quotas and samplers"""

    n_success: int = 2000
    n_failure: int = 6000
    scenes: tuple[str, ...] = ("edge", "wall", "slope", "slot")
    categories: tuple[str, ...] = (
        "tablet",
        "keyboard",
        "book",
        "plate",
        "phone",
        "block",
        "can",
        "box",
        "mug",
        "bottle",
    )
    hard_categories: tuple[str, ...] = ("tablet", "keyboard", "book", "plate", "phone")
    shapes_per_category: int = 10
    p_on_feature: float = 0.5
    directed_fraction: float = 0.3
    directed_sigma: float = 0.3  # rad
    push_mean: float = 0.15
    push_std: float = 0.05
    feature_distance_min: float = 0.05
    feature_distance_max: float = 0.5
    max_attempts: int = 200_000
    chunk_size: int = 64
    workers: int = 1
    shard_size: int = 4096
    embed_clouds: bool = False


@dataclass
class PlannerConfig:
    """Inference-time selection and closed-loop parameters"""

    theta_g: float = 0.8
    n1: int = 10
    m1: int = 10
    n2: int = 10
    m2: int = 10
    max_iterations: int = 5  # K
    seed: int = 0


@dataclass
class EvalConfig:
    """Evaluation protocol"""

    scenes: tuple[str, ...] = ("edge", "wall", "slope", "slot", "multi")
    category_sets: tuple[str, ...] = ("train-hard", "test-hard", "train-easy", "test-easy")
    baselines: tuple[str, ...] = (
        "no_pregrasp",
        "random_direction",
        "center_point",
        "ours_no_closed_loop",
        "ours",
    )
    trials: int = 200
    theta_grid: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    workers: int = 1


@dataclass
class RunConfig:
    """Aggregate configuration for one CLI run"""

    seed: int = 0
    output_dir: str = os.getenv("PGR_OUTPUT_DIR", "runs")
    scenesim: SceneSimConfig = field(default_factory=SceneSimConfig)
    grasp_oracle: GraspOracleConfig = field(default_factory=GraspOracleConfig)
    cloudgen: CloudGenConfig = field(default_factory=CloudGenConfig)
    nets: NetsConfig = field(default_factory=NetsConfig)
    relaytrain: TrainConfig = field(default_factory=TrainConfig)
    datagen: DataGenConfig = field(default_factory=DataGenConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    evalharness: EvalConfig = field(default_factory=EvalConfig)
