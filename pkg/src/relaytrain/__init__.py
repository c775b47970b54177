"""
Relay training: push penalty, losses, the grasp-score estimate and the
two-phase training of the grasp module followed by the pre-grasp module.
"""

from .labels import (
    GraspScorer,
    NetworkScorer,
    affordance_label,
    candidate_scores,
    estimate_c2,
    top_object_points,
)
from .losses import (
    PRED_EPS,
    PenaltyCoeffs,
    affordance_loss,
    critic1_loss,
    critic2_loss,
    gain_successful,
    geometric_loss,
    kl_divergence,
    penalty,
    proposal_loss,
)
from .trainer import (
    METRIC_FIELDS,
    critic_auc,
    push_targets,
    split_holdout,
    train_grasp_module,
    train_pregrasp_module,
)

__all__ = [
    # losses
    "PRED_EPS",
    "PenaltyCoeffs",
    "penalty",
    "critic1_loss",
    "critic2_loss",
    "kl_divergence",
    "geometric_loss",
    "proposal_loss",
    "affordance_loss",
    "gain_successful",
    # labels
    "GraspScorer",
    "NetworkScorer",
    "estimate_c2",
    "affordance_label",
    "candidate_scores",
    "top_object_points",
    # training
    "METRIC_FIELDS",
    "train_grasp_module",
    "train_pregrasp_module",
    "push_targets",
    "split_holdout",
    "critic_auc",
]
