"""
Penalty and loss functions of relay training.

Loss helpers accept floats or tensors and return per-sample tensors; the
trainers take the batch mean.
"""

import math
from dataclasses import dataclass

import torch

from src.config import TrainConfig
from src.nets import GRASP, PREGRASP, geodesic_distance, gram_schmidt
from src.scenesim import SafetyEvent

PRED_EPS = 1e-7


@dataclass(frozen=True)
class PenaltyCoeffs:
    """Displacement scale a (m) and rotation scale b (rad) of the push penalty."""

    a: float = 0.1
    b: float = 0.5

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"Penalty coefficients must be positive, got a={self.a}, b={self.b}")

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "PenaltyCoeffs":
        return cls(a=cfg.penalty_a, b=cfg.penalty_b)


def penalty(slip: float, rotation, safety: SafetyEvent, coeffs: PenaltyCoeffs = PenaltyCoeffs()) -> float:
    """
    Multiplicative push penalty p = p_d * p_r * p_s in [0, 1].

    p_d = exp(-slip / a), p_r = exp(-|rotation| / b), p_s = 0 for any safety
    event and 1 otherwise.
    """
    if slip < 0:
        raise ValueError(f"slip must be non-negative, got {slip}")
    if SafetyEvent(safety) is not SafetyEvent.NONE:
        return 0.0
    magnitude = math.sqrt(sum(float(v) ** 2 for v in rotation))
    return math.exp(-slip / coeffs.a) * math.exp(-magnitude / coeffs.b)


def _t(value) -> torch.Tensor:
    return value if isinstance(value, torch.Tensor) else torch.as_tensor(value, dtype=torch.float64)


def critic1_loss(pred, c2_before, c2_after, p) -> torch.Tensor:
    """L1 distance between the push critic and the penalised grasp-score gain."""
    return torch.abs(_t(pred) - _t(p) * (_t(c2_after) - _t(c2_before)))


def critic2_loss(pred, r) -> torch.Tensor:
    """Binary cross-entropy of the grasp critic, predictions clamped to [1e-7, 1 - 1e-7]."""
    pred = torch.clamp(_t(pred), PRED_EPS, 1 - PRED_EPS)
    r = _t(r).to(pred.dtype)
    return -(r * torch.log(pred) + (1 - r) * torch.log(1 - pred))


def kl_divergence(mu, logvar) -> torch.Tensor:
    """KL(N(mu, exp(logvar)) || N(0, 1)) summed over the latent dimension."""
    mu, logvar = _t(mu), _t(logvar)
    return 0.5 * torch.sum(mu * mu + torch.exp(logvar) - 1 - logvar, dim=-1)


def geometric_loss(module: int, recon, truth) -> torch.Tensor:
    """Euclidean distance of displacements (module 1) or geodesic angle of rotations (module 2)."""
    recon, truth = _t(recon), _t(truth).to(_t(recon).dtype)
    if module == PREGRASP:
        return torch.linalg.vector_norm(recon - truth, dim=-1)
    if module == GRASP:
        return geodesic_distance(gram_schmidt(truth), gram_schmidt(recon))
    raise ValueError(f"module must be 1 or 2, got {module}")


def proposal_loss(module: int, recon, truth, mu, logvar, kl_weight: float = 1.0) -> torch.Tensor:
    """Geometric reconstruction loss plus the weighted KL term of the proposal cVAE."""
    return geometric_loss(module, recon, truth) + kl_weight * kl_divergence(mu, logvar)


def affordance_loss(pred, target) -> torch.Tensor:
    return torch.abs(_t(pred) - _t(target))


def gain_successful(c2_before: float, c2_after: float, cfg: TrainConfig = TrainConfig()) -> bool:
    """
    Whether a push raised the grasp score enough to count as a successful pre-grasp.

    "relative_floor": gain > threshold * max(before, floor).
    "absolute":       gain > threshold.
    """
    gain = c2_after - c2_before
    if cfg.gain_rule == "absolute":
        return gain > cfg.success_gain_threshold
    if cfg.gain_rule == "relative_floor":
        return gain > cfg.success_gain_threshold * max(c2_before, cfg.gain_floor)
    raise ValueError(f"Unknown gain rule {cfg.gain_rule!r}")
