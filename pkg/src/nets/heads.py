"""
Per-module networks: affordance head, conditional VAE proposal generator and
critic on top of the shared per-point encoder.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from src.config import NetsConfig

from .pointnet import PointEncoder

PREGRASP = 1
GRASP = 2
ACTION_DIMS = {PREGRASP: 2, GRASP: 6}


class MLPs(nn.Module):
    def __init__(self, input_dim: int, output_dim: int = 1, hidden_dim: int = 128):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.mlp1 = nn.Linear(input_dim, hidden_dim)
        self.mlp2 = nn.Linear(hidden_dim, output_dim)

    def forward(self, inputs: list[torch.Tensor]) -> torch.Tensor:
        net = torch.cat(inputs, dim=-1)
        return self.mlp2(F.leaky_relu(self.mlp1(net)))


class ActorEncoder(nn.Module):
    """Posterior q(z | f_s, f_p, f_M)."""

    def __init__(self, input_dim: int, latent_dim: int, hidden_dim: int = 128):
        super().__init__()
        self.mlp1 = nn.Linear(input_dim, hidden_dim)
        self.mlp2 = nn.Linear(hidden_dim, latent_dim)
        self.mlp3 = nn.Linear(latent_dim, latent_dim)
        self.get_mu = nn.Linear(latent_dim, latent_dim)
        self.get_logvar = nn.Linear(latent_dim, latent_dim)

    def forward(self, inputs: list[torch.Tensor]) -> tuple[torch.Tensor, torch.Tensor]:
        net = torch.cat(inputs, dim=-1)
        net = F.leaky_relu(self.mlp1(net))
        net = F.leaky_relu(self.mlp2(net))
        net = self.mlp3(net)
        return self.get_mu(net), self.get_logvar(net)


class ActorDecoder(nn.Module):
    def __init__(self, input_dim: int, output_dim: int, hidden_dim: int = 128):
        super().__init__()
        self.mlp = nn.Sequential(
            nn.Linear(input_dim, hidden_dim),
            nn.LeakyReLU(),
            nn.Linear(hidden_dim, output_dim),
        )

    def forward(self, inputs: list[torch.Tensor]) -> torch.Tensor:
        return self.mlp(torch.cat(inputs, dim=-1))


class ModuleNet(nn.Module):
    """
    Networks of one module: 1 for pre-grasp pushes, 2 for grasps.

    All head methods take gathered per-point rows: f_s [K, feature_dim],
    canonical contact coordinates [K, 3] and, where needed, raw actions
    [K, action_dim] (a planar displacement for module 1, the 6-value
    rotation for module 2).

    Args:
        module: 1 (pre-grasp) or 2 (grasp).
        cfg: Encoder and head widths.
    """

    def __init__(self, module: int, cfg: NetsConfig | None = None):
        super().__init__()
        if module not in ACTION_DIMS:
            raise ValueError(f"module must be 1 or 2, got {module}")
        cfg = cfg or NetsConfig()
        self.module = module
        self.cfg = cfg
        self.action_dim = ACTION_DIMS[module]
        feat, emb = cfg.feature_dim, cfg.embed_dim

        self.encoder = PointEncoder(cfg)
        self.mlp_cp = nn.Linear(3, emb)
        self.mlp_action = nn.Linear(self.action_dim, emb)
        self.affordance_head = MLPs(feat + emb, 1, cfg.hidden_dim)
        self.actor_encoder = ActorEncoder(feat + 2 * emb, cfg.latent_dim, cfg.hidden_dim)
        self.actor_decoder = ActorDecoder(feat + emb + cfg.latent_dim, self.action_dim, cfg.hidden_dim)
        self.critic_head = MLPs(feat + 2 * emb, 1, cfg.critic_hidden)

    def encode(self, xyz: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
        return self.encoder(xyz, labels)

    def affordance(self, f_s: torch.Tensor, contact: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.affordance_head([f_s, self.mlp_cp(contact)])).squeeze(-1)

    def propose(self, f_s: torch.Tensor, contact: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        return self.actor_decoder([f_s, self.mlp_cp(contact), z])

    def encode_action(
        self, f_s: torch.Tensor, contact: torch.Tensor, action: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        return self.actor_encoder([f_s, self.mlp_cp(contact), self.mlp_action(action)])

    def critic(self, f_s: torch.Tensor, contact: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        score = self.critic_head([f_s, self.mlp_cp(contact), self.mlp_action(action)]).squeeze(-1)
        if self.module == GRASP:
            return torch.sigmoid(score)
        return score

    def reconstruct(
        self, f_s: torch.Tensor, contact: torch.Tensor, action: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Encode an action, sample z by reparameterisation and decode it back."""
        mu, logvar = self.encode_action(f_s, contact, action)
        z = mu + torch.exp(logvar / 2) * torch.randn_like(mu)
        return self.propose(f_s, contact, z), mu, logvar

    def heads(self) -> dict[str, nn.Module]:
        """Sub-networks by training role."""
        return {
            "encoder": self.encoder,
            "proposal": nn.ModuleList([self.actor_encoder, self.actor_decoder]),
            "critic": self.critic_head,
            "affordance": self.affordance_head,
            "embeddings": nn.ModuleList([self.mlp_cp, self.mlp_action]),
        }
