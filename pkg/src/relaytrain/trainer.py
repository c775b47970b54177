"""
Two-phase relay training.

The grasp module trains first on simulated grasp outcomes. The pre-grasp
module then trains on push episodes whose targets come from the (frozen)
grasp module's score estimate before and after each push.

Each module trains in two phases:
    1. encoder, embeddings, critic (all records) and proposal cVAE
       (successful records only);
    2. everything frozen except the affordance head, which regresses the
       critic-averaged affordance labels of object points.
"""

import logging
import math
import os
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Optional, Sequence

import numpy as np
import torch
from scipy.stats import mannwhitneyu

from src.cloudgen import LabeledPointCloud, canonicalize
from src.config import RunConfig
from src.errors import EmptyDataset, NoPositiveSamples
from src.logger import MetricsLogger, log_function
from src.nets import GRASP, PREGRASP, ModuleNet, ModuleWeights, PointFeatures, action_to_raw, save_weights
from src.scenesim import SafetyEvent

from .labels import GraspScorer, NetworkScorer, affordance_label
from .losses import (
    PenaltyCoeffs,
    affordance_loss,
    critic1_loss,
    critic2_loss,
    gain_successful,
    penalty,
    proposal_loss,
)

if TYPE_CHECKING:
    from src.datagen import EpisodeRecord

logger = logging.getLogger("relaytrain")

METRIC_FIELDS = (
    "epoch",
    "phase",
    "critic_loss",
    "proposal_loss",
    "affordance_loss",
    "heldout_auc",
    "heldout_mae",
)
PHASE_HEADS = "critic_proposal"
PHASE_AFFORDANCE = "affordance"
MODULE_NAMES = {PREGRASP: "pregrasp", GRASP: "grasp"}


@dataclass
class _Samples:
    """Stacked training inputs: canonical clouds, contact indices, raw actions and targets."""

    xyz: torch.Tensor  # [B, N, 3]
    labels: torch.Tensor  # [B, N]
    index: torch.Tensor  # [B]
    action: torch.Tensor  # [B, action_dim]
    target: torch.Tensor  # [B] r (grasp) or p * gain (push)
    success: torch.Tensor  # [B] bool
    clouds: list[LabeledPointCloud]
    relay: Optional[torch.Tensor] = None  # [B, 3] c2_before, c2_after, p of pushes

    def __len__(self) -> int:
        return len(self.index)

    def subset(self, rows) -> "_Samples":
        rows = torch.as_tensor(np.asarray(rows), dtype=torch.long)
        return _Samples(
            xyz=self.xyz[rows],
            labels=self.labels[rows],
            index=self.index[rows],
            action=self.action[rows],
            target=self.target[rows],
            success=self.success[rows],
            clouds=[self.clouds[int(i)] for i in rows],
            relay=None if self.relay is None else self.relay[rows],
        )


def _stack(clouds: list[LabeledPointCloud], indices, actions, targets, success, relay=None) -> _Samples:
    sizes = {c.n_points for c in clouds}
    if len(sizes) != 1:
        raise ValueError(f"All training clouds must have the same size, got {sorted(sizes)}")
    return _Samples(
        xyz=torch.as_tensor(np.stack([c.points for c in clouds]), dtype=torch.float32),
        labels=torch.as_tensor(np.stack([c.labels.astype(np.int64) for c in clouds])),
        index=torch.as_tensor(indices, dtype=torch.long),
        action=torch.as_tensor(np.stack(actions), dtype=torch.float32),
        target=torch.as_tensor(targets, dtype=torch.float32),
        success=torch.as_tensor(success, dtype=torch.bool),
        clouds=clouds,
        relay=None if relay is None else torch.as_tensor(np.asarray(relay), dtype=torch.float32),
    )


def split_holdout(success: Sequence[bool], fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Deterministic stratified split into (train, holdout) row indices.

    Each class gives round(fraction * size) rows to the holdout but always
    keeps at least one row for training.
    """
    success = np.asarray(success, dtype=bool)
    rng = np.random.default_rng(seed)
    train, hold = [], []
    for cls in (True, False):
        rows = rng.permutation(np.flatnonzero(success == cls))
        n_hold = min(int(round(fraction * len(rows))), max(len(rows) - 1, 0))
        hold.extend(rows[:n_hold])
        train.extend(rows[n_hold:])
    return np.sort(np.asarray(train, dtype=int)), np.sort(np.asarray(hold, dtype=int))


def critic_auc(scores: Sequence[float], outcomes: Sequence[bool]) -> float:
    """Area under the ROC curve via the Mann-Whitney U statistic; NaN without both classes."""
    scores, outcomes = np.asarray(scores, dtype=float), np.asarray(outcomes, dtype=bool)
    pos, neg = scores[outcomes], scores[~outcomes]
    if len(pos) == 0 or len(neg) == 0:
        return float("nan")
    return float(mannwhitneyu(pos, neg).statistic / (len(pos) * len(neg)))


def _gather(net: ModuleNet, batch: _Samples) -> tuple[torch.Tensor, torch.Tensor]:
    """f_s and canonical contact rows at each sample's action point."""
    features = net.encode(batch.xyz, batch.labels)
    rows = torch.arange(len(batch))
    return features[rows, batch.index], batch.xyz[rows, batch.index]


def _critic_loss(net: ModuleNet, pred: torch.Tensor, batch: _Samples) -> torch.Tensor:
    if net.module == GRASP:
        return critic2_loss(pred, batch.target).mean()
    before, after, p = batch.relay.unbind(-1)
    return critic1_loss(pred, before, after, p).mean()


@torch.no_grad()
def _heldout_metrics(net: ModuleNet, hold: _Samples, batch_size: int) -> dict[str, float]:
    if len(hold) == 0:
        return {"heldout_auc": float("nan"), "heldout_mae": float("nan")}
    net.eval()
    preds = []
    for rows in torch.arange(len(hold)).split(batch_size):
        batch = hold.subset(rows)
        f_s, contact = _gather(net, batch)
        preds.append(net.critic(f_s, contact, batch.action))
    pred = torch.cat(preds)
    mae = float(torch.abs(pred - hold.target).mean())
    if net.module == GRASP:
        return {"heldout_auc": critic_auc(pred.numpy(), hold.success.numpy()), "heldout_mae": mae}
    return {"heldout_auc": float("nan"), "heldout_mae": mae}


def _json_row(row: dict[str, Any]) -> dict[str, Any]:
    """Metric row with NaN replaced by None, so weight metadata stays comparable."""
    return {k: None if isinstance(v, float) and math.isnan(v) else v for k, v in row.items()}


def _checkpoint(net: ModuleNet, output_dir: Optional[str], phase: str, epoch: int, every: int) -> None:
    if output_dir is None or every <= 0 or epoch % every:
        return
    name = f"{MODULE_NAMES[net.module]}_{phase}_{epoch:03d}.pgwt"
    save_weights(ModuleWeights.from_net(net, phase=phase, epoch=epoch), os.path.join(output_dir, "checkpoints", name))


def _train_heads(
    net: ModuleNet,
    train: _Samples,
    hold: _Samples,
    cfg: RunConfig,
    metrics: Optional[MetricsLogger],
    history: list[dict[str, Any]],
    output_dir: Optional[str],
) -> None:
    tc = cfg.relaytrain
    for p in net.affordance_head.parameters():
        p.requires_grad_(False)
    params = [p for p in net.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(params, lr=tc.learning_rate)
    generator = torch.Generator().manual_seed(tc.seed)

    for epoch in range(1, tc.epochs + 1):
        net.train()
        critic_total = proposal_total = 0.0
        n_batches = 0
        for rows in torch.randperm(len(train), generator=generator).split(tc.batch_size):
            batch = train.subset(rows)
            f_s, contact = _gather(net, batch)
            loss_c = _critic_loss(net, net.critic(f_s, contact, batch.action), batch)
            loss = loss_c
            loss_p = torch.zeros(())
            if batch.success.any():
                s = batch.success
                recon, mu, logvar = net.reconstruct(f_s[s], contact[s], batch.action[s])
                loss_p = proposal_loss(net.module, recon, batch.action[s], mu, logvar, tc.kl_weight).mean()
                loss = loss + loss_p
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            critic_total += float(loss_c)
            proposal_total += float(loss_p)
            n_batches += 1

        row = {
            "epoch": epoch,
            "phase": PHASE_HEADS,
            "critic_loss": critic_total / n_batches,
            "proposal_loss": proposal_total / n_batches,
            **_heldout_metrics(net, hold, tc.batch_size),
        }
        history.append(row)
        if metrics:
            metrics.log(**row)
        logger.debug(f"{MODULE_NAMES[net.module]} {PHASE_HEADS} epoch {epoch}: {row}")
        _checkpoint(net, output_dir, PHASE_HEADS, epoch, tc.checkpoint_every)


def _affordance_targets(net: ModuleNet, samples: _Samples, cfg: RunConfig, offset: int = 0):
    """Rows, contacts and labels of up to affordance_points object points per cloud."""
    tc = cfg.relaytrain
    push_max = cfg.scenesim.push_max
    net.eval()
    rows, contacts, targets = [], [], []
    for i, cloud in enumerate(samples.clouds):
        with torch.no_grad():
            per_point = net.encode(samples.xyz[i : i + 1], samples.labels[i : i + 1])[0]
        features = PointFeatures(per_point=per_point, cloud=cloud)
        candidates = cloud.object_indices
        rng = np.random.default_rng([tc.seed, offset + i])
        points = rng.choice(candidates, size=min(tc.affordance_points, len(candidates)), replace=False)
        for p in points:
            targets.append(affordance_label(features, int(p), net, tc.n_i, [tc.seed, offset + i, int(p)], push_max))
        rows.append(features.rows(points))
        contacts.append(features.contacts(points))
    if not rows:
        return torch.zeros((0, net.cfg.feature_dim)), torch.zeros((0, 3)), torch.zeros(0)
    return torch.cat(rows), torch.cat(contacts), torch.as_tensor(targets, dtype=torch.float32)


def _train_affordance(
    net: ModuleNet,
    train: _Samples,
    hold: _Samples,
    cfg: RunConfig,
    metrics: Optional[MetricsLogger],
    history: list[dict[str, Any]],
    output_dir: Optional[str],
) -> None:
    tc = cfg.relaytrain
    rows, contacts, targets = _affordance_targets(net, train, cfg)
    h_rows, h_contacts, h_targets = _affordance_targets(net, hold, cfg, offset=len(train))

    for p in net.parameters():
        p.requires_grad_(False)
    for p in net.affordance_head.parameters():
        p.requires_grad_(True)
    optimizer = torch.optim.Adam(net.affordance_head.parameters(), lr=tc.learning_rate)
    generator = torch.Generator().manual_seed(tc.seed + 1)

    for epoch in range(1, tc.epochs + 1):
        net.train()
        total, n_batches = 0.0, 0
        for batch in torch.randperm(len(targets), generator=generator).split(tc.batch_size):
            loss = affordance_loss(net.affordance(rows[batch], contacts[batch]), targets[batch]).mean()
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss)
            n_batches += 1

        with torch.no_grad():
            net.eval()
            mae = float(affordance_loss(net.affordance(h_rows, h_contacts), h_targets).mean()) if len(h_targets) else float("nan")
        row = {
            "epoch": epoch,
            "phase": PHASE_AFFORDANCE,
            "affordance_loss": total / max(n_batches, 1),
            "heldout_mae": mae,
        }
        history.append(row)
        if metrics:
            metrics.log(**row)
        _checkpoint(net, output_dir, PHASE_AFFORDANCE, epoch, tc.checkpoint_every)

    for p in net.parameters():
        p.requires_grad_(True)
    net.eval()


def _fit(
    module: int,
    samples: _Samples,
    cfg: RunConfig,
    output_dir: Optional[str],
    metadata: dict[str, Any],
) -> ModuleWeights:
    tc = cfg.relaytrain
    name = MODULE_NAMES[module]
    train_rows, hold_rows = split_holdout(samples.success.numpy(), tc.holdout_fraction, tc.seed)
    train, hold = samples.subset(train_rows), samples.subset(hold_rows)
    if not bool(train.success.any()):
        raise NoPositiveSamples(f"No successful {name} records to train the proposal generator on")
    logger.info(
        f"Training {name} module on {len(train)} records ({int(train.success.sum())} successful), "
        f"{len(hold)} held out"
    )

    torch.manual_seed(tc.seed)
    net = ModuleNet(module, cfg.nets)
    history: list[dict[str, Any]] = []
    metrics = MetricsLogger(os.path.join(output_dir, f"metrics_{name}.csv"), METRIC_FIELDS) if output_dir else None
    try:
        _train_heads(net, train, hold, cfg, metrics, history, output_dir)
        _train_affordance(net, train, hold, cfg, metrics, history, output_dir)
    finally:
        if metrics:
            metrics.close()

    final = _heldout_metrics(net, hold, tc.batch_size)
    logger.info(f"{name} module trained: held-out AUC {final['heldout_auc']:.3f}, MAE {final['heldout_mae']:.4f}")
    return ModuleWeights.from_net(
        net,
        seed=tc.seed,
        epochs=tc.epochs,
        records=len(samples),
        heldout=len(hold),
        metrics=_json_row(final),
        history=[_json_row(row) for row in history],
        **metadata,
    )


@log_function(logger_name="relaytrain", log_execution_time=True)
def train_grasp_module(
    records: Sequence["EpisodeRecord"],
    cfg: Optional[RunConfig] = None,
    output_dir: Optional[str] = None,
    dataset_hash: str = "",
) -> ModuleWeights:
    """
    Train the grasp module: critic on every record, proposals on successful
    grasps, then the affordance head on critic-averaged labels.

    Args:
        records: Grasp episodes (clouds are regenerated from their seeds).
        cfg: Run configuration; relaytrain, nets and cloudgen groups are used.
        output_dir: Where metrics_grasp.csv and checkpoints/ go (None: no files).
        dataset_hash: Identifier of the dataset, stored in the weight metadata.

    Returns:
        ModuleWeights: Trained weights with the training metadata.

    Raises:
        EmptyDataset: If there are no records.
        NoPositiveSamples: If no record is a successful grasp.
    """
    cfg = cfg or RunConfig()
    if not records:
        raise EmptyDataset("Grasp dataset is empty")
    clouds, indices, actions = [], [], []
    for record in records:
        cloud = canonicalize(record.cloud_before(cfg.cloudgen))
        clouds.append(cloud)
        indices.append(record.point_index)
        actions.append(action_to_raw(record.action))
    targets = [float(record.r) for record in records]
    samples = _stack(clouds, indices, actions, targets, [record.r == 1 for record in records])
    return _fit(GRASP, samples, cfg, output_dir, {"dataset_hash": dataset_hash})


def push_targets(
    records: Sequence["EpisodeRecord"],
    scorer: GraspScorer,
    cfg: Optional[RunConfig] = None,
) -> list[tuple[float, float, float, bool]]:
    """
    Relay labels of push episodes: (c2_before, c2_after, p, success) per record.

    c2_after falls back to c2_before (zero gain) when the push carries no
    reward (p = 0) or no after-observation exists.
    """
    cfg = cfg or RunConfig()
    tc = cfg.relaytrain
    coeffs = PenaltyCoeffs.from_config(tc)
    out = []
    for i, record in enumerate(records):
        o = record.outcome
        p = penalty(o.slip, o.rotation, o.safety, coeffs)
        before = scorer(record.cloud_before(cfg.cloudgen), [tc.seed, i, 0])
        after = before
        if p > 0.0:
            cloud_after = record.cloud_after(cfg.cloudgen)
            if cloud_after is not None:
                after = scorer(cloud_after, [tc.seed, i, 1])
        success = o.safety is SafetyEvent.NONE and gain_successful(before, after, tc)
        out.append((before, after, p, bool(success)))
    return out


@log_function(logger_name="relaytrain", log_execution_time=True)
def train_pregrasp_module(
    records: Sequence["EpisodeRecord"],
    grasp: ModuleWeights | ModuleNet | GraspScorer,
    cfg: Optional[RunConfig] = None,
    output_dir: Optional[str] = None,
    dataset_hash: str = "",
) -> ModuleWeights:
    """
    Train the pre-grasp module against the frozen grasp module.

    Every record is labelled with p * (c2_after - c2_before); records whose
    score gain passes the configured gain rule train the proposal generator.

    Args:
        records: Push episodes.
        grasp: Trained grasp weights, a grasp ModuleNet, or any callable
            (cloud, seed) -> grasp score.
        cfg: Run configuration.
        output_dir: Where metrics_pregrasp.csv and checkpoints/ go.
        dataset_hash: Identifier of the dataset.

    Returns:
        ModuleWeights: Trained pre-grasp weights.

    Raises:
        EmptyDataset: If there are no records.
        NoPositiveSamples: If no record counts as a successful push.
    """
    cfg = cfg or RunConfig()
    tc = cfg.relaytrain
    if not records:
        raise EmptyDataset("Pre-grasp dataset is empty")
    if isinstance(grasp, ModuleWeights):
        grasp = grasp.to_net()
    scorer = NetworkScorer(grasp, tc.n2, tc.m2) if isinstance(grasp, ModuleNet) else grasp

    labels = push_targets(records, scorer, cfg)
    clouds, indices, actions, targets, success = [], [], [], [], []
    for record, (before, after, p, ok) in zip(records, labels):
        clouds.append(canonicalize(record.cloud_before(cfg.cloudgen)))
        indices.append(record.point_index)
        actions.append(action_to_raw(record.action))
        targets.append(p * (after - before))
        success.append(ok)
    logger.info(
        f"Labelled {len(records)} pushes: {sum(success)} successful, "
        f"mean target {float(np.mean(targets)):.4f}"
    )
    samples = _stack(clouds, indices, actions, targets, success, relay=[label[:3] for label in labels])
    gain = [after - before for before, after, _, _ in labels]
    return _fit(
        PREGRASP,
        samples,
        cfg,
        output_dir,
        {"dataset_hash": dataset_hash, "mean_gain": float(np.mean(gain)) if gain else math.nan},
    )
