"""Training schedule: Adam over prototypes, similarity weights and head,
with learning-rate decay, periodic prototype projection, and a final phase
that fixes the prototypes and retrains a non-negative head.

Texts are embedded once up front (the encoder is frozen); the loop itself
is pure numerical optimization and fully deterministic under its seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDatasetError, FormatError, IoError, MissingClassSamplesError
from .losses import LossBreakdown, LossConfig, loss_gradients, total_loss
from .model import (
    PrototypeModel,
    init_model,
    load_checkpoint,
    project_prototypes,
    save_checkpoint,
    softmax,
)
from .optim import AdamState, adam_step, lr_schedule
from .rng import SplitMix64
from .similarity import L2Mode, SimilarityKind

_SHUFFLE_STREAM = 0x9D8F3C1A55AA55AA  # decorrelates shuffling from init draws


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    lr: float = 0.005
    weight_decay: float = 0.0005
    lr_factor: float = 0.5
    lr_patience_epochs: int = 30
    projection_every: int = 5
    projection_start_fraction: float = 0.5
    final_phase_epochs: int = 3
    prototypes_per_class: int = 10
    seed: int = 0
    sim_kind: SimilarityKind = SimilarityKind.WEIGHTED_COSINE
    l2_mode: L2Mode = L2Mode.CORRECTED
    loss: LossConfig = field(default_factory=LossConfig)
    head_mode: str = "prototype"  # "prototype" or "fc_only"

    def __post_init__(self):
        if self.final_phase_epochs >= self.epochs:
            raise ValueError("final_phase_epochs must be smaller than epochs")
        if self.projection_every < 1:
            raise ValueError("projection_every must be >= 1")
        if not 0.0 <= self.projection_start_fraction <= 1.0:
            raise ValueError("projection_start_fraction must be in [0, 1]")
        if self.head_mode not in ("prototype", "fc_only"):
            raise ValueError(f"unknown head_mode: {self.head_mode}")

    def as_dict(self) -> dict:
        d = {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "weight_decay": self.weight_decay,
            "lr_factor": self.lr_factor,
            "lr_patience_epochs": self.lr_patience_epochs,
            "projection_every": self.projection_every,
            "projection_start_fraction": self.projection_start_fraction,
            "final_phase_epochs": self.final_phase_epochs,
            "prototypes_per_class": self.prototypes_per_class,
            "seed": self.seed,
            "sim_kind": SimilarityKind(self.sim_kind).value,
            "l2_mode": L2Mode(self.l2_mode).value,
            "head_mode": self.head_mode,
            "loss": {
                "lambda_cluster": self.loss.lambda_cluster,
                "lambda_separation": self.loss.lambda_separation,
                "lambda_distribution": self.loss.lambda_distribution,
                "lambda_diversity": self.loss.lambda_diversity,
                "lambda_l1": self.loss.lambda_l1,
                "separation_margin": self.loss.separation_margin,
                "diversity_threshold": self.loss.diversity_threshold,
            },
        }
        return d


@dataclass
class EpochRecord:
    epoch: int
    phase: str  # warm | projection | final
    lr: float
    train_loss: LossBreakdown
    val_loss: float
    val_accuracy: float

    def as_dict(self) -> dict:
        d = {"epoch": self.epoch, "phase": self.phase, "lr": self.lr}
        d.update(self.train_loss.as_dict())
        d["val_loss"] = self.val_loss
        d["val_accuracy"] = self.val_accuracy
        return d


TrainHistory = list[EpochRecord]


@dataclass
class LinearTextModel:
    """CE-only linear head on raw embeddings; the no-prototype baseline."""

    weights: np.ndarray  # (C, dim)
    num_classes: int
    config_echo: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def logits_batch(self, Z: np.ndarray) -> np.ndarray:
        return Z @ self.weights.T


def _logits_batch(model, Z: np.ndarray) -> np.ndarray:
    if isinstance(model, PrototypeModel):
        return model.similarities(Z) @ model.head.T
    return model.logits_batch(Z)


def _embed_split(provider, split) -> tuple[list[str], np.ndarray, np.ndarray]:
    texts = [text for text, _ in split]
    labels = np.array([label for _, label in split], dtype=np.int64)
    Z = np.stack(provider.embed_batch(texts))
    return texts, Z, labels


def _check_splits(train_split, val_split) -> int:
    if not train_split:
        raise EmptyDatasetError("training split is empty")
    if not val_split:
        raise EmptyDatasetError("validation split is empty")
    labels = sorted({label for _, label in train_split})
    num_classes = max(labels) + 1
    missing = set(range(num_classes)) - set(labels)
    if missing:
        raise MissingClassSamplesError(f"classes missing from training split: {sorted(missing)}")
    return num_classes


def train(
    train_split: list[tuple[str, int]],
    val_split: list[tuple[str, int]],
    provider,
    config: TrainConfig,
    checkpoint_path: str | None = None,
    save_projection_checkpoints: bool = False,
):
    """Run the full schedule; returns (model, history).

    `checkpoint_path` writes the final model there, and additionally after
    every projection epoch when `save_projection_checkpoints` is set.
    """
    num_classes = _check_splits(train_split, val_split)
    train_texts, train_Z, train_y = _embed_split(provider, train_split)
    _, val_Z, val_y = _embed_split(provider, val_split)
    if config.head_mode == "fc_only":
        model, history = _train_fc_only(train_Z, train_y, val_Z, val_y, num_classes, config)
        if checkpoint_path:
            save_linear_checkpoint(model, checkpoint_path)
        return model, history

    model = init_model(
        list(zip(train_Z, train_y)),
        num_classes,
        config.prototypes_per_class,
        config.sim_kind,
        config.l2_mode,
        config.seed,
    )
    model.config_echo = config.as_dict()
    train_pairs = list(zip(train_Z, (int(v) for v in train_y)))
    val_pairs = list(zip(val_Z, (int(v) for v in val_y)))

    shuffle_rng = SplitMix64(config.seed ^ _SHUFFLE_STREAM)
    opt = AdamState()
    lr = config.lr
    history: TrainHistory = []
    final_from = config.epochs - config.final_phase_epochs + 1
    projection_start = config.projection_start_fraction * config.epochs
    prototypes_frozen = False

    for epoch in range(1, config.epochs + 1):
        in_final = epoch >= final_from
        if in_final and not prototypes_frozen:
            project_prototypes(model, train_pairs, train_texts)
            prototypes_frozen = True

        order = list(range(len(train_pairs)))
        shuffle_rng.shuffle(order)
        batch_losses: list[tuple[int, LossBreakdown]] = []
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = [train_pairs[i] for i in idx]
            breakdown = total_loss(batch, model, config.loss)
            batch_losses.append((len(batch), breakdown))
            grads = loss_gradients(batch, model, config.loss)
            P = model.prototype_matrix
            params = {"prototypes": P, "raw_weights": model.sim_weights.raw, "head": model.head}
            if in_final:
                step_grads = {"head": grads.head}
            else:
                step_grads = {
                    "prototypes": grads.prototypes,
                    "raw_weights": grads.raw_weights,
                    "head": grads.head,
                }
            adam_step(params, step_grads, opt, lr, config.weight_decay)
            if not in_final:
                for j, proto in enumerate(model.prototypes):
                    proto.vector = P[j]
                if config.sim_kind == SimilarityKind.WEIGHTED_COSINE:
                    np.maximum(model.sim_weights.raw, 0.0, out=model.sim_weights.raw)
            if in_final:
                np.maximum(model.head, 0.0, out=model.head)

        phase = "final" if in_final else "warm"
        if (
            not in_final
            and epoch >= projection_start
            and epoch % config.projection_every == 0
        ):
            project_prototypes(model, train_pairs, train_texts)
            phase = "projection"
            if checkpoint_path and save_projection_checkpoints:
                save_checkpoint(model, checkpoint_path)

        n_total = sum(n for n, _ in batch_losses)
        mean_loss = LossBreakdown(
            **{
                key: sum(n * getattr(b, key) for n, b in batch_losses) / n_total
                for key in ("ce", "clst", "sep", "dist", "divers", "l1", "total")
            }
        )
        val_breakdown = total_loss(val_pairs, model, config.loss)
        val_acc, _ = evaluate_embedded(model, val_Z, val_y)
        history.append(
            EpochRecord(
                epoch=epoch,
                phase=phase,
                lr=lr,
                train_loss=mean_loss,
                val_loss=val_breakdown.total,
                val_accuracy=val_acc,
            )
        )
        lr = lr_schedule(
            [r.val_loss for r in history], lr, config.lr_patience_epochs, config.lr_factor
        )

    if checkpoint_path:
        save_checkpoint(model, checkpoint_path)
    return model, history


def _train_fc_only(train_Z, train_y, val_Z, val_y, num_classes, config: TrainConfig):
    dim = train_Z.shape[1]
    model = LinearTextModel(
        weights=np.zeros((num_classes, dim)), num_classes=num_classes, config_echo=config.as_dict()
    )
    shuffle_rng = SplitMix64(config.seed ^ _SHUFFLE_STREAM)
    opt = AdamState()
    lr = config.lr
    history: TrainHistory = []

    def ce_and_grad(Z, y):
        logits = model.logits_batch(Z)
        probs = softmax(logits)
        n = len(y)
        ce = float(-np.log(probs[np.arange(n), y]).mean())
        onehot = np.zeros_like(probs)
        onehot[np.arange(n), y] = 1.0
        return ce, ((probs - onehot) / n).T @ Z

    for epoch in range(1, config.epochs + 1):
        order = list(range(len(train_y)))
        shuffle_rng.shuffle(order)
        batch_ces: list[tuple[int, float]] = []
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            ce, grad = ce_and_grad(train_Z[idx], train_y[idx])
            batch_ces.append((len(idx), ce))
            adam_step({"weights": model.weights}, {"weights": grad}, opt, lr, config.weight_decay)
        n_total = sum(n for n, _ in batch_ces)
        train_ce = sum(n * ce for n, ce in batch_ces) / n_total
        val_ce, _ = ce_and_grad(val_Z, val_y)
        val_acc, _ = evaluate_embedded(model, val_Z, val_y)
        history.append(
            EpochRecord(
                epoch=epoch,
                phase="warm",
                lr=lr,
                train_loss=LossBreakdown(train_ce, 0.0, 0.0, 0.0, 0.0, 0.0, train_ce),
                val_loss=val_ce,
                val_accuracy=val_acc,
            )
        )
        lr = lr_schedule(
            [r.val_loss for r in history], lr, config.lr_patience_epochs, config.lr_factor
        )
    return model, history


def evaluate_embedded(model, Z: np.ndarray, labels: np.ndarray) -> tuple[float, list[dict]]:
    logits = _logits_batch(model, Z)
    probs = softmax(logits)
    predicted = logits.argmax(axis=1)
    records = [
        {
            "index": i,
            "label": int(labels[i]),
            "predicted": int(predicted[i]),
            "correct": bool(predicted[i] == labels[i]),
            "prob_predicted": float(probs[i, predicted[i]]),
        }
        for i in range(len(labels))
    ]
    accuracy = float((predicted == labels).mean())
    return accuracy, records


def evaluate(model, provider, split: list[tuple[str, int]]) -> tuple[float, list[dict]]:
    """Accuracy plus per-sample records (for bootstrapping)."""
    if not split:
        raise EmptyDatasetError("evaluation split is empty")
    _, Z, labels = _embed_split(provider, split)
    return evaluate_embedded(model, Z, labels)


def save_history(history: TrainHistory, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for record in history:
                fh.write(json.dumps(record.as_dict()) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def save_linear_checkpoint(model: LinearTextModel, path: str) -> None:
    payload = {
        "format_version": 1,
        "kind": "fc_only",
        "dim": model.dim,
        "num_classes": model.num_classes,
        "weights": model.weights.tolist(),
        "config": model.config_echo,
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def save_model(model, path: str) -> None:
    if isinstance(model, PrototypeModel):
        save_checkpoint(model, path)
    else:
        save_linear_checkpoint(model, path)


def load_model(path: str):
    """Load either checkpoint flavor, dispatching on its `kind` field."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    kind = payload.get("kind", "prototype")
    if kind == "prototype":
        return load_checkpoint(path)
    if kind == "fc_only":
        try:
            return LinearTextModel(
                weights=np.array(payload["weights"], dtype=np.float64),
                num_classes=int(payload["num_classes"]),
                config_echo=payload.get("config", {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: malformed checkpoint: {exc}") from exc
    raise FormatError(f"{path}: unknown checkpoint kind {kind!r}")
