"""Training objective: cross entropy plus four prototype-shaping terms and
an L1 penalty on the head.

All distance-flavored terms use d(z, p) = 1 - score in the cosine kinds and
the raw distance in the L2 kinds (where score = -distance), so d >= 0
everywhere and every term is bounded below by zero:

* cluster: each sample should be close to some same-class prototype.
* separation: hinge pushing wrong-class prototypes at least `margin` away.
* distribution: each prototype should be close to some sample in the batch.
* diversity: hinge pushing same-class prototype pairs at least
  `threshold` apart.
* l1: sum of absolute head entries.

Gradients are exact analytic derivatives; min/max selections are treated as
locally constant selectors and hinges/clamps use one-sided subgradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingClassSamplesError
from .model import PrototypeModel, softmax
from .similarity import SimilarityKind, similarity_backward, similarity_matrix


@dataclass(frozen=True)
class LossConfig:
    lambda_cluster: float = 0.5
    lambda_separation: float = 0.1
    lambda_distribution: float = 0.1
    lambda_diversity: float = 0.1
    lambda_l1: float = 1e-4
    separation_margin: float = 1.0
    diversity_threshold: float = 0.6

    def __post_init__(self):
        for name in (
            "lambda_cluster",
            "lambda_separation",
            "lambda_distribution",
            "lambda_diversity",
            "lambda_l1",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class LossBreakdown:
    ce: float
    clst: float
    sep: float
    dist: float
    divers: float
    l1: float
    total: float

    def as_dict(self) -> dict:
        return {
            "ce": self.ce,
            "clst": self.clst,
            "sep": self.sep,
            "dist": self.dist,
            "divers": self.divers,
            "l1": self.l1,
            "total": self.total,
        }


@dataclass
class LossGradients:
    prototypes: np.ndarray   # (K, dim)
    raw_weights: np.ndarray  # (dim,)
    head: np.ndarray         # (C, K)


Batch = list[tuple[np.ndarray, int]]


def _distance_offset(kind: SimilarityKind) -> float:
    # score = offset - distance for every kind
    return 1.0 if kind in (SimilarityKind.COSINE, SimilarityKind.WEIGHTED_COSINE) else 0.0


def _batch_arrays(batch: Batch) -> tuple[np.ndarray, np.ndarray]:
    if not batch:
        raise ValueError("batch must be non-empty")
    Z = np.stack([np.asarray(z, dtype=np.float64) for z, _ in batch])
    y = np.array([label for _, label in batch], dtype=np.int64)
    return Z, y


def _distances(model: PrototypeModel, Z: np.ndarray) -> np.ndarray:
    return _distance_offset(model.sim_kind) - model.similarities(Z)


def cross_entropy(logits: np.ndarray, label: int) -> float:
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < logits.shape[0]:
        raise ValueError(f"label {label} out of range for {logits.shape[0]} classes")
    shifted = logits - logits.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[label])


def _same_class_mask(model: PrototypeModel, y: np.ndarray) -> np.ndarray:
    mask = y[:, None] == model.prototype_classes[None, :]
    missing = ~mask.any(axis=1)
    if missing.any():
        bad = int(y[np.argmax(missing)])
        raise MissingClassSamplesError(f"no prototypes for class {bad}")
    return mask


def cluster_loss(batch: Batch, model: PrototypeModel) -> float:
    Z, y = _batch_arrays(batch)
    D = _distances(model, Z)
    mask = _same_class_mask(model, y)
    return float(np.where(mask, D, np.inf).min(axis=1).mean())


def separation_loss(batch: Batch, model: PrototypeModel, margin: float = 1.0) -> float:
    Z, y = _batch_arrays(batch)
    if len(set(int(c) for c in model.prototype_classes)) < 2:
        raise ValueError("separation loss needs prototypes from at least two classes")
    D = _distances(model, Z)
    wrong = y[:, None] != model.prototype_classes[None, :]
    dmin = np.where(wrong, D, np.inf).min(axis=1)
    return float(np.maximum(0.0, margin - dmin).mean())


def distribution_loss(batch: Batch, model: PrototypeModel) -> float:
    Z, _ = _batch_arrays(batch)
    D = _distances(model, Z)
    return float(D.min(axis=0).mean())


def _pair_mask(model: PrototypeModel) -> np.ndarray:
    cls = model.prototype_classes
    K = len(cls)
    same = cls[:, None] == cls[None, :]
    return same & np.triu(np.ones((K, K), dtype=bool), k=1)


def diversity_loss(model: PrototypeModel, threshold: float = 0.6) -> float:
    pairs = _pair_mask(model)
    count = int(pairs.sum())
    if count == 0:
        return 0.0
    P = model.prototype_matrix
    Dp = _distance_offset(model.sim_kind) - similarity_matrix(
        P, P, model.sim_kind, model.sim_weights.effective, model.l2_mode
    )
    hinged = np.maximum(0.0, threshold - Dp[pairs])
    return float(hinged.sum() / count)


def l1_penalty(head: np.ndarray) -> float:
    return float(np.abs(np.asarray(head, dtype=np.float64)).sum())


def total_loss(batch: Batch, model: PrototypeModel, config: LossConfig) -> LossBreakdown:
    Z, y = _batch_arrays(batch)
    sims = model.similarities(Z)
    logits = sims @ model.head.T
    ce = float(np.mean([cross_entropy(logits[i], int(y[i])) for i in range(len(y))]))
    clst = cluster_loss(batch, model)
    sep = separation_loss(batch, model, config.separation_margin)
    dist = distribution_loss(batch, model)
    divers = diversity_loss(model, config.diversity_threshold)
    l1 = l1_penalty(model.head)
    total = (
        ce
        + config.lambda_cluster * clst
        + config.lambda_separation * sep
        + config.lambda_distribution * dist
        + config.lambda_diversity * divers
        + config.lambda_l1 * l1
    )
    return LossBreakdown(ce=ce, clst=clst, sep=sep, dist=dist, divers=divers, l1=l1, total=total)


def loss_gradients(batch: Batch, model: PrototypeModel, config: LossConfig) -> LossGradients:
    """Analytic gradient of total_loss for prototypes, raw weights and head."""
    Z, y = _batch_arrays(batch)
    n = len(y)
    K = model.num_prototypes
    P = model.prototype_matrix
    w_eff = model.sim_weights.effective
    kind = model.sim_kind

    sims = model.similarities(Z)
    D = _distance_offset(kind) - sims
    logits = sims @ model.head.T
    probs = softmax(logits)
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y] = 1.0

    # dLoss/dScore for sample-prototype scores; dD/dS = -1 throughout.
    G = ((probs - onehot) / n) @ model.head

    mask_same = _same_class_mask(model, y)
    j_clst = np.where(mask_same, D, np.inf).argmin(axis=1)
    G[np.arange(n), j_clst] -= config.lambda_cluster / n

    wrong = ~mask_same
    if not wrong.any(axis=1).all():
        raise ValueError("separation loss needs prototypes from at least two classes")
    Dwrong = np.where(wrong, D, np.inf)
    j_sep = Dwrong.argmin(axis=1)
    active = (config.separation_margin - Dwrong[np.arange(n), j_sep]) > 0.0
    G[np.arange(n)[active], j_sep[active]] += config.lambda_separation / n

    i_dist = D.argmin(axis=0)
    G[i_dist, np.arange(K)] -= config.lambda_distribution / K

    dP, dw = similarity_backward(Z, P, kind, w_eff, G, model.l2_mode)

    pairs = _pair_mask(model)
    n_pairs = int(pairs.sum())
    if n_pairs > 0 and config.lambda_diversity != 0.0:
        Dp = _distance_offset(kind) - similarity_matrix(P, P, kind, w_eff, model.l2_mode)
        Gp = np.zeros((K, K))
        active_pairs = pairs & ((config.diversity_threshold - Dp) > 0.0)
        Gp[active_pairs] = config.lambda_diversity / n_pairs
        dp_right, dw_pairs = similarity_backward(P, P, kind, w_eff, Gp, model.l2_mode)
        dp_left, _ = similarity_backward(
            P, P, kind, w_eff, Gp.T, model.l2_mode, with_weight_grad=False
        )
        dP = dP + dp_right + dp_left
        dw = dw + dw_pairs

    draw = dw * model.sim_weights.effective_jacobian_diag()

    dhead = ((probs - onehot) / n).T @ sims
    dhead = dhead + config.lambda_l1 * np.sign(model.head)

    return LossGradients(prototypes=dP, raw_weights=draw, head=dhead)
