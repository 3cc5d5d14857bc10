"""The prototype layer and classifier head.

A model holds K = C*m prototype vectors (m per class), a per-dimension
similarity weight vector, and a C x K head matrix mapping prototype
similarities to class logits. Prototypes are periodically projected onto
real training embeddings so every prototype has a human-readable source
sentence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FormatError,
    IoError,
    MissingClassSamplesError,
    ShapeMismatchError,
)
from .rng import SplitMix64
from .similarity import (
    L2Mode,
    SimilarityKind,
    SimilarityWeights,
    similarity_matrix,
)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class Prototype:
    vector: np.ndarray
    class_id: int
    source_text: str | None = None
    source_index: int | None = None


@dataclass
class PrototypeModel:
    prototypes: list[Prototype]
    sim_weights: SimilarityWeights
    head: np.ndarray  # shape (C, K)
    num_classes: int
    per_class: int
    sim_kind: SimilarityKind
    l2_mode: L2Mode = L2Mode.CORRECTED
    config_echo: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sim_kind = SimilarityKind(self.sim_kind)
        self.l2_mode = L2Mode(self.l2_mode)
        self.head = np.asarray(self.head, dtype=np.float64)
        K = len(self.prototypes)
        if K != self.num_classes * self.per_class:
            raise ShapeMismatchError(
                f"{K} prototypes != {self.num_classes} classes x {self.per_class} per class"
            )
        if self.head.shape != (self.num_classes, K):
            raise ShapeMismatchError(
                f"head shape {self.head.shape} != ({self.num_classes}, {K})"
            )

    @property
    def dim(self) -> int:
        return self.prototypes[0].vector.shape[0]

    @property
    def num_prototypes(self) -> int:
        return len(self.prototypes)

    @property
    def prototype_matrix(self) -> np.ndarray:
        return np.stack([p.vector for p in self.prototypes])

    @property
    def prototype_classes(self) -> np.ndarray:
        return np.array([p.class_id for p in self.prototypes], dtype=np.int64)

    def similarities(self, Z: np.ndarray) -> np.ndarray:
        """Score matrix of shape (n, K) for a batch of embeddings."""
        return similarity_matrix(
            Z, self.prototype_matrix, self.sim_kind, self.sim_weights.effective, self.l2_mode
        )


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(model: PrototypeModel, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Similarities, logits and class probabilities for one embedding."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (model.dim,):
        raise ShapeMismatchError(f"embedding shape {z.shape} != ({model.dim},)")
    sims = model.similarities(z[None, :])[0]
    logits = model.head @ sims
    return sims, logits, softmax(logits)


def predict(model: PrototypeModel, z: np.ndarray) -> int:
    """Argmax class; ties break toward the lower class id."""
    _, logits, _ = forward(model, z)
    return int(np.argmax(logits))


def top_contributing_prototypes(
    model: PrototypeModel, z: np.ndarray, k: int
) -> list[tuple[int, float]]:
    """The k prototypes contributing most to the predicted class.

    Contribution of prototype j is head[c, j] * sims[j] with c the predicted
    class. Sorted by contribution descending, index ascending on ties.
    """
    if not 1 <= k <= model.num_prototypes:
        raise ValueError(f"k must be in [1, {model.num_prototypes}], got {k}")
    sims, logits, _ = forward(model, z)
    c = int(np.argmax(logits))
    contributions = model.head[c] * sims
    order = sorted(range(len(contributions)), key=lambda j: (-contributions[j], j))
    return [(j, float(contributions[j])) for j in order[:k]]


def project_prototypes(
    model: PrototypeModel,
    train_embeddings: list[tuple[np.ndarray, int]],
    train_texts: list[str] | None = None,
) -> PrototypeModel:
    """Snap each prototype onto its most similar same-class training embedding.

    Uses the model's configured similarity with the current effective
    weights; ties break toward the lowest training index. Mutates and
    returns the model.
    """
    by_class: dict[int, list[int]] = {}
    for idx, (_, class_id) in enumerate(train_embeddings):
        by_class.setdefault(class_id, []).append(idx)
    for proto in model.prototypes:
        if proto.class_id not in by_class:
            raise MissingClassSamplesError(f"no training samples for class {proto.class_id}")
    Z = np.stack([vec for vec, _ in train_embeddings])
    scores = similarity_matrix(
        Z, model.prototype_matrix, model.sim_kind, model.sim_weights.effective, model.l2_mode
    )  # (n, K)
    for j, proto in enumerate(model.prototypes):
        candidates = by_class[proto.class_id]
        best = candidates[0]
        for idx in candidates[1:]:
            if scores[idx, j] > scores[best, j]:
                best = idx
        proto.vector = train_embeddings[best][0].copy()
        proto.source_index = best
        if train_texts is not None:
            proto.source_text = train_texts[best]
    return model


def init_model(
    train_embeddings: list[tuple[np.ndarray, int]],
    num_classes: int,
    per_class: int,
    sim_kind: SimilarityKind,
    l2_mode: L2Mode,
    seed: int,
) -> PrototypeModel:
    """Fresh model: prototypes drawn from distinct same-class training
    embeddings, head set to the class-indicator matrix, weights at their
    unweighted-equivalent starting point."""
    sim_kind = SimilarityKind(sim_kind)
    dim = train_embeddings[0][0].shape[0]
    by_class: dict[int, list[int]] = {}
    for idx, (_, class_id) in enumerate(train_embeddings):
        by_class.setdefault(class_id, []).append(idx)
    rng = SplitMix64(seed)
    prototypes = []
    for c in range(num_classes):
        if c not in by_class:
            raise MissingClassSamplesError(f"no training samples for class {c}")
        candidates = by_class[c]
        picks = rng.sample_distinct(len(candidates), per_class)
        for p in picks:
            idx = candidates[p]
            prototypes.append(Prototype(vector=train_embeddings[idx][0].copy(), class_id=c))
    K = num_classes * per_class
    head = np.zeros((num_classes, K))
    for j, proto in enumerate(prototypes):
        head[proto.class_id, j] = 1.0
    # raw = 1 clamps to 1 (weighted cosine) and raw = 0 maps to 1 under
    # 2*sigmoid (weighted L2), so training starts at the unweighted measure.
    if sim_kind == SimilarityKind.WEIGHTED_L2:
        raw = np.zeros(dim)
    else:
        raw = np.ones(dim)
    return PrototypeModel(
        prototypes=prototypes,
        sim_weights=SimilarityWeights(raw=raw, kind=sim_kind),
        head=head,
        num_classes=num_classes,
        per_class=per_class,
        sim_kind=sim_kind,
        l2_mode=l2_mode,
    )


def save_checkpoint(model: PrototypeModel, path: str) -> None:
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": "prototype",
        "dim": model.dim,
        "sim_kind": model.sim_kind.value,
        "l2_mode": model.l2_mode.value,
        "num_classes": model.num_classes,
        "per_class": model.per_class,
        "raw_weights": model.sim_weights.raw.tolist(),
        "prototypes": [
            {
                "vector": p.vector.tolist(),
                "class_id": p.class_id,
                "source_text": p.source_text,
                "source_index": p.source_index,
            }
            for p in model.prototypes
        ],
        "head": model.head.tolist(),
        "config": model.config_echo,
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load_checkpoint(path: str) -> PrototypeModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    try:
        if payload["format_version"] != CHECKPOINT_FORMAT_VERSION:
            raise FormatError(f"unsupported format_version {payload['format_version']}")
        if payload.get("kind", "prototype") != "prototype":
            raise FormatError(f"not a prototype checkpoint: kind={payload.get('kind')}")
        sim_kind = SimilarityKind(payload["sim_kind"])
        prototypes = [
            Prototype(
                vector=np.array(p["vector"], dtype=np.float64),
                class_id=int(p["class_id"]),
                source_text=p["source_text"],
                source_index=p["source_index"],
            )
            for p in payload["prototypes"]
        ]
        return PrototypeModel(
            prototypes=prototypes,
            sim_weights=SimilarityWeights(
                raw=np.array(payload["raw_weights"], dtype=np.float64), kind=sim_kind
            ),
            head=np.array(payload["head"], dtype=np.float64),
            num_classes=int(payload["num_classes"]),
            per_class=int(payload["per_class"]),
            sim_kind=sim_kind,
            l2_mode=L2Mode(payload["l2_mode"]),
            config_echo=payload.get("config", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed checkpoint: {exc}") from exc
