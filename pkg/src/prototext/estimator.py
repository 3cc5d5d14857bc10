"""Scikit-learn style wrapper around the training pipeline.

PrototypeTextClassifier takes raw sentences, embeds them with the
configured provider, and fits the prototype model end to end; it plays
well with clone/get_params/cross-validation.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .embedding import ReferenceEmbedder, ReferenceEmbedderConfig
from .losses import LossConfig
from .model import PrototypeModel, softmax
from .rationale import RationaleConfig, SampleExplanation, explain_sample
from .rng import SplitMix64
from .training import TrainConfig, _logits_batch, train


def _validate_texts(X) -> list[str]:
    texts = list(X)
    if not texts:
        raise ValueError("X must contain at least one text")
    for i, t in enumerate(texts):
        if not isinstance(t, str):
            raise TypeError(f"X[{i}] is {type(t).__name__}, expected str")
    return texts


class PrototypeTextClassifier(BaseEstimator, ClassifierMixin):
    """Interpretable sentence classifier over weighted prototype similarity.

    Parameters mirror the training configuration; `provider` is any object
    with dim/embed/embed_batch (defaults to the deterministic reference
    embedder with `embedding_dim` dimensions and the run seed).
    """

    def __init__(
        self,
        sim_kind="weighted_cosine",
        l2_mode="corrected",
        prototypes_per_class=10,
        epochs=100,
        batch_size=128,
        lr=0.005,
        weight_decay=0.0005,
        lr_factor=0.5,
        lr_patience_epochs=30,
        projection_every=5,
        projection_start_fraction=0.5,
        final_phase_epochs=3,
        head_mode="prototype",
        lambda_cluster=0.5,
        lambda_separation=0.1,
        lambda_distribution=0.1,
        lambda_diversity=0.1,
        lambda_l1=1e-4,
        separation_margin=1.0,
        diversity_threshold=0.6,
        val_fraction=0.1,
        seed=0,
        embedding_dim=64,
        provider=None,
    ):
        self.sim_kind = sim_kind
        self.l2_mode = l2_mode
        self.prototypes_per_class = prototypes_per_class
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.weight_decay = weight_decay
        self.lr_factor = lr_factor
        self.lr_patience_epochs = lr_patience_epochs
        self.projection_every = projection_every
        self.projection_start_fraction = projection_start_fraction
        self.final_phase_epochs = final_phase_epochs
        self.head_mode = head_mode
        self.lambda_cluster = lambda_cluster
        self.lambda_separation = lambda_separation
        self.lambda_distribution = lambda_distribution
        self.lambda_diversity = lambda_diversity
        self.lambda_l1 = lambda_l1
        self.separation_margin = separation_margin
        self.diversity_threshold = diversity_threshold
        self.val_fraction = val_fraction
        self.seed = seed
        self.embedding_dim = embedding_dim
        self.provider = provider

    def _provider(self):
        if self.provider is not None:
            return self.provider
        return ReferenceEmbedder(ReferenceEmbedderConfig(dim=self.embedding_dim, seed=self.seed))

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            weight_decay=self.weight_decay,
            lr_factor=self.lr_factor,
            lr_patience_epochs=self.lr_patience_epochs,
            projection_every=self.projection_every,
            projection_start_fraction=self.projection_start_fraction,
            final_phase_epochs=self.final_phase_epochs,
            prototypes_per_class=self.prototypes_per_class,
            seed=self.seed,
            sim_kind=self.sim_kind,
            l2_mode=self.l2_mode,
            head_mode=self.head_mode,
            loss=LossConfig(
                lambda_cluster=self.lambda_cluster,
                lambda_separation=self.lambda_separation,
                lambda_distribution=self.lambda_distribution,
                lambda_diversity=self.lambda_diversity,
                lambda_l1=self.lambda_l1,
                separation_margin=self.separation_margin,
                diversity_threshold=self.diversity_threshold,
            ),
        )

    def fit(self, X, y):
        texts = _validate_texts(X)
        y = np.asarray(y)
        if len(y) != len(texts):
            raise ValueError(f"X has {len(texts)} texts but y has {len(y)} labels")
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes")
        pairs = list(zip(texts, (int(v) for v in encoded)))

        # deterministic validation carve-out for the LR plateau schedule
        order = list(range(len(pairs)))
        SplitMix64(self.seed).shuffle(order)
        n_val = max(1, int(round(self.val_fraction * len(pairs)))) if self.val_fraction > 0 else 0
        n_val = min(n_val, len(pairs) - 1)
        if n_val == 0:
            train_pairs, val_pairs = pairs, pairs
        else:
            val_idx = set(order[:n_val])
            train_pairs = [pairs[i] for i in range(len(pairs)) if i not in val_idx]
            val_pairs = [pairs[i] for i in sorted(val_idx)]
        # every class must survive the carve-out
        missing = set(range(len(self.classes_))) - {label for _, label in train_pairs}
        if missing:
            train_pairs = pairs
        self.provider_ = self._provider()
        self.model_, self.history_ = train(train_pairs, val_pairs, self.provider_, self._train_config())
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        texts = _validate_texts(X)
        Z = np.stack(self.provider_.embed_batch(texts))
        return softmax(_logits_batch(self.model_, Z))

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]

    def explain(
        self, text: str, n_removals: int = 10, coverage: float = 0.75, top_prototypes: int = 3
    ) -> SampleExplanation:
        check_is_fitted(self, "model_")
        if not isinstance(self.model_, PrototypeModel):
            raise ValueError("explanations require head_mode='prototype'")
        config = RationaleConfig(
            n_removals=n_removals, coverage=coverage, top_prototypes=top_prototypes
        )
        return explain_sample(text, self.model_, self.provider_, config)
