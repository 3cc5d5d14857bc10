"""Quantitative explanation evaluation.

Comprehensiveness: drop in predicted-class probability when the rationale
tokens are deleted from the input (high = the rationale captured what the
model used). Sufficiency: drop when keeping only the rationale tokens
(low = the rationale alone suffices). Both are evaluated per sample and
aggregated with bootstrap confidence intervals; a per-sample top-k
prototype-removal ablation measures how much predictions rely on their
strongest prototypes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import tokenize
from .errors import EmptyDatasetError, EmptyTextError
from .model import PrototypeModel, forward, softmax
from .rationale import RationaleConfig, extract_extractive
from .rng import SplitMix64, uniforms


def _predicted_and_prob(model, provider, text: str) -> tuple[int, float, np.ndarray]:
    z = provider.embed(text)
    _, logits, probs = forward(model, z)
    c = int(np.argmax(logits))
    return c, float(probs[c]), probs


def _joined(tokens: list[str]) -> str:
    return " ".join(tokens)


def sufficiency(model: PrototypeModel, provider, sample: str, rationale_union: list[int]) -> float:
    """p(predicted | full) - p(predicted | rationale tokens only)."""
    tokens = tokenize(sample)
    if not rationale_union:
        raise EmptyTextError("rationale union is empty")
    kept = [tokens[i] for i in sorted(rationale_union)]
    c, p_full, _ = _predicted_and_prob(model, provider, _joined(tokens))
    _, _, probs = _predicted_and_prob(model, provider, _joined(kept))
    return p_full - float(probs[c])


def comprehensiveness(
    model: PrototypeModel, provider, sample: str, rationale_union: list[int]
) -> float:
    """p(predicted | full) - p(predicted | rationale tokens deleted)."""
    tokens = tokenize(sample)
    removed = set(rationale_union)
    kept = [tok for i, tok in enumerate(tokens) if i not in removed]
    if not rationale_union:
        return 0.0
    if not kept:
        raise EmptyTextError("deleting the rationale leaves no tokens")
    c, p_full, _ = _predicted_and_prob(model, provider, _joined(tokens))
    _, _, probs = _predicted_and_prob(model, provider, _joined(kept))
    return p_full - float(probs[c])


def _bootstrap_indices(n: int, folds: int, seed: int) -> np.ndarray:
    u = uniforms(seed, folds * n)
    idx = np.minimum((u * n).astype(np.int64), n - 1)
    return idx.reshape(folds, n)


def bootstrap_ci(
    values: list[float] | np.ndarray, folds: int = 1000, seed: int = 0
) -> tuple[float, float, float]:
    """Overall mean plus the 2.5/97.5 percentiles of resampled fold means."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("bootstrap needs at least one value")
    idx = _bootstrap_indices(values.size, folds, seed)
    fold_means = values[idx].mean(axis=1)
    low, high = np.percentile(fold_means, [2.5, 97.5])
    return float(values.mean()), float(low), float(high)


@dataclass(frozen=True)
class MetricEstimate:
    value: float
    ci_low: float
    ci_high: float

    def as_dict(self) -> dict:
        return {"value": self.value, "ci_low": self.ci_low, "ci_high": self.ci_high}


@dataclass(frozen=True)
class FaithfulnessReport:
    comprehensiveness: MetricEstimate  # percentage points
    sufficiency: MetricEstimate        # percentage points
    accuracy: MetricEstimate           # percent
    folds: int
    seed: int
    samples_processed: int
    samples_excluded: int

    def as_dict(self) -> dict:
        return {
            "comprehensiveness_pp": self.comprehensiveness.as_dict(),
            "sufficiency_pp": self.sufficiency.as_dict(),
            "accuracy_pct": self.accuracy.as_dict(),
            "folds": self.folds,
            "seed": self.seed,
            "samples_processed": self.samples_processed,
            "samples_excluded": self.samples_excluded,
        }

    def to_text_table(self) -> str:
        rows = [
            ("Comprehensiveness (%p)", self.comprehensiveness),
            ("Sufficiency (%p)", self.sufficiency),
            ("Accuracy (%)", self.accuracy),
        ]
        width = max(len(name) for name, _ in rows)
        lines = []
        for name, est in rows:
            lines.append(f"{name:<{width}}  {est.value:8.2f}")
            lines.append(f"{'95% CI':>{width}}  ({est.ci_low:.2f}, {est.ci_high:.2f})")
        lines.append(
            f"samples: {self.samples_processed} processed, {self.samples_excluded} excluded"
        )
        return "\n".join(lines)


def faithfulness_eval(
    model: PrototypeModel,
    provider,
    split: list[tuple[str, int]],
    rationale_config: RationaleConfig | None = None,
    folds: int = 1000,
    seed: int = 0,
) -> FaithfulnessReport:
    """Extract rationale unions for every test sample and aggregate both
    metrics plus accuracy, with one shared resampling per bootstrap fold so
    the CIs preserve cross-metric correlation. Per-sample failures are
    excluded and counted, not fatal."""
    if not split:
        raise EmptyDatasetError("faithfulness split is empty")
    cfg = rationale_config if rationale_config is not None else RationaleConfig()
    comp_vals, suff_vals, correct_vals = [], [], []
    excluded = 0
    for text, label in split:
        try:
            explanation = extract_extractive(text, model, provider, cfg)
            union = explanation.union_token_indices
            comp = comprehensiveness(model, provider, text, union)
            suff = sufficiency(model, provider, text, union)
        except Exception:
            excluded += 1
            continue
        comp_vals.append(comp)
        suff_vals.append(suff)
        correct_vals.append(1.0 if explanation.predicted_class == label else 0.0)
    if not comp_vals:
        raise EmptyDatasetError("every sample was excluded")

    comp_arr = np.asarray(comp_vals) * 100.0
    suff_arr = np.asarray(suff_vals) * 100.0
    acc_arr = np.asarray(correct_vals) * 100.0
    idx = _bootstrap_indices(len(comp_vals), folds, seed)
    estimates = []
    for arr in (comp_arr, suff_arr, acc_arr):
        fold_means = arr[idx].mean(axis=1)
        low, high = np.percentile(fold_means, [2.5, 97.5])
        estimates.append(MetricEstimate(float(arr.mean()), float(low), float(high)))
    return FaithfulnessReport(
        comprehensiveness=estimates[0],
        sufficiency=estimates[1],
        accuracy=estimates[2],
        folds=folds,
        seed=seed,
        samples_processed=len(comp_vals),
        samples_excluded=excluded,
    )


def random_rationale_indices(n_tokens: int, size: int, rng: SplitMix64) -> list[int]:
    """Size-matched random token subset, the faithfulness control baseline."""
    size = min(size, n_tokens)
    pool = list(range(n_tokens))
    rng.shuffle(pool)
    return sorted(pool[:size])


def prototype_ablation_eval(
    model: PrototypeModel, provider, split: list[tuple[str, int]], k: int
) -> float:
    """Accuracy after zeroing each sample's k top contributing prototypes.

    k = 0 reproduces plain evaluation exactly.
    """
    if not 0 <= k < model.num_prototypes:
        raise ValueError(f"k must be in [0, {model.num_prototypes}), got {k}")
    if not split:
        raise EmptyDatasetError("ablation split is empty")
    texts = [text for text, _ in split]
    labels = np.array([label for _, label in split], dtype=np.int64)
    Z = np.stack(provider.embed_batch(texts))
    sims = model.similarities(Z)
    logits = sims @ model.head.T
    predicted = logits.argmax(axis=1)
    if k == 0:
        return float((predicted == labels).mean())
    masked_pred = np.empty_like(predicted)
    for i in range(len(labels)):
        contributions = model.head[predicted[i]] * sims[i]
        order = sorted(range(model.num_prototypes), key=lambda j: (-contributions[j], j))
        sims_masked = sims[i].copy()
        sims_masked[order[:k]] = 0.0
        masked_pred[i] = int(np.argmax(model.head @ sims_masked))
    return float((masked_pred == labels).mean())
