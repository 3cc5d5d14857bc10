"""Word-importance extraction by greedy token removal.

For a sentence and a reference vector (a prototype, or a sample embedding
when explaining a prototype), repeatedly delete the token whose removal
decreases the model similarity the most. The recorded drops attribute the
similarity to individual words; the smallest high-drop subset covering a
fraction q of the total drop becomes the rationale.

Rationales over the input sentence are extractive (its own words are
selected); rationales over a prototype's source sentence are abstractive
(words outside the input support the prediction).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding import tokenize, tokenize_with_spans
from .errors import EmptyTextError, MissingSourceTextError
from .model import Prototype, PrototypeModel, predict, top_contributing_prototypes
from .similarity import similarity_score


@dataclass(frozen=True)
class RationaleConfig:
    n_removals: int = 10
    coverage: float = 0.75
    top_prototypes: int = 3

    def __post_init__(self):
        if self.n_removals < 1:
            raise ValueError("n_removals must be >= 1")
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must be in [0, 1]")
        if self.top_prototypes < 1:
            raise ValueError("top_prototypes must be >= 1")


@dataclass(frozen=True)
class RemovalStep:
    token_index: int  # position in the original sentence's token list
    token: str
    similarity_before: float
    similarity_after: float

    @property
    def drop(self) -> float:
        return self.similarity_before - self.similarity_after


@dataclass
class RemovalTrace:
    steps: list[RemovalStep]
    full_distance: float


def _model_similarity(model: PrototypeModel, z: np.ndarray, reference: np.ndarray) -> float:
    return similarity_score(
        model.sim_kind, model.sim_weights.effective, z, reference, model.l2_mode
    )


def token_importance(
    sentence: str,
    reference: np.ndarray,
    model: PrototypeModel,
    provider,
    n: int = 10,
) -> RemovalTrace:
    """Greedy removal trace of up to min(n, tokens-1) deletions.

    Each step re-embeds the surviving tokens joined by single spaces and
    deletes the one whose removal minimizes similarity to the reference
    (ties to the lowest token index). full_distance is the similarity of
    the intact sentence minus the similarity after the last removal.
    """
    tokens = tokenize(sentence)
    if not tokens:
        raise EmptyTextError(f"no tokens in sentence: {sentence!r}")
    if len(tokens) == 1:
        return RemovalTrace(steps=[], full_distance=0.0)

    remaining = list(enumerate(tokens))  # (original index, token)
    sim_before = _model_similarity(model, provider.embed(" ".join(tokens)), reference)
    steps: list[RemovalStep] = []
    for _ in range(min(n, len(tokens) - 1)):
        best_pos = 0
        best_sim = None
        for pos in range(len(remaining)):
            candidate = " ".join(tok for _, tok in remaining[:pos] + remaining[pos + 1:])
            sim = _model_similarity(model, provider.embed(candidate), reference)
            if best_sim is None or sim < best_sim:
                best_sim = sim
                best_pos = pos
        orig_idx, tok = remaining.pop(best_pos)
        steps.append(
            RemovalStep(
                token_index=orig_idx,
                token=tok,
                similarity_before=sim_before,
                similarity_after=best_sim,
            )
        )
        sim_before = best_sim
    return RemovalTrace(
        steps=steps, full_distance=steps[0].similarity_before - steps[-1].similarity_after
    )


def select_rationale(trace: RemovalTrace, coverage: float) -> list[RemovalStep]:
    """Fewest removed tokens whose drops sum to >= coverage * full_distance.

    Tokens are taken in descending drop order (ties to the earlier removal),
    skipping non-positive drops; telescoping guarantees the positive drops
    suffice whenever full_distance > 0. A non-positive full distance
    degrades to the single largest-drop token.
    """
    if not trace.steps:
        return []
    order = sorted(range(len(trace.steps)), key=lambda i: (-trace.steps[i].drop, i))
    ranked = [trace.steps[i] for i in order]
    if trace.full_distance <= 0.0:
        return [ranked[0]]
    threshold = coverage * trace.full_distance
    selected: list[RemovalStep] = []
    cumulative = 0.0
    for step in ranked:
        if selected and (step.drop <= 0.0 or cumulative >= threshold):
            break
        selected.append(step)
        cumulative += step.drop
    return selected


@dataclass
class Rationale:
    kind: str  # "extractive" | "abstractive"
    sentence: str  # the sentence the selected words come from
    token_indices: list[int]
    tokens: list[str]
    spans: list[tuple[int, int]]  # character spans into `sentence`
    explained_fraction: float
    trace: RemovalTrace
    prototype_index: int
    prototype_text: str | None = None


def _build_rationale(
    kind: str,
    sentence: str,
    trace: RemovalTrace,
    coverage: float,
    prototype_index: int,
    prototype_text: str | None,
) -> Rationale:
    selected = select_rationale(trace, coverage)
    selected = sorted(selected, key=lambda s: s.token_index)
    all_spans = tokenize_with_spans(sentence)
    covered = sum(s.drop for s in selected)
    fraction = covered / trace.full_distance if trace.full_distance > 0.0 else 0.0
    return Rationale(
        kind=kind,
        sentence=sentence,
        token_indices=[s.token_index for s in selected],
        tokens=[s.token for s in selected],
        spans=[(all_spans[s.token_index].start, all_spans[s.token_index].end) for s in selected],
        explained_fraction=fraction,
        trace=trace,
        prototype_index=prototype_index,
        prototype_text=prototype_text,
    )


@dataclass
class PrototypeExplanation:
    prototype_index: int
    contribution: float
    extractive: Rationale
    abstractive: Rationale | None = None


@dataclass
class SampleExplanation:
    text: str
    predicted_class: int
    prototypes: list[PrototypeExplanation]
    union_token_indices: list[int] = field(default_factory=list)
    union_spans: list[tuple[int, int]] = field(default_factory=list)


def extract_extractive(
    sample: str, model: PrototypeModel, provider, config: RationaleConfig
) -> SampleExplanation:
    """Extractive rationales against the top contributing prototypes, plus
    the union of the selected spans (the rationale used by faithfulness)."""
    z = provider.embed(sample)
    k = min(config.top_prototypes, model.num_prototypes)
    tops = top_contributing_prototypes(model, z, k)
    explanations = []
    union: set[int] = set()
    for proto_idx, contribution in tops:
        proto = model.prototypes[proto_idx]
        trace = token_importance(sample, proto.vector, model, provider, config.n_removals)
        rationale = _build_rationale(
            "extractive", sample, trace, config.coverage, proto_idx, proto.source_text
        )
        union.update(rationale.token_indices)
        explanations.append(
            PrototypeExplanation(
                prototype_index=proto_idx, contribution=contribution, extractive=rationale
            )
        )
    all_spans = tokenize_with_spans(sample)
    union_sorted = sorted(union)
    return SampleExplanation(
        text=sample,
        predicted_class=predict(model, z),
        prototypes=explanations,
        union_token_indices=union_sorted,
        union_spans=[(all_spans[i].start, all_spans[i].end) for i in union_sorted],
    )


def extract_abstractive(
    prototype: Prototype,
    sample_embedding: np.ndarray,
    model: PrototypeModel,
    provider,
    config: RationaleConfig,
) -> Rationale:
    """Important words of a prototype's source sentence with respect to a
    fixed sample embedding."""
    if prototype.source_text is None:
        raise MissingSourceTextError("prototype has no source text; project it first")
    trace = token_importance(
        prototype.source_text, sample_embedding, model, provider, config.n_removals
    )
    proto_idx = next(
        (j for j, p in enumerate(model.prototypes) if p is prototype), -1
    )
    return _build_rationale(
        "abstractive", prototype.source_text, trace, config.coverage, proto_idx,
        prototype.source_text,
    )


def explain_sample(
    sample: str, model: PrototypeModel, provider, config: RationaleConfig
) -> SampleExplanation:
    """Extractive rationales paired with each prototype's abstractive one."""
    explanation = extract_extractive(sample, model, provider, config)
    z = provider.embed(sample)
    for entry in explanation.prototypes:
        proto = model.prototypes[entry.prototype_index]
        if proto.source_text is not None:
            entry.abstractive = extract_abstractive(proto, z, model, provider, config)
    return explanation
