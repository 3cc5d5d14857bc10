import numpy as np
import pytest

from prototext.embedding import tokenize, tokenize_with_spans
from prototext.errors import EmptyTextError, MissingSourceTextError
from prototext.model import Prototype, PrototypeModel
from prototext.rationale import (
    RationaleConfig,
    RemovalStep,
    RemovalTrace,
    explain_sample,
    extract_abstractive,
    extract_extractive,
    select_rationale,
    token_importance,
)
from prototext.similarity import SimilarityKind, SimilarityWeights, similarity_score


@pytest.fixture(scope="module")
def plain_cosine_model(provider):
    """Minimal model whose configured similarity is cosine with unit weights."""
    return PrototypeModel(
        prototypes=[
            Prototype(provider.embed("alpha beta"), 0),
            Prototype(provider.embed("gamma delta"), 1),
        ],
        sim_weights=SimilarityWeights(raw=np.ones(provider.dim), kind=SimilarityKind.WEIGHTED_COSINE),
        head=np.eye(2),
        num_classes=2,
        per_class=1,
        sim_kind=SimilarityKind.WEIGHTED_COSINE,
    )


def rescan_trace(sentence, reference, model, provider, n):
    """Independent greedy re-scan used as the oracle for token_importance."""
    tokens = tokenize(sentence)
    remaining = list(enumerate(tokens))
    w_eff = model.sim_weights.effective
    sim = similarity_score(model.sim_kind, w_eff, provider.embed(" ".join(tokens)), reference, model.l2_mode)
    steps = []
    for _ in range(min(n, len(tokens) - 1)):
        best = None
        for pos in range(len(remaining)):
            rest = " ".join(t for _, t in remaining[:pos] + remaining[pos + 1:])
            s = similarity_score(model.sim_kind, w_eff, provider.embed(rest), reference, model.l2_mode)
            if best is None or s < best[1]:
                best = (pos, s)
        pos, after = best
        idx, tok = remaining.pop(pos)
        steps.append((idx, tok, sim, after))
        sim = after
    return steps


class TestTokenImportance:
    def test_single_token_sentence(self, plain_cosine_model, provider):
        trace = token_importance("alpha", provider.embed("alpha"), plain_cosine_model, provider, 10)
        assert trace.steps == []
        assert trace.full_distance == 0.0

    def test_first_removal_matches_exhaustive_scan(self, plain_cosine_model, provider):
        reference = provider.embed("aa")
        trace = token_importance("aa bb cc", reference, plain_cosine_model, provider, 1)
        oracle = rescan_trace("aa bb cc", reference, plain_cosine_model, provider, 1)
        assert trace.steps[0].token_index == oracle[0][0]
        assert trace.steps[0].token == oracle[0][1]
        assert trace.steps[0].similarity_after == oracle[0][3]

    def test_trace_length_bounded_by_n(self, plain_cosine_model, provider):
        reference = provider.embed("zz")
        for n in (1, 2, 10):
            trace = token_importance("one two three four", reference, plain_cosine_model, provider, n)
            assert len(trace.steps) <= n
        # never removes the last surviving token
        trace = token_importance("one two three four", reference, plain_cosine_model, provider, 99)
        assert len(trace.steps) == 3

    def test_full_trace_matches_exhaustive_scan(self, plain_cosine_model, provider):
        reference = provider.embed("bb dd")
        sentence = "aa bb cc dd ee"
        trace = token_importance(sentence, reference, plain_cosine_model, provider, 10)
        oracle = rescan_trace(sentence, reference, plain_cosine_model, provider, 10)
        assert [(s.token_index, s.token) for s in trace.steps] == [(i, t) for i, t, _, _ in oracle]
        for step, (_, _, before, after) in zip(trace.steps, oracle):
            assert step.similarity_before == before
            assert step.similarity_after == after

    def test_monotone_bookkeeping(self, plain_cosine_model, provider):
        trace = token_importance(
            "aa bb cc dd ee ff", provider.embed("aa ff"), plain_cosine_model, provider, 10
        )
        for prev, nxt in zip(trace.steps, trace.steps[1:]):
            assert nxt.similarity_before == prev.similarity_after
        assert trace.full_distance == trace.steps[0].similarity_before - trace.steps[-1].similarity_after

    def test_empty_sentence_rejected(self, plain_cosine_model, provider):
        with pytest.raises(EmptyTextError):
            token_importance("  ", provider.embed("aa"), plain_cosine_model, provider, 5)

    def test_deterministic(self, plain_cosine_model, provider):
        reference = provider.embed("cc aa")
        t1 = token_importance("aa bb cc dd", reference, plain_cosine_model, provider, 10)
        t2 = token_importance("aa bb cc dd", reference, plain_cosine_model, provider, 10)
        assert t1 == t2


def synthetic_trace(drops, start=1.0):
    steps = []
    sim = start
    for i, drop in enumerate(drops):
        steps.append(RemovalStep(i, f"tok{i}", sim, sim - drop))
        sim -= drop
    return RemovalTrace(steps=steps, full_distance=start - sim)


class TestSelectRationale:
    def test_prefix_reaches_threshold(self):
        trace = synthetic_trace([0.5, 0.3, 0.1, 0.1])
        selected = select_rationale(trace, 0.75)
        assert [s.token_index for s in selected] == [0, 1]  # 0.8 >= 0.75

    def test_zero_coverage_gives_single_top_token(self):
        trace = synthetic_trace([0.5, 0.3, 0.1, 0.1])
        selected = select_rationale(trace, 0.0)
        assert [s.token_index for s in selected] == [0]

    def test_full_coverage_takes_all(self):
        trace = synthetic_trace([0.5, 0.3, 0.1, 0.1])
        selected = select_rationale(trace, 1.0)
        assert sorted(s.token_index for s in selected) == [0, 1, 2, 3]

    def test_negative_full_distance_falls_back_to_largest(self):
        trace = synthetic_trace([-0.2, 0.1, -0.3])  # full distance -0.4
        assert trace.full_distance < 0
        selected = select_rationale(trace, 0.75)
        assert [s.token_index for s in selected] == [1]

    def test_negative_drops_skipped(self):
        trace = synthetic_trace([0.5, -0.2, 0.4, 0.3])  # full distance 1.0
        selected = select_rationale(trace, 1.0)
        assert sorted(s.token_index for s in selected) == [0, 2, 3]

    def test_empty_trace(self):
        assert select_rationale(RemovalTrace([], 0.0), 0.75) == []

    def test_ties_prefer_earlier_step(self):
        trace = synthetic_trace([0.3, 0.3, 0.3])
        selected = select_rationale(trace, 0.0)
        assert [s.token_index for s in selected] == [0]


class TestExtractExtractive:
    def test_k_one_yields_one_rationale(self, provider, toy_model):
        model, _ = toy_model
        cfg = RationaleConfig(top_prototypes=1)
        result = extract_extractive("a genuinely marvelous street market", model, provider, cfg)
        assert len(result.prototypes) == 1
        assert result.prototypes[0].extractive.kind == "extractive"

    def test_union_covers_member_rationales(self, provider, toy_model, toy_corpus):
        model, _ = toy_model
        _, heldout = toy_corpus
        cfg = RationaleConfig()
        result = extract_extractive(heldout[0][0], model, provider, cfg)
        union = set(result.union_token_indices)
        for entry in result.prototypes:
            assert set(entry.extractive.token_indices) <= union

    def test_spans_slice_to_tokens(self, provider, toy_model, toy_corpus):
        model, _ = toy_model
        _, heldout = toy_corpus
        text = heldout[1][0]
        result = extract_extractive(text, model, provider, RationaleConfig())
        for entry in result.prototypes:
            for (start, end), token in zip(entry.extractive.spans, entry.extractive.tokens):
                assert text[start:end] == token

    def test_coverage_invariant(self, provider, toy_model, toy_corpus):
        model, _ = toy_model
        _, heldout = toy_corpus
        for text, _ in heldout[:10]:
            result = extract_extractive(text, model, provider, RationaleConfig())
            for entry in result.prototypes:
                r = entry.extractive
                if r.trace.full_distance > 0:
                    assert r.explained_fraction >= 0.75 - 1e-12


class TestExtractAbstractive:
    def test_unprojected_prototype_rejected(self, provider, toy_model):
        model, _ = toy_model
        orphan = Prototype(vector=model.prototypes[0].vector.copy(), class_id=0)
        with pytest.raises(MissingSourceTextError):
            extract_abstractive(orphan, provider.embed("a b"), model, provider, RationaleConfig())

    def test_source_equal_to_sample_mirrors_extractive_trace(self, provider, toy_model):
        model, _ = toy_model
        text = model.prototypes[0].source_text
        z = provider.embed(text)
        abstractive = extract_abstractive(model.prototypes[0], z, model, provider, RationaleConfig())
        direct = token_importance(text, z, model, provider, 10)
        assert [(s.token_index, s.token) for s in abstractive.trace.steps] == [
            (s.token_index, s.token) for s in direct.steps
        ]

    def test_single_token_source_gives_empty_trace(self, provider, toy_model):
        model, _ = toy_model
        proto = Prototype(vector=provider.embed("dreadful"), class_id=0, source_text="dreadful")
        rationale = extract_abstractive(proto, provider.embed("a b"), model, provider, RationaleConfig())
        assert rationale.trace.steps == []
        assert rationale.token_indices == []


class TestExplainSample:
    def test_pairs_extractive_with_abstractive(self, provider, toy_model, toy_corpus):
        model, _ = toy_model
        _, heldout = toy_corpus
        result = explain_sample(heldout[2][0], model, provider, RationaleConfig(top_prototypes=2))
        assert len(result.prototypes) == 2
        for entry in result.prototypes:
            assert entry.extractive.kind == "extractive"
            assert entry.abstractive is not None
            assert entry.abstractive.kind == "abstractive"
            assert entry.abstractive.sentence == model.prototypes[entry.prototype_index].source_text
