"""Interpretable text classification with weighted prototype similarity
and word-level rationales."""

from .embedding import (
    EmbeddingCache,
    HttpEmbeddingClient,
    ReferenceEmbedder,
    ReferenceEmbedderConfig,
    cache_load,
    cache_store,
    embed_batch,
    http_embed,
    tokenize,
    tokenize_with_spans,
)
from .estimator import PrototypeTextClassifier
from .faithfulness import (
    FaithfulnessReport,
    bootstrap_ci,
    comprehensiveness,
    faithfulness_eval,
    prototype_ablation_eval,
    sufficiency,
)
from .losses import LossBreakdown, LossConfig, loss_gradients, total_loss
from .model import (
    Prototype,
    PrototypeModel,
    forward,
    load_checkpoint,
    predict,
    project_prototypes,
    save_checkpoint,
    top_contributing_prototypes,
)
from .rationale import (
    Rationale,
    RationaleConfig,
    RemovalTrace,
    SampleExplanation,
    explain_sample,
    extract_abstractive,
    extract_extractive,
    select_rationale,
    token_importance,
)
from .similarity import (
    L2Mode,
    SimilarityKind,
    SimilarityWeights,
    cosine_sim,
    similarity_score,
    weighted_cosine_sim,
    weighted_l2,
)
from .training import TrainConfig, TrainHistory, evaluate, load_model, save_model, train

__version__ = "0.1.0"
