"""Sentence encoders behind a tiny duck-typed contract:
`encode(texts) -> (n, dim) array`, `dim`, `name`."""

from __future__ import annotations

import numpy as np

KNOWN_MODELS = (
    "bert-large-nli-mean-tokens",
    "all-mpnet-base-v2",
    "all-distilroberta-v1",
    "Muennighoff/SGPT-125M-weightedmean-nli-bitfit",
)

DEFAULT_MODEL = KNOWN_MODELS[0]


class SentenceTransformerEncoder:
    """Wraps a sentence-transformers model in deterministic inference mode.

    Vectors come out exactly as the model's standard sentence-embedding
    recipe produces them (mean pooling etc.); no extra normalization.
    """

    def __init__(self, model_name: str = DEFAULT_MODEL, device: str | None = None):
        from sentence_transformers import SentenceTransformer

        self.name = model_name
        self._model = SentenceTransformer(model_name, device=device)
        self._model.eval()
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim))
        vectors = self._model.encode(
            texts,
            convert_to_numpy=True,
            normalize_embeddings=False,
            show_progress_bar=False,
        )
        return np.asarray(vectors, dtype=np.float64)
