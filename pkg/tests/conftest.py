import pytest

from prototext.datasets import make_keyword_corpus
from prototext.embedding import ReferenceEmbedder, ReferenceEmbedderConfig
from prototext.training import TrainConfig, train


@pytest.fixture(scope="session")
def provider():
    return ReferenceEmbedder(ReferenceEmbedderConfig(dim=64, seed=5))


@pytest.fixture(scope="session")
def toy_corpus():
    """260 separable samples: 200 for training, 60 held out."""
    records = [r.pair() for r in make_keyword_corpus(260, seed=7)]
    return records[:200], records[200:]


@pytest.fixture(scope="session")
def toy_model(provider, toy_corpus):
    train_pairs, heldout = toy_corpus
    model, history = train(train_pairs, heldout, provider, TrainConfig(epochs=20, seed=3))
    return model, history
