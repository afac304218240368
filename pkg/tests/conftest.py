import numpy as np
import pytest

from dircollapse import EmbeddingDataset, Labeling


def make_dataset(embeddings, labels, name="class", source="test"):
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1 if labels.size else 0
    return EmbeddingDataset(
        np.asarray(embeddings, dtype=np.float64),
        [Labeling(name, labels, k)],
        source=source,
    )


@pytest.fixture
def toy_pair_dataset():
    # class 0 around (0,0) with unit variance along e1; class 1 at (4,0)
    emb = np.array(
        [[-1.0, 0.0], [1.0, 0.0], [4.0, 0.0], [4.0, 0.0]],
    )
    return make_dataset(emb, [0, 0, 1, 1])


@pytest.fixture
def random_dataset():
    rng = np.random.default_rng(7)
    n, d, k = 240, 8, 3
    labels = np.repeat(np.arange(k), n // k)
    means = rng.normal(scale=4.0, size=(k, d))
    emb = means[labels] + rng.normal(size=(n, d))
    return make_dataset(emb, labels)
