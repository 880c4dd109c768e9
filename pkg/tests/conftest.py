import numpy as np
import pytest

from dispat.config import TrainConfig
from dispat.estimator import Bm25Retriever
from dispat.synth import SynthConfig, generate

TINY = dict(k=2, n_max=4, w=16, d_h=16, heads=2, n_layers=1, dropout=0.0, batch_size=8,
            max_steps=40, eval_every=20, lr=3e-3, seed=3)


@pytest.fixture(scope="session")
def small_synth():
    return generate(SynthConfig(seed=5, num_prior=60, num_targets=80, num_topics=6))


@pytest.fixture(scope="session")
def small_samples(small_synth):
    corpus, _ = small_synth
    targets = corpus.targets()
    samples = Bm25Retriever(k=2).fit(corpus).transform(targets)
    y = np.array([t.label for t in targets])
    return samples, y


@pytest.fixture
def tiny_config():
    return TrainConfig(**TINY)
