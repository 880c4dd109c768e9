"""Scikit-learn compatible front end.

``Bm25Retriever`` pairs each target with its base references;
``DiSPatClassifier`` learns approval from those pairs::

    retriever = Bm25Retriever(k=3).fit(corpus)
    X = retriever.transform(corpus.targets())
    clf = DiSPatClassifier(**profile("desk").to_dict()).fit(X)
    clf.predict_proba(X)[:, 1]
"""
import inspect

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import numerics as nx
from .checkpoint import from_bytes, load_checkpoint, save_checkpoint, to_bytes
from .config import TrainConfig
from .featurize import Featurizer, Sample
from .network import DiSPatNetwork
from .retrieval import Bm25Index
from .training import evaluate, fit as fit_network, predict_proba
from .validation import check_labels, check_samples


class Bm25Retriever(TransformerMixin, BaseEstimator):
    """Attach the Top-``k`` earlier granted patents to each target."""

    def __init__(self, k=5, k1=1.5, b=0.75):
        self.k = k
        self.k1 = k1
        self.b = b

    def fit(self, X, y=None):
        records = list(X)
        self.records_ = {r.id: r for r in records}
        self.index_ = Bm25Index.from_corpus(records, k1=self.k1, b=self.b)
        return self

    def retrieve(self, target):
        check_is_fitted(self, "index_")
        return self.index_.top_k_base_reference(target, self.k)

    def transform(self, X):
        out = []
        for target in X:
            hit = self.retrieve(target)
            out.append(Sample(target, tuple(self.records_[i] for i, _ in hit.refs)))
        return out


class DiSPatClassifier(ClassifierMixin, BaseEstimator):
    """Structure-aware, reference-contrastive patent approval classifier.

    Parameters mirror :class:`~dispat.config.TrainConfig`. ``fit`` takes a
    sequence of :class:`~dispat.featurize.Sample` (target plus references);
    prediction only looks at the targets.
    """

    def __init__(self, k=3, n_max=8, w=64, d_h=64, heads=4, n_layers=2, d_g=None, lr=1e-3,
                 dropout=0.1, batch_size=4, max_steps=3000, eval_every=500, seed=1,
                 max_level=8, ffn=False, ln_affine=False, detach_refs=False, w_sim=1.0,
                 w_spe=1.0, w_clf=1.0, strict_claims=False, embedding="hashed_ngram",
                 embedding_path=None, embedding_seed=0, bm25_k1=1.5, bm25_b=0.75,
                 no_brr=False, no_drl=False, zero_ref_bias=False, fc_graph=False,
                 no_hier_emb=False):
        self.k = k
        self.n_max = n_max
        self.w = w
        self.d_h = d_h
        self.heads = heads
        self.n_layers = n_layers
        self.d_g = d_g
        self.lr = lr
        self.dropout = dropout
        self.batch_size = batch_size
        self.max_steps = max_steps
        self.eval_every = eval_every
        self.seed = seed
        self.max_level = max_level
        self.ffn = ffn
        self.ln_affine = ln_affine
        self.detach_refs = detach_refs
        self.w_sim = w_sim
        self.w_spe = w_spe
        self.w_clf = w_clf
        self.strict_claims = strict_claims
        self.embedding = embedding
        self.embedding_path = embedding_path
        self.embedding_seed = embedding_seed
        self.bm25_k1 = bm25_k1
        self.bm25_b = bm25_b
        self.no_brr = no_brr
        self.no_drl = no_drl
        self.zero_ref_bias = zero_ref_bias
        self.fc_graph = fc_graph
        self.no_hier_emb = no_hier_emb

    @classmethod
    def from_config(cls, config):
        names = inspect.signature(cls.__init__).parameters
        return cls(**{k: v for k, v in config.to_dict().items() if k in names})

    def get_config(self):
        return TrainConfig.from_dict(self.get_params())

    def _build(self, provider=None):
        config = self.get_config()
        self.config_ = config
        self.network_ = DiSPatNetwork(config)
        self.featurizer_ = Featurizer(config, provider)
        self.classes_ = np.array([0, 1])

    def fit(self, X, y=None, X_val=None, y_val=None, log=None, checkpoint_path=None,
            provider=None):
        samples = check_samples(X)
        y = check_labels(y, samples)
        val = None
        if X_val is not None:
            val = check_samples(X_val)
            y_val = check_labels(y_val, val)
        self._build(provider)
        self.history_ = fit_network(self.network_, self.featurizer_, samples, y, val, y_val,
                                    log=log, checkpoint_path=checkpoint_path)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "network_")
        return predict_proba(self.network_, self.featurizer_, check_samples(X))

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)

    def decision_function(self, X):
        return self.predict_proba(X)[:, 1]

    def evaluate(self, X, y=None):
        samples = check_samples(X)
        return evaluate(self.network_, self.featurizer_, samples, check_labels(y, samples))

    def transform(self, X):
        """Pooled ``[similarity, specificity]`` features, shape ``(N, 2 * d_h)``."""
        check_is_fitted(self, "network_")
        samples = check_samples(X)
        with nx.no_grad():
            res = self.network_.forward(self.featurizer_.collate(samples), with_loss=False)
        return np.concatenate([res.pooled_sim.data, res.pooled_spe.data], axis=1)

    def forward(self, X):
        """Inference-mode forward pass over ``X`` with references encoded."""
        check_is_fitted(self, "network_")
        with nx.no_grad():
            return self.network_.forward(self.featurizer_.collate(check_samples(X)),
                                         with_loss=False)

    # ------------------------------------------------------------ persistence

    def save(self, path):
        check_is_fitted(self, "network_")
        save_checkpoint(path, self.config_, self.network_.state_dict(), step=self.step_)

    @property
    def step_(self):
        if hasattr(self, "history_"):
            return self.history_.best_step or 0
        return getattr(self, "loaded_step_", 0)

    def to_bytes(self):
        return to_bytes(self.config_, self.network_.state_dict(), step=self.step_)

    @classmethod
    def load(cls, path, provider=None, expected_config=None):
        config, params, _, step = load_checkpoint(path, expected_config)
        return cls._restore(config, params, step, provider)

    @classmethod
    def from_bytes(cls, data, provider=None, expected_config=None):
        config, params, _, step = from_bytes(data, expected_config)
        return cls._restore(config, params, step, provider)

    @classmethod
    def _restore(cls, config, params, step, provider):
        est = cls.from_config(config)
        est._build(provider)
        est.network_.load_state_dict(params)
        est.loaded_step_ = step
        return est
