"""Turn patent records into padded arrays and collate training batches."""
from dataclasses import dataclass

import numpy as np

from .claims import parse_claims
from .embeddings import EmbeddingProviderConfig, make_provider


@dataclass(frozen=True)
class Sample:
    """A target application together with its retrieved base references."""
    target: object
    refs: tuple = ()


@dataclass
class PatentFeatures:
    content: np.ndarray  # (n_max, d_h)
    levels: np.ndarray   # (n_max,) int
    phi: np.ndarray      # (n_max, n_max); phi[i, j] = 1 iff claim j cites claim i
    mask: np.ndarray     # (n_max,) bool
    graph: object = None
    texts: tuple = ()


@dataclass
class Batch:
    content: np.ndarray      # (B, n, d)
    levels: np.ndarray       # (B, n)
    phi: np.ndarray          # (B, n, n)
    mask: np.ndarray         # (B, n)
    ref_content: np.ndarray  # (B, k, n, d)
    ref_levels: np.ndarray   # (B, k, n)
    ref_phi: np.ndarray      # (B, k, n, n)
    ref_mask: np.ndarray     # (B, k, n)
    ref_valid: np.ndarray    # (B, k) bool
    y: np.ndarray = None     # (B,)

    @property
    def size(self):
        return self.content.shape[0]

    @property
    def k(self):
        return self.ref_valid.shape[1]


def fc_levels(n):
    return np.arange(n)


class Featurizer:
    """Parses, embeds and pads patents; results are cached by record id."""

    def __init__(self, config, provider=None):
        self.config = config
        if provider is None:
            provider = make_provider(EmbeddingProviderConfig(
                kind=config.embedding, dim=config.d_h, seed=config.embedding_seed,
                path=config.embedding_path, max_tokens=config.w))
        self.provider = provider
        self._cache = {}

    def features(self, record):
        cached = self._cache.get(record.id)
        if cached is not None:
            return cached
        cfg = self.config
        claims, graph = parse_claims(list(record.claims), strict=cfg.strict_claims, n_max=cfg.n_max)
        n, d = cfg.n_max, cfg.d_h
        content = np.zeros((n, d))
        levels = np.zeros(n, dtype=np.int64)
        phi = np.zeros((n, n))
        mask = np.zeros(n, dtype=bool)
        m = graph.n
        for c in claims:
            content[c.index - 1] = self.provider.embed_claim(record.id, c.index, c.text)
        mask[:m] = True
        if cfg.fc_graph:
            phi[:m, :m] = np.triu(np.ones((m, m)), k=1)
            levels[:m] = fc_levels(m)
        else:
            for i, j in graph.edges:
                phi[i - 1, j - 1] = 1.0
            levels[:m] = graph.hierarchy
        feats = PatentFeatures(content, levels, phi, mask, graph, tuple(c.text for c in claims))
        self._cache[record.id] = feats
        return feats

    def collate(self, samples, labels=None):
        cfg = self.config
        k = 0 if cfg.no_brr else cfg.k
        n, d, B = cfg.n_max, cfg.d_h, len(samples)
        tf = [self.features(s.target) for s in samples]
        batch = Batch(
            content=np.stack([f.content for f in tf]),
            levels=np.stack([f.levels for f in tf]),
            phi=np.stack([f.phi for f in tf]),
            mask=np.stack([f.mask for f in tf]),
            ref_content=np.zeros((B, k, n, d)),
            ref_levels=np.zeros((B, k, n), dtype=np.int64),
            ref_phi=np.zeros((B, k, n, n)),
            ref_mask=np.zeros((B, k, n), dtype=bool),
            ref_valid=np.zeros((B, k), dtype=bool),
        )
        for b, s in enumerate(samples):
            for r, ref in enumerate(list(s.refs)[:k]):
                f = self.features(ref)
                batch.ref_content[b, r] = f.content
                batch.ref_levels[b, r] = f.levels
                batch.ref_phi[b, r] = f.phi
                batch.ref_mask[b, r] = f.mask
                batch.ref_valid[b, r] = True
        if labels is not None:
            batch.y = np.asarray(labels, dtype=np.float64)
        return batch
