"""Toy model and batch for end-to-end gradient checks of the full loss."""
import numpy as np

from .config import TrainConfig
from .featurize import Batch
from .network import DiSPatNetwork
from .numerics import grad_check

TOY = dict(d_h=8, n_max=3, heads=2, n_layers=2, k=2, dropout=0.0, batch_size=2, w=16)


def _graph(rng, m, n):
    """Random citation matrix over ``m`` real claims padded to ``n``, plus levels."""
    phi = np.zeros((n, n))
    levels = np.zeros(n, dtype=np.int64)
    for j in range(1, m):
        parents = [i for i in range(j) if rng.random() < 0.6]
        for i in parents:
            phi[i, j] = 1.0
        if parents:
            levels[j] = 1 + max(levels[i] for i in parents)
    mask = np.arange(n) < m
    return phi, levels, mask


def toy_batch(config, seed=0):
    """Two targets: one full, one with a padded claim and a missing reference."""
    rng = np.random.default_rng(seed)
    n, d, k, B = config.n_max, config.d_h, config.k, 2
    sizes = [n, max(n - 1, 1)]
    batch = Batch(
        content=np.zeros((B, n, d)), levels=np.zeros((B, n), dtype=np.int64),
        phi=np.zeros((B, n, n)), mask=np.zeros((B, n), dtype=bool),
        ref_content=np.zeros((B, k, n, d)), ref_levels=np.zeros((B, k, n), dtype=np.int64),
        ref_phi=np.zeros((B, k, n, n)), ref_mask=np.zeros((B, k, n), dtype=bool),
        ref_valid=np.zeros((B, k), dtype=bool), y=np.array([1.0, 0.0]))
    for b, m in enumerate(sizes):
        batch.phi[b], batch.levels[b], batch.mask[b] = _graph(rng, m, n)
        batch.content[b, :m] = rng.normal(size=(m, d))
        for r in range(k):
            if b == 1 and r == k - 1:
                continue
            mr = int(rng.integers(1, n + 1))
            batch.ref_phi[b, r], batch.ref_levels[b, r], batch.ref_mask[b, r] = _graph(rng, mr, n)
            batch.ref_content[b, r, :mr] = rng.normal(size=(mr, d))
            batch.ref_valid[b, r] = True
    return batch


def toy_model(seed=0, **overrides):
    """Toy network with every parameter moved off its (often zero) init value."""
    config = TrainConfig(**{**TOY, "seed": seed, **overrides})
    net = DiSPatNetwork(config)
    rng = np.random.default_rng([seed, 3])
    for p in net.parameters():
        p.data = p.data + rng.normal(scale=0.3, size=p.data.shape)
    return net, toy_batch(config, seed)


def toy_grad_check(seed=0, tolerance=1e-4, **overrides):
    """Finite-difference check of the full training loss on the toy model."""
    net, batch = toy_model(seed, **overrides)
    return grad_check(lambda: net.forward(batch, training=False).loss, net.trainable(), tolerance)
