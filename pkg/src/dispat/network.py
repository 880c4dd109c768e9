"""Parameter container and batched forward pass of the full model."""
from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .encoder import encode, init_encoder_params
from .heads import (classification_loss, classify, contrastive_loss, disentangle, gate,
                    init_head_params, total_loss)


@dataclass
class ForwardResult:
    probs: object
    loss: object = None
    l_sim: object = None
    l_spe: object = None
    l_clf: object = None
    h_t: object = None
    h_sim: object = None
    h_spe: object = None
    g_sim: object = None
    g_spe: object = None
    h_br: object = None
    pooled_sim: object = None
    pooled_spe: object = None
    pooled_refs: object = None


class DiSPatNetwork:
    def __init__(self, config, seed=None):
        self.config = config
        seed = config.seed if seed is None else seed
        rng = np.random.default_rng(seed)
        init = {**init_encoder_params(config, rng), **init_head_params(config, rng)}
        self.params = {name: nx.Parameter(name, value) for name, value in init.items()}
        # dropout masks draw from their own stream so they never shift init
        self.dropout_rng = np.random.default_rng([seed, 1])

    def parameters(self):
        return list(self.params.values())

    def trainable(self):
        skip = set()
        if self.config.zero_ref_bias:
            skip |= {"encoder.r0", "encoder.r1"}
        if self.config.no_hier_emb:
            skip.add("encoder.hier_table")
        if self.config.no_drl:
            skip |= {n for n in self.params if n.startswith("gate_")}
        return [p for n, p in self.params.items() if n not in skip]

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def state_dict(self):
        return {n: p.data.copy() for n, p in self.params.items()}

    def load_state_dict(self, state):
        missing = set(self.params) ^ set(state)
        if missing:
            raise KeyError(f"parameter names differ: {sorted(missing)}")
        for n, p in self.params.items():
            if state[n].shape != p.data.shape:
                raise ValueError(f"{n}: shape {state[n].shape} != {p.data.shape}")
            p.data = np.array(state[n], dtype=np.float64)

    # ---------------------------------------------------------------- forward

    def encode(self, content, levels, phi, mask, training=False):
        return encode(content, levels, phi, mask, self.params, self.config,
                      rng=self.dropout_rng, training=training)

    def forward(self, batch, training=False, with_loss=True):
        cfg = self.config
        B, n, d = batch.content.shape
        k = batch.k
        use_refs = k > 0 and not cfg.no_brr and batch.ref_valid.any()

        if use_refs and not cfg.detach_refs:
            stacked = _stack(batch)
            h_all = self.encode(*stacked, training=training)
            h_t = nx.getitem(h_all, slice(0, B))
            h_br = nx.reshape(nx.getitem(h_all, slice(B, None)), (B, k, n, d))
        else:
            h_t = self.encode(batch.content, batch.levels, batch.phi, batch.mask, training)
            h_br = None
            if use_refs:
                with nx.no_grad():
                    h_br = self.encode(batch.ref_content.reshape(B * k, n, d),
                                       batch.ref_levels.reshape(B * k, n),
                                       batch.ref_phi.reshape(B * k, n, n),
                                       batch.ref_mask.reshape(B * k, n), training)
                h_br = nx.Tensor(h_br.data.reshape(B, k, n, d))

        if cfg.no_drl:
            ones = np.asarray(batch.mask, dtype=np.float64)[..., None]
            g_sim = g_spe = nx.Tensor(ones)
            h_sim = h_spe = h_t
        else:
            g_sim = gate(h_t, self.params, "sim", batch.mask)
            g_spe = gate(h_t, self.params, "spe", batch.mask)
            h_sim, h_spe = disentangle(h_t, g_sim, g_spe)

        pooled_sim = nx.masked_mean_pool(h_sim, batch.mask)
        pooled_spe = nx.masked_mean_pool(h_spe, batch.mask)
        probs = classify(pooled_sim, pooled_spe, self.params)
        res = ForwardResult(probs=probs, h_t=h_t, h_sim=h_sim, h_spe=h_spe, g_sim=g_sim,
                            g_spe=g_spe, h_br=h_br, pooled_sim=pooled_sim, pooled_spe=pooled_spe)
        if h_br is not None:
            res.pooled_refs = nx.masked_mean_pool(h_br, batch.ref_mask, allow_empty=True)
        if not with_loss or batch.y is None:
            return res

        res.l_clf = classification_loss(probs, batch.y)
        if use_refs and not cfg.no_drl:
            res.l_sim, res.l_spe = contrastive_loss(pooled_sim, pooled_spe, res.pooled_refs,
                                                    batch.ref_valid)
        res.loss = total_loss(res.l_clf, res.l_sim, res.l_spe, (cfg.w_sim, cfg.w_spe, cfg.w_clf))
        return res


def _stack(batch):
    B, k, n, d = batch.ref_content.shape
    return (np.concatenate([batch.content, batch.ref_content.reshape(B * k, n, d)]),
            np.concatenate([batch.levels, batch.ref_levels.reshape(B * k, n)]),
            np.concatenate([batch.phi, batch.ref_phi.reshape(B * k, n, n)]),
            np.concatenate([batch.mask, batch.ref_mask.reshape(B * k, n)]))
