"""Structure-aware claim encoder.

Node features are content vectors plus a learned per-level embedding. Each
layer is multi-head self-attention whose logits get an additive scalar bias
``r1`` where the key claim cites the query claim and ``r0`` elsewhere,
followed by a residual connection and row-wise LayerNorm::

    A[i, j] = (h_i W_Q)(h_j W_K)^T / sqrt(d_h) + r[phi(i, j)]
    H = LayerNorm(softmax(A) V + F)

``r0``/``r1`` are two scalars shared by every layer and head. Logits are
scaled by ``sqrt(d_h)``, not ``sqrt(d_h / heads)``.
"""
import math

import numpy as np

from . import numerics as nx
from .numerics.optim import glorot_uniform, normal


def init_encoder_params(config, rng):
    d = config.d_h
    p = {
        "encoder.hier_table": normal(rng, (config.max_level + 1, d)),
        "encoder.r0": np.zeros(1),
        "encoder.r1": np.zeros(1),
    }
    for layer in range(config.n_layers):
        pre = f"encoder.layer{layer}"
        for name in ("w_q", "w_k", "w_v"):
            p[f"{pre}.{name}"] = glorot_uniform(rng, d, d)
        if config.ffn:
            p[f"{pre}.ffn_w1"] = glorot_uniform(rng, d, d)
            p[f"{pre}.ffn_b1"] = np.zeros(d)
            p[f"{pre}.ffn_w2"] = glorot_uniform(rng, d, d)
            p[f"{pre}.ffn_b2"] = np.zeros(d)
        if config.ln_affine:
            p[f"{pre}.ln_gain"] = np.ones(d)
            p[f"{pre}.ln_bias"] = np.zeros(d)
            if config.ffn:
                p[f"{pre}.ffn_ln_gain"] = np.ones(d)
                p[f"{pre}.ffn_ln_bias"] = np.zeros(d)
    return p


def node_features(content, levels, hier_table, max_level, use_hier=True):
    """Content vectors plus the embedding of each claim's (clamped) level."""
    if not use_hier:
        return nx.Tensor(content)
    idx = np.minimum(np.asarray(levels), max_level)
    return nx.add(content, nx.take_rows(hier_table, idx))


def reference_bias(phi, r0, r1, mask=None):
    """Per-pair logit bias ``r0 + (r1 - r0) * phi``.

    When ``mask`` is given, padded key columns additionally receive
    :data:`MASK_VALUE` so they get exactly zero attention.
    """
    phi = np.asarray(phi, dtype=np.float64)
    bias = nx.add(nx.hadamard(r0, 1.0 - phi), nx.hadamard(r1, phi))
    if mask is not None:
        bias = nx.add(bias, key_mask(mask))
    return bias


def key_mask(mask):
    mask = np.asarray(mask, dtype=bool)
    return np.where(mask, 0.0, nx.MASK_VALUE)[..., None, :]


def encoder_layer(x, bias, mask, params, prefix, heads, dropout=0.0, rng=None, training=False,
                  return_attention=False):
    """One biased attention layer on ``x`` of shape ``(B, n, d)``.

    ``bias`` is ``(B, n, n)`` and already contains the key mask. Output rows
    at padded positions are zero.
    """
    B, n, d = x.shape
    dh = d // heads
    q = nx.matmul(x, params[f"{prefix}.w_q"])
    k = nx.matmul(x, params[f"{prefix}.w_k"])
    v = nx.matmul(x, params[f"{prefix}.w_v"])

    def split(t):
        return nx.transpose(nx.reshape(t, (B, n, heads, dh)), (0, 2, 1, 3))

    q, k, v = split(q), split(k), split(v)
    logits = nx.scale(nx.matmul(q, nx.transpose(k)), 1.0 / math.sqrt(d))
    logits = nx.add(logits, nx.reshape(bias, (B, 1, n, n)))
    att = nx.softmax_row(logits)
    att_used = nx.dropout(att, dropout, rng, training)
    ctx = nx.matmul(att_used, v)
    ctx = nx.reshape(nx.transpose(ctx, (0, 2, 1, 3)), (B, n, d))
    out = nx.layer_norm_row(nx.add(ctx, x), gain=params.get(f"{prefix}.ln_gain"),
                            bias=params.get(f"{prefix}.ln_bias"))
    if f"{prefix}.ffn_w1" in params:
        hid = nx.relu(nx.add(nx.matmul(out, params[f"{prefix}.ffn_w1"]), params[f"{prefix}.ffn_b1"]))
        ff = nx.add(nx.matmul(hid, params[f"{prefix}.ffn_w2"]), params[f"{prefix}.ffn_b2"])
        out = nx.layer_norm_row(nx.add(ff, out), gain=params.get(f"{prefix}.ffn_ln_gain"),
                                bias=params.get(f"{prefix}.ffn_ln_bias"))
    out = nx.hadamard(out, np.asarray(mask, dtype=np.float64)[..., None])
    return (out, att) if return_attention else out


def encode(content, levels, phi, mask, params, config, rng=None, training=False):
    """Encode a batch of padded patents into per-claim representations."""
    mask = np.asarray(mask, dtype=bool)
    x = node_features(content, levels, params["encoder.hier_table"], config.max_level,
                      use_hier=not config.no_hier_emb)
    if config.zero_ref_bias:
        bias = nx.Tensor(np.broadcast_to(key_mask(mask), phi.shape).copy())
    else:
        bias = reference_bias(phi, params["encoder.r0"], params["encoder.r1"], mask)
    x = nx.hadamard(x, mask[..., None].astype(np.float64))
    for layer in range(config.n_layers):
        x = encoder_layer(x, bias, mask, params, f"encoder.layer{layer}", config.heads,
                          config.dropout, rng, training)
    return x
