"""Gated disentanglement, contrastive losses and the approval classifier.

Two independent gates score every claim of the target; scaling the claim rows
by those scores yields a similarity view and a specificity view. Both views
are mean-pooled over real claims before they meet the base references or the
classifier.
"""
import numpy as np

from . import numerics as nx
from .numerics.optim import glorot_uniform

PROB_FLOOR = 1e-12


def init_head_params(config, rng):
    d, dg = config.d_h, config.gate_width
    p = {}
    for gate in ("sim", "spe"):
        p[f"gate_{gate}.w1"] = glorot_uniform(rng, dg, d)
        p[f"gate_{gate}.b1"] = np.zeros(dg)
        p[f"gate_{gate}.w2"] = glorot_uniform(rng, 1, dg)
        p[f"gate_{gate}.b2"] = np.zeros(1)
    p["classifier.w"] = glorot_uniform(rng, 2, 2 * d)
    p["classifier.b"] = np.zeros(2)
    return p


def gate(h, params, which, mask):
    """Per-claim gate values in (0, 1); exactly 0 at padded claims.

    ``h`` is ``(B, n, d)``; the result is ``(B, n, 1)`` so it broadcasts over
    feature columns.
    """
    pre = f"gate_{which}"
    hid = nx.relu(nx.add(nx.matmul(h, nx.transpose(params[f"{pre}.w1"])), params[f"{pre}.b1"]))
    g = nx.sigmoid(nx.add(nx.matmul(hid, nx.transpose(params[f"{pre}.w2"])), params[f"{pre}.b2"]))
    return nx.hadamard(g, np.asarray(mask, dtype=np.float64)[..., None])


def disentangle(h, g_sim, g_spe):
    """Row-wise scaling of the target representation by each gate."""
    return nx.hadamard(g_sim, h), nx.hadamard(g_spe, h)


def f_sim(x1, x2, branch):
    """``1 - cos`` for the similarity branch, ``cos`` for specificity."""
    c = nx.cosine(x1, x2)
    if branch == "sim":
        return nx.sub(1.0, c)
    if branch == "spe":
        return c
    raise ValueError(f"branch must be 'sim' or 'spe', not {branch!r}")


def contrastive_loss(pooled_sim, pooled_spe, pooled_refs, ref_valid):
    """Per-target ``(L_sim, L_spe)``, each summed over the valid references.

    ``pooled_sim``/``pooled_spe`` are ``(B, d)``, ``pooled_refs`` is
    ``(B, k, d)`` and ``ref_valid`` ``(B, k)``. Empty reference sets give 0.
    """
    B, d = pooled_sim.shape
    valid = np.asarray(ref_valid, dtype=np.float64)
    l_sim = nx.sum_axis(nx.hadamard(f_sim(nx.reshape(pooled_sim, (B, 1, d)), pooled_refs, "sim"), valid), -1)
    l_spe = nx.sum_axis(nx.hadamard(f_sim(nx.reshape(pooled_spe, (B, 1, d)), pooled_refs, "spe"), valid), -1)
    return l_sim, l_spe


def classify(pooled_sim, pooled_spe, params):
    """Two-class probabilities; column 1 is "approved"."""
    z = nx.concat_last([pooled_sim, pooled_spe])
    logits = nx.add(nx.matmul(z, nx.transpose(params["classifier.w"])), params["classifier.b"])
    return nx.softmax_row(logits)


def classification_loss(probs, y):
    """Binary cross-entropy on the approved-class probability, per sample."""
    y = np.asarray(y, dtype=np.float64)
    p1 = nx.clamp(nx.getitem(probs, (slice(None), 1)), PROB_FLOOR, 1.0 - PROB_FLOOR)
    return nx.scale(nx.add(nx.hadamard(nx.log(p1), y),
                           nx.hadamard(nx.log(nx.sub(1.0, p1)), 1.0 - y)), -1.0)


def total_loss(l_clf, l_sim=None, l_spe=None, weights=(1.0, 1.0, 1.0)):
    """Batch mean of ``w_sim*L_sim + w_spe*L_spe + w_clf*L_clf``."""
    w_sim, w_spe, w_clf = weights
    per = nx.scale(l_clf, w_clf)
    if l_sim is not None:
        per = nx.add(per, nx.scale(l_sim, w_sim))
    if l_spe is not None:
        per = nx.add(per, nx.scale(l_spe, w_spe))
    return nx.mean_all(per)
