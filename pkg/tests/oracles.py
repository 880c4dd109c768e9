"""Independent reference implementations used as test oracles.

These are deliberately naive (plain loops, no shared code with the package)
so that agreement is evidence of correctness rather than of shared bugs.
"""
import math
from collections import Counter

import numpy as np


def bm25_brute(query_tokens, docs, k1=1.5, b=0.75, before=None, k=None):
    """Scan every ``(id, tokens, date)`` doc; rank by score desc then id asc."""
    N = len(docs)
    avg = sum(len(t) for _, t, _ in docs) / N
    df = {}
    for _, toks, _ in docs:
        for term in set(toks):
            df[term] = df.get(term, 0) + 1
    seen, terms = set(), []
    for t in query_tokens:
        if t not in seen:
            seen.add(t)
            terms.append(t)
    scored = []
    for doc_id, toks, date in docs:
        if before is not None and not date < before:
            continue
        counts = Counter(toks)
        s = 0.0
        for term in terms:
            tf = counts[term]
            if tf == 0:
                continue
            idf = math.log((N - df[term] + 0.5) / (df[term] + 0.5) + 1.0)
            s += idf * (tf * (k1 + 1)) / (tf + k1 * (1 - b + b * len(toks) / avg))
        scored.append((doc_id, s))
    scored.sort(key=lambda x: (-x[1], x[0]))
    return scored if k is None else scored[:k]


def softmax(row):
    m = max(row)
    e = [math.exp(x - m) for x in row]
    s = sum(e)
    return [x / s for x in e]


def layer_norm(row, eps=1e-5):
    mu = sum(row) / len(row)
    var = sum((x - mu) ** 2 for x in row) / len(row)
    return [(x - mu) / math.sqrt(var + eps) for x in row]


def vanilla_attention_layer(x, wq, wk, wv, heads, n_real=None):
    """Plain multi-head self-attention + residual + LayerNorm, loop by loop.

    ``x`` is ``(n, d)``; only the first ``n_real`` rows are real. Logits are
    scaled by sqrt(d). Padded output rows are zero.
    """
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    n_real = n if n_real is None else n_real
    dh = d // heads
    q, k, v = x @ wq, x @ wk, x @ wv
    out = np.zeros((n, d))
    for i in range(n_real):
        ctx = [0.0] * d
        for h in range(heads):
            cols = range(h * dh, (h + 1) * dh)
            logits = [sum(q[i, c] * k[j, c] for c in cols) / math.sqrt(d) for j in range(n_real)]
            att = softmax(logits)
            for c in cols:
                ctx[c] = sum(att[j] * v[j, c] for j in range(n_real))
        out[i] = layer_norm([ctx[c] + x[i, c] for c in range(d)])
    return out


def auc_pairs(labels, scores):
    """Exhaustive pairwise concordance; ties count one half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    if not pos or not neg:
        return None
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def cos(a, b):
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0 or nb == 0:
        return 0.0
    return sum(x * y for x, y in zip(a, b)) / (na * nb)


def numeric_grad(f, x, h=1e-5):
    """Central differences of scalar ``f`` at array ``x`` (modified in place)."""
    g = np.zeros_like(x)
    flat, gf = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gf[i] = (fp - fm) / (2 * h)
    return g
