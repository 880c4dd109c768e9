"""Claim-level evidence: specificity scores and prior-art backtracking.

Unlike the training losses, which compare pooled vectors, everything here is
computed per claim row. A target claim's specificity score is its highest
(or mean) cosine, in the specificity view, to any claim of the base
references; lower means more novel. Backtracking ranks reference claims by
cosine to one target claim in the similarity view.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyReferenceError, InvalidClaimError

GLYPHS = " ░▒▓█"
STAR = "*"


@dataclass(frozen=True)
class RefClaims:
    """Encoded real claims of one base reference."""
    ref_id: str
    rows: np.ndarray
    texts: tuple = ()


@dataclass(frozen=True)
class Hit:
    ref_id: str
    claim: int
    score: float
    excerpt: str = ""

    def to_dict(self):
        return {"ref_id": self.ref_id, "claim": self.claim, "score": self.score,
                "excerpt": self.excerpt}


@dataclass
class EvidenceReport:
    target_id: str
    specificity: list
    cells: list
    ref_ids: list
    backtrack: dict = field(default_factory=dict)
    highlighted: tuple = ()
    aggregate: str = "max"

    def to_dict(self):
        return {
            "target_id": self.target_id,
            "aggregate": self.aggregate,
            "ref_ids": list(self.ref_ids),
            "specificity": [{"claim": i, "score": s} for i, s in self.specificity],
            "cells": [list(row) for row in self.cells],
            "highlighted": list(self.highlighted),
            "backtrack": [{"claim": c, "hits": [h.to_dict() for h in hits]}
                          for c, hits in sorted(self.backtrack.items())],
        }


def cosine_matrix(a, b):
    """Row-by-row cosines of ``a`` (m, d) against ``b`` (r, d); zero rows give 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = np.outer(na, nb)
    ok = denom > 0
    out = np.where(ok, (a @ b.T) / np.where(ok, denom, 1.0), 0.0)
    return np.clip(out, -1.0, 1.0)


def _rows(h, mask):
    h = np.asarray(h, dtype=np.float64)
    if mask is None:
        return h
    return h[np.asarray(mask, dtype=bool)]


def _check_refs(refs):
    refs = [r for r in refs if len(r.rows)]
    if not refs:
        raise EmptyReferenceError("specificity needs at least one base reference with claims")
    return refs


def specificity_scores(h_spe, refs, mask=None, aggregate="max"):
    """Per-claim ``(index, score)`` pairs, 1-based, over real target claims."""
    refs = _check_refs(refs)
    rows = _rows(h_spe, mask)
    sims = cosine_matrix(rows, np.concatenate([r.rows for r in refs]))
    if aggregate == "max":
        agg = sims.max(axis=1)
    elif aggregate == "mean":
        agg = sims.mean(axis=1)
    else:
        raise ValueError(f"aggregate must be 'max' or 'mean', not {aggregate!r}")
    return [(i + 1, float(s)) for i, s in enumerate(agg)]


def cell_scores(h_spe, refs, mask=None, aggregate="max"):
    """Claim x reference grid: aggregate cosine of each target claim to each ref."""
    refs = _check_refs(refs)
    rows = _rows(h_spe, mask)
    reduce = np.max if aggregate == "max" else np.mean
    return [[float(reduce(cosine_matrix(row[None], r.rows))) for r in refs] for row in rows]


def highlighted(scores):
    """Index of the highest-scoring claim; the first one wins ties."""
    if not scores:
        return ()
    best = max(s for _, s in scores)
    return (next(i for i, s in scores if s == best),)


def backtrack(h_sim, refs, claim_index, m=3, mask=None, excerpt_chars=80):
    """Top-``m`` reference claims most similar to target claim ``claim_index``.

    Sorted by descending cosine; ties go to the smaller ``(ref id, claim)``.
    """
    h_sim = np.asarray(h_sim, dtype=np.float64)
    real = np.ones(len(h_sim), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not 1 <= claim_index <= len(real) or not real[claim_index - 1]:
        raise InvalidClaimError(f"claim {claim_index} is not a real claim of the target")
    row = h_sim[claim_index - 1][None]
    cands = []
    for ref in refs:
        sims = cosine_matrix(row, ref.rows)[0] if len(ref.rows) else []
        for j, s in enumerate(sims):
            text = ref.texts[j] if j < len(ref.texts) else ""
            cands.append(Hit(ref.ref_id, j + 1, float(s), text[:excerpt_chars]))
    cands.sort(key=lambda h: (-h.score, h.ref_id, h.claim))
    return cands[:max(m, 0)]


def build_report(target_id, h_sim, h_spe, refs, mask=None, m=3, claims=None, aggregate="max",
                 excerpt_chars=80):
    """Assemble an :class:`EvidenceReport`.

    ``claims`` selects which target claims get a backtrack list; by default
    only the highlighted (least specific) claim does.
    """
    spec = specificity_scores(h_spe, refs, mask, aggregate)
    stars = highlighted(spec)
    chosen = stars if claims is None else tuple(claims)
    live = _check_refs(refs)
    return EvidenceReport(
        target_id=target_id,
        specificity=spec,
        cells=cell_scores(h_spe, refs, mask, aggregate),
        ref_ids=[r.ref_id for r in live],
        backtrack={c: backtrack(h_sim, live, c, m, mask, excerpt_chars) for c in chosen},
        highlighted=stars,
        aggregate=aggregate,
    )


def explain(clf, sample, m=3, claims=None, aggregate="max", excerpt_chars=80):
    """Evidence report for one ``Sample`` under a fitted classifier."""
    res = clf.forward([sample])
    if res.h_br is None:
        raise EmptyReferenceError(f"{sample.target.id}: no base references to compare against")
    fz = clf.featurizer_
    tmask = fz.features(sample.target).mask
    refs = []
    for r, rec in enumerate(list(sample.refs)[:res.h_br.shape[1]]):
        f = fz.features(rec)
        refs.append(RefClaims(rec.id, res.h_br.data[0, r][f.mask], f.texts))
    return build_report(sample.target.id, res.h_sim.data[0], res.h_spe.data[0], refs, tmask,
                        m=m, claims=claims, aggregate=aggregate, excerpt_chars=excerpt_chars)


def glyph_levels(values, ramp=GLYPHS):
    """Map each value to a ramp position by its rank among ``values``."""
    values = list(values)
    if len(values) < 2:
        return [0] * len(values)
    out = []
    top = len(ramp) - 1
    for v in values:
        below = sum(1 for u in values if u < v)
        out.append(int(below * top // (len(values) - 1)))
    return out


def render_report(report, fmt="json"):
    if fmt == "json":
        return json.dumps(report.to_dict(), sort_keys=True, indent=1, ensure_ascii=False) + "\n"
    if fmt != "text-heatmap":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [f"target {report.target_id}  refs: {' '.join(report.ref_ids) or '-'}"]
    flat = [v for row in report.cells for v in row]
    cell_glyph = glyph_levels(flat)
    row_glyph = glyph_levels([s for _, s in report.specificity])
    width = len(report.ref_ids)
    for r, (idx, score) in enumerate(report.specificity):
        cells = "".join(GLYPHS[g] for g in cell_glyph[r * width:(r + 1) * width])
        star = STAR if idx in report.highlighted else " "
        lines.append(f"{idx:>3} |{cells}| {GLYPHS[row_glyph[r]]} {score:+.4f} {star}")
    for claim, hits in sorted(report.backtrack.items()):
        lines.append(f"claim {claim} backtrack:")
        for h in hits:
            lines.append(f"  {h.ref_id}#{h.claim} {h.score:+.4f} {h.excerpt}")
    return "\n".join(lines) + "\n"
