"""Okapi BM25 over granted patents with filing-date filtered Top-k.

Scoring uses the non-negative "plus one" IDF::

    idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1)

and sums each distinct query term once, in first-occurrence order.
Documents are stored in ascending id order, which is also the tie-break
order, so rankings do not depend on insertion order.
"""
import datetime as dt
import io
import math
import re
import struct
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, NotIndexedError

_CJK = "㐀-䶿一-鿿豈-﫿"
_RUNS = re.compile(rf"(?P<cjk>[{_CJK}]+)|(?P<word>[^\W_{_CJK}]+)")

MAGIC = b"BM25"
VERSION = 1


def tokenize(text):
    """CJK runs give overlapping bigrams then single characters; other
    alphanumeric runs give lowercased words. Output follows text order."""
    out = []
    for m in _RUNS.finditer(text):
        run = m.group("cjk")
        if run:
            out.extend(run[i:i + 2] for i in range(len(run) - 1))
            out.extend(run)
        else:
            out.append(m.group("word").lower())
    return out


def claims_text(record):
    return "\n".join(record.claims)


@dataclass(frozen=True)
class Retrieval:
    target_id: str
    refs: tuple  # of (doc id, score)
    low_reference: bool

    def to_dict(self):
        return {"target_id": self.target_id,
                "refs": [{"id": i, "score": s} for i, s in self.refs],
                "low_reference": self.low_reference}


class Bm25Index:
    def __init__(self, docs, k1=1.5, b=0.75, granted_only=True):
        """``docs`` is an iterable of ``(doc_id, tokens, filing_date)``."""
        docs = sorted(docs, key=lambda d: d[0])
        self.k1, self.b, self.granted_only = float(k1), float(b), granted_only
        self.ids = [d[0] for d in docs]
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate document id")
        self._pos = {d: i for i, d in enumerate(self.ids)}
        self.dates = np.array([_ordinal(d[2]) for d in docs], dtype=np.int64)
        self.doc_len = np.array([len(d[1]) for d in docs], dtype=np.int64)
        postings = {}
        for i, (_, tokens, _) in enumerate(docs):
            for term, tf in Counter(tokens).items():
                postings.setdefault(term, ([], []))
                postings[term][0].append(i)
                postings[term][1].append(tf)
        self.postings = {t: (np.array(ix, dtype=np.int64), np.array(tf, dtype=np.int64))
                         for t, (ix, tf) in postings.items()}
        self._finish()

    def _finish(self):
        self.N = len(self.ids)
        self.avg_len = float(self.doc_len.sum()) / self.N if self.N else 0.0
        self._idf = {t: self.idf(len(ix)) for t, (ix, _) in self.postings.items()}

    @classmethod
    def from_corpus(cls, corpus, k1=1.5, b=0.75):
        return cls(((r.id, tokenize(claims_text(r)), r.filing_date)
                    for r in corpus if r.status == "granted"), k1=k1, b=b)

    def idf(self, df):
        return math.log((self.N - df + 0.5) / (df + 0.5) + 1.0)

    def _norm(self, dl):
        return self.k1 * (1.0 - self.b + self.b * dl / self.avg_len)

    def score(self, query_tokens, doc_id):
        if doc_id not in self._pos:
            raise NotIndexedError(doc_id)
        i = self._pos[doc_id]
        total = 0.0
        for term in dict.fromkeys(query_tokens):
            hit = self.postings.get(term)
            if hit is None:
                continue
            j = np.searchsorted(hit[0], i)
            if j < len(hit[0]) and hit[0][j] == i:
                tf = int(hit[1][j])
                total += self._idf[term] * (tf * (self.k1 + 1.0)) / (tf + self._norm(int(self.doc_len[i])))
        return total

    def scores(self, query_tokens):
        """Scores of every indexed document, in index (ascending id) order."""
        out = np.zeros(self.N)
        for term in dict.fromkeys(query_tokens):
            hit = self.postings.get(term)
            if hit is None:
                continue
            ix, tf = hit
            out[ix] += self._idf[term] * (tf * (self.k1 + 1.0)) / (tf + self._norm(self.doc_len[ix]))
        return out

    def top_k(self, query_tokens, k, before=None):
        """Best ``k`` documents filed strictly before ``before`` (if given)."""
        if self.N == 0 or k <= 0:
            return []
        s = self.scores(query_tokens)
        cand = np.arange(self.N)
        if before is not None:
            cand = cand[self.dates < _ordinal(before)]
        order = cand[np.lexsort((cand, -s[cand]))][:k]
        return [(self.ids[i], float(s[i])) for i in order]

    def top_k_base_reference(self, target, k):
        refs = self.top_k(tokenize(claims_text(target)), k, before=target.filing_date)
        return Retrieval(target.id, tuple(refs), len(refs) < k)

    # ------------------------------------------------------------ persistence

    def to_bytes(self):
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<BddB I", VERSION, self.k1, self.b, int(self.granted_only), self.N))
        for doc_id, date, dl in zip(self.ids, self.dates, self.doc_len):
            raw = doc_id.encode("utf-8")
            buf.write(struct.pack("<I", len(raw)) + raw + struct.pack("<iI", int(date), int(dl)))
        buf.write(struct.pack("<I", len(self.postings)))
        for term in sorted(self.postings):
            ix, tf = self.postings[term]
            raw = term.encode("utf-8")
            buf.write(struct.pack("<I", len(raw)) + raw + struct.pack("<I", len(ix)))
            buf.write(np.stack([ix, tf], axis=1).astype("<u4").tobytes())
        return buf.getvalue()

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, data):
        if data[:4] != MAGIC:
            raise FormatError("not a BM25 index file")
        if data[4] != VERSION:
            raise FormatError(f"unsupported BM25 index version {data[4]}")
        r = _Reader(data, 4)
        _, k1, b, granted_only, n = r.unpack("<BddB I")
        ids, dates, lens = [], [], []
        for _ in range(n):
            ids.append(r.string())
            d, dl = r.unpack("<iI")
            dates.append(d)
            lens.append(dl)
        postings = {}
        for _ in range(r.unpack("<I")[0]):
            term = r.string()
            (count,) = r.unpack("<I")
            arr = np.frombuffer(r.take(8 * count), dtype="<u4").reshape(count, 2).astype(np.int64)
            postings[term] = (arr[:, 0].copy(), arr[:, 1].copy())
        if r.pos != len(data):
            raise FormatError("trailing bytes in BM25 index file")
        idx = cls.__new__(cls)
        idx.k1, idx.b, idx.granted_only = k1, b, bool(granted_only)
        idx.ids = ids
        idx._pos = {d: i for i, d in enumerate(ids)}
        idx.dates = np.array(dates, dtype=np.int64)
        idx.doc_len = np.array(lens, dtype=np.int64)
        idx.postings = postings
        idx._finish()
        return idx

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


class _Reader:
    def __init__(self, data, pos):
        self.data, self.pos = data, pos

    def take(self, n):
        if self.pos + n > len(self.data):
            raise FormatError("truncated file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self):
        (n,) = self.unpack("<I")
        return self.take(n).decode("utf-8")


def _ordinal(date):
    if isinstance(date, (int, np.integer)):
        return int(date)
    if isinstance(date, str):
        date = dt.date.fromisoformat(date)
    return date.toordinal()
