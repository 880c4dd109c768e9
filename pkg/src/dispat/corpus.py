"""Patent records, JSONL ingestion, seeded splits and dataset statistics.

Corpus lines are UTF-8 JSON objects with exactly these fields::

    {"id": "CN123", "filing_date": "2012-03-01", "ipc": "A47",
     "claims": ["1. A cup ...", "2. The cup of claim 1 ..."],
     "label": 1, "status": "granted"}

``label`` is present only on target (train/val/test) records; prior-art
records carry ``"label": null`` or omit it.
"""
import bisect
import datetime as dt
import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .claims import parse_claims
from .errors import DuplicateIdError, ParseError, ValidationError

STATUSES = ("granted", "rejected", "pending")
FIELDS = ("id", "filing_date", "ipc", "claims", "label", "status")


@dataclass(frozen=True)
class PatentRecord:
    id: str
    filing_date: dt.date
    ipc: str
    claims: tuple
    label: int = None
    status: str = "pending"

    @property
    def is_target(self):
        return self.label is not None

    def to_json(self):
        return {"id": self.id, "filing_date": self.filing_date.isoformat(),
                "ipc": self.ipc, "claims": list(self.claims),
                "label": self.label, "status": self.status}

    @classmethod
    def from_json(cls, obj, line=None):
        if not isinstance(obj, dict):
            raise ValidationError("record must be a JSON object", line)
        unknown = set(obj) - set(FIELDS)
        if unknown:
            raise ValidationError(f"unknown fields {sorted(unknown)}", line)
        for key in ("id", "filing_date", "claims", "status"):
            if key not in obj:
                raise ValidationError(f"missing field {key!r}", line)
        if not isinstance(obj["id"], str) or not obj["id"]:
            raise ValidationError("id must be a non-empty string", line)
        try:
            date = dt.date.fromisoformat(obj["filing_date"])
        except (TypeError, ValueError):
            raise ValidationError(f"invalid filing_date {obj['filing_date']!r}", line) from None
        claims = obj["claims"]
        if not isinstance(claims, list) or not claims or not all(
                isinstance(c, str) and c.strip() for c in claims):
            raise ValidationError("claims must be a non-empty list of strings", line)
        status = obj["status"]
        if status not in STATUSES:
            raise ValidationError(f"status must be one of {STATUSES}", line)
        label = obj.get("label")
        if label is not None:
            if label not in (0, 1) or isinstance(label, bool):
                raise ValidationError("label must be 0, 1 or null", line)
            expected = "granted" if label == 1 else "rejected"
            if status != expected:
                raise ValidationError(f"label {label} requires status {expected!r}", line)
        return cls(obj["id"], date, str(obj.get("ipc", "")), tuple(claims), label, status)


class Corpus:
    """Immutable, date-ordered collection of :class:`PatentRecord`."""

    def __init__(self, records):
        records = sorted(records, key=lambda r: (r.filing_date, r.id))
        self._by_id = {}
        for r in records:
            if r.id in self._by_id:
                raise DuplicateIdError(f"duplicate id {r.id!r}")
            self._by_id[r.id] = r
        self.records = tuple(records)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __contains__(self, rid):
        return rid in self._by_id

    def __getitem__(self, rid):
        return self._by_id[rid]

    def targets(self):
        return [r for r in self.records if r.is_target]

    def granted(self):
        return [r for r in self.records if r.status == "granted"]

    def write_jsonl(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def ingest(path, date_floor=None, strict_claims=True):
    """Read and validate a JSONL corpus.

    Claims are parsed as they are read; in strict mode a malformed citation
    fails ingestion with the offending line number. With ``date_floor`` set,
    target records filed before it are demoted to unlabeled context records,
    so they still serve as prior art if granted.
    """
    records, seen = [], {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"invalid JSON: {exc.msg}", lineno) from None
            rec = PatentRecord.from_json(obj, lineno)
            try:
                parse_claims(list(rec.claims), strict=strict_claims)
            except ParseError as exc:
                raise ValidationError(f"{rec.id}: {exc}", lineno) from None
            if rec.id in seen:
                raise DuplicateIdError(f"duplicate id {rec.id!r} (first on line {seen[rec.id]})",
                                       lineno)
            seen[rec.id] = lineno
            if date_floor is not None and rec.is_target and rec.filing_date < date_floor:
                rec = PatentRecord(rec.id, rec.filing_date, rec.ipc, rec.claims, None, rec.status)
            records.append(rec)
    return Corpus(records)


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple = (0.6, 0.2, 0.2)
    seed: int = 0
    stratify: bool = True

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ValueError("ratios must be three positive numbers")
        if not math.isclose(sum(self.ratios), 1.0, abs_tol=1e-9):
            raise ValueError("ratios must sum to 1")


@dataclass(frozen=True)
class Split:
    train: tuple
    val: tuple
    test: tuple

    def sizes(self):
        return len(self.train), len(self.val), len(self.test)

    def to_dict(self):
        return {"train": list(self.train), "val": list(self.val), "test": list(self.test)}


def split_sizes(n, ratios):
    """Floor the train and val shares; test takes the remainder."""
    n_train = math.floor(ratios[0] * n + 1e-9)
    n_val = math.floor(ratios[1] * n + 1e-9)
    return n_train, n_val, n - n_train - n_val


def balanced_sizes(n, ratios):
    """Largest-remainder rounding: every part within 1 of its exact share."""
    exact = [r * n for r in ratios]
    sizes = [math.floor(e + 1e-9) for e in exact]
    order = sorted(range(3), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:n - sum(sizes)]:
        sizes[i] += 1
    return tuple(sizes)


def stratified_sizes(class_counts, ratios):
    """Per-class ``split_sizes`` summed over classes."""
    per = [split_sizes(n, ratios) for n in class_counts]
    return tuple(sum(p[i] for p in per) for i in range(3))


def _cut(ids, rng, ratios, sizes=split_sizes):
    order = rng.permutation(len(ids))
    shuffled = [ids[i] for i in order]
    a, b, _ = sizes(len(ids), ratios)
    return shuffled[:a], shuffled[a:a + b], shuffled[a + b:]


def split(corpus, spec=SplitSpec()):
    """Shuffle target ids under ``spec.seed`` and cut them train/val/test.

    With ``spec.stratify`` (the default) each label class is shuffled and cut
    on its own by :func:`split_sizes`, so all three parts keep the corpus
    approval rate. Otherwise (and always for a plain id list) one shuffle is
    cut by :func:`balanced_sizes`.
    """
    if isinstance(corpus, Corpus):
        targets = corpus.targets()
        groups = ([sorted(r.id for r in targets if r.label == c) for c in (0, 1)]
                  if spec.stratify else [sorted(r.id for r in targets)])
    else:
        groups = [sorted(corpus)]
    if not any(groups):
        raise ValueError("no target records to split")
    rng = np.random.default_rng(spec.seed)
    parts = ([], [], [])
    for ids in groups:
        sizes = split_sizes if len(groups) > 1 else balanced_sizes
        for bucket, chunk in zip(parts, _cut(ids, rng, spec.ratios, sizes)):
            bucket.extend(chunk)
    return Split(*(tuple(sorted(p)) for p in parts))


def approval_rate(labels):
    labels = list(labels)
    return sum(labels) / len(labels) if labels else None


def _hist(values, edges):
    counts = Counter()
    for v in values:
        i = bisect.bisect_right(edges, v) - 1
        lo = edges[max(i, 0)]
        hi = edges[i + 1] if i + 1 < len(edges) else None
        counts[f"{lo}-{hi - 1}" if hi else f"{lo}+"] += 1
    return dict(counts)


def stats(corpus, splits=None):
    """Counts, approval rates and claim histograms, JSON-serialisable."""
    from .retrieval import tokenize

    recs = list(corpus)
    targets = [r for r in recs if r.is_target]
    out = {
        "records": len(recs),
        "targets": len(targets),
        "status": dict(Counter(r.status for r in recs)),
        "approval_rate": approval_rate(r.label for r in targets),
        "claim_count_hist": _hist([len(r.claims) for r in recs], [1, 5, 10, 15, 20, 30, 50]),
        "claim_length_hist": _hist([len(tokenize(c)) for r in recs for c in r.claims],
                                   [0, 32, 64, 128, 256, 512]),
    }
    if splits is not None:
        out["splits"] = {
            name: {"size": len(ids),
                   "approved": sum(corpus[i].label for i in ids),
                   "approval_rate": approval_rate(corpus[i].label for i in ids)}
            for name, ids in splits.to_dict().items()
        }
    return out


def low_reference_targets(corpus, k):
    """Ids of targets with fewer than ``k`` granted records filed strictly earlier."""
    dates = sorted(r.filing_date for r in corpus.granted())
    return [r.id for r in corpus.targets() if bisect.bisect_left(dates, r.filing_date) < k]
