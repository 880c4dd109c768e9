"""Claim segmentation, reference extraction and hierarchy graphs.

A patent's claims form a DAG: claim ``j`` has an edge from every claim ``i``
its preamble cites. Independent claims sit at level 0 and every dependent
claim at one more than its deepest parent.

Reference recognition is driven by a JSON pattern table (see
``data/reference_patterns.json``) so that further drafting conventions can be
added without touching code.
"""
import json
import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import EmptyPatentError, ForwardReferenceError, ParseError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Claim:
    index: int
    text: str
    referenced: tuple = ()


@dataclass(frozen=True)
class ClaimGraph:
    n: int
    edges: frozenset
    hierarchy: tuple
    warnings: tuple = field(default=(), compare=False)

    def parents(self, j):
        return sorted(i for i, k in self.edges if k == j)

    def roots(self):
        return [i + 1 for i, lv in enumerate(self.hierarchy) if lv == 0]

    def to_dict(self):
        return {"n": self.n, "edges": sorted(map(list, self.edges)),
                "hierarchy": list(self.hierarchy)}


class PatternTable:
    """Compiled reference-extraction rules."""

    def __init__(self, spec):
        self.spec = spec
        self.serial = re.compile(spec["serial_marker"], re.M)
        self.terminators = [t.lower() for t in spec.get("preamble_terminators", [])]
        self.references = [self._compile(p) for p in spec["reference_patterns"]]
        self.preceding = [self._compile(p) for p in spec.get("preceding_patterns", [])]
        self.range_seps = set(spec.get("range_separators", []))
        self.list_seps = set(spec.get("list_separators", []))

    @staticmethod
    def _compile(p):
        return re.compile(p["regex"], re.I if p.get("ignore_case") else 0)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def preamble(self, text):
        low = text.lower()
        cut = [low.find(t) for t in self.terminators]
        cut = [c for c in cut if c >= 0]
        return text[:min(cut)] if cut else text

    def expand(self, numlist):
        """Turn ``"1, 3 to 5"`` into ``[1, 3, 4, 5]``."""
        parts = re.findall(r"\d+|[^\d\s]+", numlist)
        out, pending_range, prev = [], False, None
        for tok in parts:
            if tok.isdigit():
                num = int(tok)
                if pending_range and prev is not None:
                    lo, hi = sorted((prev, num))
                    out.extend(range(lo, hi + 1))
                else:
                    out.append(num)
                prev, pending_range = num, False
            elif tok.lower() in self.range_seps:
                pending_range = True
            # list separators and stray "claim" words just continue the list
        return out


@lru_cache(maxsize=None)
def default_patterns():
    text = resources.files("dispat").joinpath("data/reference_patterns.json").read_text("utf-8")
    return PatternTable(json.loads(text))


def split_claims(raw, patterns=None):
    """Segment a claims block into claim texts by their leading serials."""
    table = patterns or default_patterns()
    marks = list(table.serial.finditer(raw))
    if not marks:
        raise ParseError("no claim serial markers found", position=0)
    lead = raw[:marks[0].start()]
    if lead.strip():
        raise ParseError("text before the first claim serial", position=0)
    texts = []
    for expected, (m, nxt) in enumerate(zip(marks, marks[1:] + [None]), start=1):
        serial = int(m.group(1))
        if serial != expected:
            kind = "duplicate" if serial < expected else "missing"
            raise ParseError(f"{kind} serial: expected {expected}, found {serial}",
                             position=m.start())
        body = raw[m.end():nxt.start() if nxt else len(raw)].strip()
        if not body:
            raise ParseError(f"claim {serial} is empty", position=m.start())
        texts.append(body)
    return texts


def extract_references(text, index, strict=True, patterns=None, warnings=None):
    """Return the sorted, de-duplicated claim numbers cited by claim ``index``.

    Out-of-range citations (``>= index`` or ``< 1``) raise
    :class:`ForwardReferenceError` in strict mode; in lenient mode they are
    dropped and a message is appended to ``warnings`` if given.
    """
    table = patterns or default_patterns()
    pre = table.preamble(text)
    found = set()
    for rx in table.references:
        for m in rx.finditer(pre):
            found.update(table.expand(m.group(1)))
    if any(rx.search(pre) for rx in table.preceding):
        found.update(range(1, index))
    bad = sorted(r for r in found if r >= index or r < 1)
    if bad:
        msg = f"claim {index} cites invalid claim(s) {bad}"
        if strict:
            raise ForwardReferenceError(msg)
        logger.warning("%s; dropping", msg)
        if warnings is not None:
            warnings.append(msg)
        found.difference_update(bad)
    return sorted(found)


def _levels(n, edges):
    parents = {j: [] for j in range(1, n + 1)}
    for i, j in edges:
        parents[j].append(i)
    level = {}
    for j in range(1, n + 1):
        ps = [level[i] for i in parents[j]]
        level[j] = 1 + max(ps) if ps else 0
    return tuple(level[j] for j in range(1, n + 1))


def build_graph(claims, warnings=()):
    """Build the hierarchy graph from parsed :class:`Claim` objects."""
    if not claims:
        raise EmptyPatentError("patent has no claims")
    edges = set()
    for c in claims:
        for i in c.referenced:
            if not i < c.index:
                raise ForwardReferenceError(f"claim {c.index} cites claim {i}")
            edges.add((i, c.index))
    n = len(claims)
    return ClaimGraph(n=n, edges=frozenset(edges), hierarchy=_levels(n, edges),
                      warnings=tuple(warnings))


_SERIAL_PREFIX = re.compile(r"^\s*(\d+)\s*[.．、)]\s*")


def parse_claims(claims, strict=True, n_max=None, patterns=None):
    """Parse a list of claim strings into ``(claims, graph)``.

    Strings may carry their own serial prefix (``"2. The cup ..."``), which
    must then match their position. With ``n_max`` set, claims past the cap
    are dropped and any citation of a dropped claim is removed.
    """
    if not claims:
        raise EmptyPatentError("patent has no claims")
    notes = []
    if n_max is not None and len(claims) > n_max:
        notes.append(f"truncated {len(claims)} claims to {n_max}")
        logger.warning(notes[-1])
        claims = claims[:n_max]
    parsed = []
    for pos, raw in enumerate(claims, start=1):
        text = raw
        m = _SERIAL_PREFIX.match(raw)
        if m:
            if int(m.group(1)) != pos:
                raise ParseError(f"claim at position {pos} is numbered {m.group(1)}")
            text = raw[m.end():]
        text = text.strip()
        if not text:
            raise ParseError(f"claim {pos} is empty")
        refs = extract_references(text, pos, strict=strict, patterns=patterns, warnings=notes)
        parsed.append(Claim(pos, text, tuple(refs)))
    return parsed, build_graph(parsed, notes)


def parse_claims_block(raw, strict=True, n_max=None, patterns=None):
    return parse_claims(split_claims(raw, patterns), strict, n_max, patterns)


def format_claims(claims):
    """Render claims back to numbered strings, the corpus storage form."""
    return [f"{c.index}. {c.text}" for c in claims]
