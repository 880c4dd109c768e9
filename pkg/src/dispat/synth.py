"""Seeded synthetic patent corpus with a planted approval rule.

Prior patents are granted applications drawn from topic vocabularies. Each
target copies one prior ("nearest prior"), keeps its claim structure, and
replaces a contiguous window of ``ceil(rho * T)`` of its ``T`` body tokens
(starting at a random position, wrapping past the last claim) with words
from a separate novelty vocabulary. Priors are assigned by cycling through
seeded permutations, so a prior is reused only after every prior has been
used once. The target is approved exactly when the realised ``rho`` reaches
``theta``. All priors are filed before all targets.
"""
import datetime as dt
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .corpus import Corpus, PatentRecord
from .errors import ConfigError

_CONSONANTS = "bdfgklmnprstv"
_VOWELS = "aeiou"


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 1
    num_prior: int = 1500
    num_targets: int = 2000
    num_topics: int = 50
    topic_vocab: int = 400
    novel_vocab: int = 16
    claims_range: tuple = (3, 8)
    body_range: tuple = (20, 40)
    theta: float = 0.35
    margin: float = 0.1
    rho_max: float = 0.8
    approval_rate: float = 0.5
    multi_ref_prob: float = 0.2
    independent_prob: float = 0.1
    start_date: str = "2005-01-01"
    ipc: str = "A47"

    def validate(self):
        if not 0.0 <= self.approval_rate <= 1.0:
            raise ConfigError("approval_rate must lie in [0, 1]")
        if self.approval_rate > 0 and self.theta + self.margin > self.rho_max:
            raise ConfigError("no rho >= theta + margin fits under rho_max; cannot plant approvals")
        if self.approval_rate < 1 and self.theta - self.margin < 0:
            raise ConfigError("theta - margin < 0; cannot plant rejections")
        if self.num_prior < 1 or self.num_topics < 1 or self.novel_vocab < 1:
            raise ConfigError("num_prior, num_topics and novel_vocab must be positive")
        if self.claims_range[0] < 1 or self.body_range[0] < 1:
            raise ConfigError("claims and bodies need at least one element")


def word(i, first=_CONSONANTS):
    """Deterministic pronounceable word for index ``i`` (three syllables or more)."""
    syl = []
    base = len(_CONSONANTS) * len(_VOWELS)
    while True:
        syl.append(i % base)
        i //= base
        if i == 0 and len(syl) >= 3:
            break
    out = []
    for pos, s in enumerate(syl):
        cons = first if pos == 0 else _CONSONANTS
        out.append(cons[(s // len(_VOWELS)) % len(cons)] + _VOWELS[s % len(_VOWELS)])
    return "".join(out)


def novel_word(i):
    # a "z" onset never occurs in topic words, so the vocabularies are disjoint
    return "z" + word(i)


def label_for(rho, theta):
    return int(rho >= theta)


def _structure(rng, n, cfg):
    """Citation lists for claims 1..n."""
    refs = [()]
    for j in range(2, n + 1):
        u = rng.random()
        if u < cfg.independent_prob:
            refs.append(())
        elif u < cfg.independent_prob + cfg.multi_ref_prob and j > 2:
            a, b = sorted(rng.choice(j - 1, size=2, replace=False) + 1)
            refs.append((int(a), int(b)))
        else:
            refs.append((int(rng.integers(1, j)),))
    return refs


def _claim_text(noun, refs, body):
    tail = " ".join(body)
    if not refs:
        return f"A {noun} comprising {tail}."
    if len(refs) == 1:
        return f"The {noun} of claim {refs[0]}, wherein {tail}."
    return f"The {noun} of claims {refs[0]} and {refs[1]}, wherein {tail}."


def _render(noun, refs, bodies):
    return [f"{j}. {_claim_text(noun, r, b)}" for j, (r, b) in enumerate(zip(refs, bodies), 1)]


def generate(config=SynthConfig()):
    """Return ``(corpus, manifest)``; a pure function of ``config``."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    start = dt.date.fromisoformat(config.start_date)
    topics = [[word(t * config.topic_vocab + i) for i in range(config.topic_vocab)]
              for t in range(config.num_topics)]
    novel = [novel_word(i) for i in range(config.novel_vocab)]

    priors, records = [], []
    for p in range(config.num_prior):
        topic = int(rng.integers(config.num_topics))
        n = int(rng.integers(config.claims_range[0], config.claims_range[1] + 1))
        refs = _structure(rng, n, config)
        vocab = topics[topic]
        bodies = [[vocab[i] for i in rng.integers(1, len(vocab), size=int(
            rng.integers(config.body_range[0], config.body_range[1] + 1)))] for _ in range(n)]
        pid = f"P{p + 1:05d}"
        priors.append((pid, vocab[0], refs, bodies))
        records.append(PatentRecord(pid, start + dt.timedelta(days=p), config.ipc,
                                    tuple(_render(vocab[0], refs, bodies)), None, "granted"))

    entries = []
    order = []
    t0 = start + dt.timedelta(days=config.num_prior)
    for t in range(config.num_targets):
        approved = rng.random() < config.approval_rate
        if approved:
            rho = rng.uniform(config.theta + config.margin, config.rho_max)
        else:
            rho = rng.uniform(0.0, config.theta - config.margin)
        if not order:
            order = rng.permutation(len(priors)).tolist()
        pid, noun, refs, bodies = priors[order.pop()]
        total = sum(len(b) for b in bodies)
        n_new = math.ceil(rho * total - 1e-12)
        flat = [tok for b in bodies for tok in b]
        first = int(rng.integers(total))
        swapped = rng.integers(len(novel), size=n_new)
        for off, v in enumerate(swapped):
            flat[(first + off) % total] = novel[v]
        new_bodies, pos = [], 0
        for b in bodies:
            new_bodies.append(flat[pos:pos + len(b)])
            pos += len(b)
        realised = n_new / total
        label = label_for(realised, config.theta)
        tid = f"T{t + 1:05d}"
        records.append(PatentRecord(tid, t0 + dt.timedelta(days=t), config.ipc,
                                    tuple(_render(noun, refs, new_bodies)), label,
                                    "granted" if label else "rejected"))
        entries.append({"id": tid, "rho": realised, "nearest_prior": pid, "label": label})

    approved = sum(e["label"] for e in entries)
    manifest = {
        "config": asdict(config),
        "counts": {"records": len(records), "prior": config.num_prior,
                   "targets": config.num_targets, "approved": approved,
                   "rejected": config.num_targets - approved},
        "approval_rate": approved / config.num_targets if config.num_targets else None,
        "targets": entries,
    }
    return Corpus(records), manifest


def write(config, corpus_path, manifest_path):
    corpus, manifest = generate(config)
    corpus.write_jsonl(corpus_path)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return corpus, manifest
