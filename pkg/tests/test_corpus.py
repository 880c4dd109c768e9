import datetime as dt
import json

import pytest

from dispat.corpus import (Corpus, PatentRecord, SplitSpec, approval_rate, ingest,
                           low_reference_targets, split, stats, stratified_sizes,
                           balanced_sizes)
from dispat.errors import DuplicateIdError, ValidationError
from dispat.synth import SynthConfig, write

DAY = dt.date(2010, 1, 1)


def rec(i, label=None, status=None, day=0, claims=("1. A cup.",)):
    status = status or {None: "granted", 1: "granted", 0: "rejected"}[label]
    return PatentRecord(f"R{i:06d}", DAY + dt.timedelta(days=day), "A47", tuple(claims), label,
                        status)


def write_lines(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")


def test_ingest_three_valid_lines(tmp_path):
    p = tmp_path / "c.jsonl"
    write_lines(p, [rec(i, label=i % 2).to_json() for i in range(3)])
    corpus = ingest(p)
    assert len(corpus) == 3
    assert [r.filing_date for r in corpus] == sorted(r.filing_date for r in corpus)


def test_duplicate_id_cites_line(tmp_path):
    p = tmp_path / "c.jsonl"
    write_lines(p, [rec(1).to_json(), rec(1).to_json()])
    with pytest.raises(DuplicateIdError) as info:
        ingest(p)
    assert info.value.line == 2


def test_invalid_date(tmp_path):
    p = tmp_path / "c.jsonl"
    bad = rec(1).to_json()
    bad["filing_date"] = "2010-13-45"
    write_lines(p, [rec(0).to_json(), bad])
    with pytest.raises(ValidationError) as info:
        ingest(p)
    assert info.value.line == 2


@pytest.mark.parametrize("mutate", [
    lambda o: o.update(claims=[]),
    lambda o: o.update(status="lost"),
    lambda o: o.update(label=1, status="rejected"),
    lambda o: o.update(extra=1),
    lambda o: o.pop("id"),
])
def test_record_validation(tmp_path, mutate):
    obj = rec(1).to_json()
    mutate(obj)
    with pytest.raises(ValidationError):
        PatentRecord.from_json(obj)


def test_strict_claim_parsing_on_ingest(tmp_path):
    p = tmp_path / "c.jsonl"
    write_lines(p, [rec(1, claims=("1. A cup.", "2. The cup of claim 2, red.")).to_json()])
    with pytest.raises(ValidationError):
        ingest(p)
    assert len(ingest(p, strict_claims=False)) == 1


def test_date_floor_demotes_early_targets(tmp_path):
    p = tmp_path / "c.jsonl"
    write_lines(p, [rec(0, label=1, day=0).to_json(), rec(1, label=0, day=400).to_json()])
    corpus = ingest(p, date_floor=DAY + dt.timedelta(days=100))
    assert [r.id for r in corpus.targets()] == ["R000001"]
    assert corpus["R000000"].status == "granted"


def test_synthetic_ingest_matches_manifest(tmp_path):
    cfg = SynthConfig(num_prior=400, num_targets=600)
    write(cfg, tmp_path / "c.jsonl", tmp_path / "m.json")
    manifest = json.loads((tmp_path / "m.json").read_text())
    corpus = ingest(tmp_path / "c.jsonl")
    assert len(corpus) == manifest["counts"]["records"] == 1000
    rate = stats(corpus)["approval_rate"]
    assert abs(rate - manifest["approval_rate"]) <= 0.01


def test_split_ten_records():
    corpus = Corpus([rec(i, label=1) for i in range(10)])
    assert split(corpus).sizes() == (6, 2, 2)


def test_split_deterministic_disjoint_exhaustive():
    corpus = Corpus([rec(i, label=i % 3 == 0) for i in range(101)] + [rec(500)])
    a, b = split(corpus, SplitSpec(seed=4)), split(corpus, SplitSpec(seed=4))
    assert a == b
    parts = [set(a.train), set(a.val), set(a.test)]
    assert not (parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2])
    assert set().union(*parts) == {r.id for r in corpus.targets()}
    assert split(corpus, SplitSpec(seed=5)) != a


@pytest.mark.parametrize("n", [7, 10, 33, 1000, 78162])
def test_unstratified_sizes_within_one(n):
    got = balanced_sizes(n, (0.6, 0.2, 0.2))
    assert sum(got) == n
    assert all(abs(g - r * n) <= 1 for g, r in zip(got, (0.6, 0.2, 0.2)))


def test_stratified_parts_keep_the_rate():
    corpus = Corpus([rec(i, label=int(i % 5 < 3)) for i in range(1000)])
    s = split(corpus)
    for part in (s.train, s.val, s.test):
        assert approval_rate(corpus[i].label for i in part) == pytest.approx(0.6, abs=0.005)
    plain = split(corpus, SplitSpec(stratify=False))
    assert plain.sizes() == balanced_sizes(1000, (0.6, 0.2, 0.2))


def test_a47_table_sizes_and_rates():
    # 78,162 targets of which 44,916 approved reproduce the published row
    n, pos = 78162, 44916
    assert stratified_sizes((n - pos, pos), (0.6, 0.2, 0.2)) == (46896, 15632, 15634)
    corpus = Corpus([rec(i, label=int(i < pos)) for i in range(n)])
    s = split(corpus)
    assert s.sizes() == (46896, 15632, 15634)
    approved = [sum(corpus[i].label for i in part) for part in (s.train, s.val, s.test)]
    assert approved[0] == 26949
    rates = [round(100 * a / len(p), 2) for a, p in zip(approved, (s.train, s.val, s.test))]
    assert rates == [57.47, 57.47, 57.46]
    assert stats(corpus, s)["splits"]["train"]["approval_rate"] == pytest.approx(0.5747, abs=5e-5)


def test_stratified_sizes_within_two():
    for pos in range(0, 200, 7):
        got = stratified_sizes((200 - pos, pos), (0.6, 0.2, 0.2))
        assert all(abs(g - r * 200) <= 2 for g, r in zip(got, (0.6, 0.2, 0.2)))


def test_stats_all_approved():
    corpus = Corpus([rec(i, label=1) for i in range(4)])
    assert stats(corpus)["approval_rate"] == 1.0


def test_low_reference_flag():
    corpus = Corpus([rec(0, day=0), rec(1, day=1), rec(2, label=1, day=2), rec(3, label=0, day=0)])
    assert low_reference_targets(corpus, 2) == ["R000003"]
