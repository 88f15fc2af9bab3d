import json
import random
from collections import Counter
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from srnld.errors import DuplicateRecord, InsufficientRecords, MissingSr
from srnld.gensr import (
    Group,
    Lcg64,
    MixPlan,
    build_mixture,
    dumps_jsonl,
    ratio_sweep,
    shuffle,
    split_counts,
)
from srnld.promptkit import Task, TaskRecord, read_records

FIXTURE = resources.files("srnld").joinpath("data", "samples", "gensr_fixture.jsonl")


def fixture_records():
    return read_records(FIXTURE.read_text(encoding="utf-8").splitlines())


def four_records():
    return [
        TaskRecord(f"r{i}", "SST2", f"Text {i}.", "positive", sr_text=f"p{i}(x)", sr_kind="FOL")
        for i in range(4)
    ]


# split_counts


@pytest.mark.parametrize("total, ratio, expected", [(10000, 0.5, (5000, 5000)), (0, 0.7, (0, 0)), (7, 0.5, (4, 3))])
def test_split_counts_examples(total, ratio, expected):
    assert split_counts(total, ratio) == expected


@settings(max_examples=500)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=0, max_value=1000))
def test_split_counts_matches_decimal_rounding(total, per_mille):
    ratio = per_mille / 1000
    expected = int((Decimal(per_mille) / 1000 * total).quantize(Decimal(1), rounding=ROUND_HALF_UP))
    n_sr, n_text = split_counts(total, ratio)
    assert n_sr == expected and n_sr + n_text == total and n_text >= 0


def test_split_counts_rejects():
    with pytest.raises(ValueError):
        split_counts(-1, 0.5)
    with pytest.raises(ValueError):
        split_counts(5, 1.5)


# RNG


def test_lcg_step():
    rng = Lcg64(0)
    assert rng.next_u64() == 1442695040888963407
    assert rng.next_u64() == (6364136223846793005 * 1442695040888963407 + 1442695040888963407) % 2**64
    with pytest.raises(ValueError):
        Lcg64(-1)


@settings(max_examples=200)
@given(st.integers(min_value=0, max_value=2**64 - 1), st.integers(min_value=0, max_value=60))
def test_shuffle_is_a_permutation(seed, n):
    items = list(range(n))
    out = shuffle(items[:], Lcg64(seed))
    assert sorted(out) == items
    assert out == shuffle(items[:], Lcg64(seed))


def test_below_is_roughly_uniform():
    rng = Lcg64(42)
    counts = Counter(rng.below(6) for _ in range(60000))
    assert set(counts) == set(range(6))
    assert all(abs(c - 10000) < 400 for c in counts.values())


# build_mixture


def test_four_record_split():
    out = build_mixture(four_records(), MixPlan(0.5, 42))
    assert Counter(r.group for r in out) == {Group.G_SR: 2, Group.G_TEXT: 2}
    for r in out:
        assert r.completion == "Answer: positive"
        if r.group is Group.G_SR:
            assert r.sr_kind == "FOL" and "FOL:\n" in r.prompt
        else:
            assert r.sr_kind is None and "FOL" not in r.prompt


def test_fixture_determinism_and_order_independence():
    recs = fixture_records()
    a = dumps_jsonl(build_mixture(recs, MixPlan(0.5, 42)))
    b = dumps_jsonl(build_mixture(recs, MixPlan(0.5, 42)))
    shuffled = recs[:]
    random.Random(3).shuffle(shuffled)
    c = dumps_jsonl(build_mixture(shuffled, MixPlan(0.5, 42)))
    assert a == b == c


def test_different_seeds_same_counts_different_assignment():
    recs = fixture_records()
    a = build_mixture(recs, MixPlan(0.5, 42))
    b = build_mixture(recs, MixPlan(0.5, 7))
    key = lambda rows: Counter((r.task, r.group) for r in rows)  # noqa: E731
    assert key(a) == key(b)
    assert {r.id for r in a if r.group is Group.G_SR} != {r.id for r in b if r.group is Group.G_SR}


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from([0.0, 0.1, 0.3, 0.35, 0.5, 0.7, 1.0]),
    st.integers(min_value=0, max_value=2**32),
    st.dictionaries(st.sampled_from(["SST2", "PAWS", "SPIDER", "AGNEWS"]), st.integers(0, 25)),
)
def test_count_exactness(ratio, seed, counts):
    recs = fixture_records()
    by_id = {r.id: r for r in recs}
    out = build_mixture(recs, MixPlan(ratio, seed, counts))
    for task in ("SST2", "PAWS", "SPIDER", "AGNEWS"):
        t = Task.parse(task)
        rows = [r for r in out if r.task is t]
        total = counts.get(task, 25)
        n_sr, n_text = split_counts(total, ratio)
        assert len(rows) == total
        assert sum(r.group is Group.G_SR for r in rows) == n_sr
        assert sum(r.group is Group.G_TEXT for r in rows) == n_text
    for r in out:
        if r.group is Group.G_SR:
            assert by_id[r.id].sr_text in r.prompt


def test_output_schema():
    line = dumps_jsonl(build_mixture(four_records(), MixPlan(0.5, 1))).splitlines()[0]
    assert list(json.loads(line)) == ["id", "prompt", "completion", "group", "task", "sr_kind"]


def test_errors():
    recs = four_records()
    with pytest.raises(InsufficientRecords):
        build_mixture(recs, MixPlan(0.5, 42, {"SST2": 5}))
    with pytest.raises(InsufficientRecords):
        build_mixture(recs, MixPlan(0.5, 42, {"PAWS": 1}))
    with pytest.raises(MissingSr):
        build_mixture([TaskRecord("x", "SST2", "t", "positive")], MixPlan(1.0, 42))
    with pytest.raises(DuplicateRecord):
        build_mixture(recs + recs[:1], MixPlan(0.5, 42))
    with pytest.raises(ValueError):
        MixPlan(1.2, 42)
    # all-text plans never need SR
    assert build_mixture([TaskRecord("x", "SST2", "t", "positive")], MixPlan(0.0, 42))


def test_ratio_sweep_shares_sample():
    recs = fixture_records()
    sweep = ratio_sweep(recs, seed=42, per_task_counts={"SST2": 10, "PAWS": 10, "SPIDER": 10, "AGNEWS": 10})
    ids = {r: [x.id for x in rows] for r, rows in sweep.items()}
    assert len({tuple(v) for v in ids.values()}) == 1
    n_sr = [sum(x.group is Group.G_SR for x in sweep[r]) for r in sorted(sweep)]
    assert n_sr == sorted(n_sr) and n_sr[0] == 0 and n_sr[-1] == 40
