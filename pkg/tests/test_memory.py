from __future__ import annotations

import math
import random

import pytest

from tippy.memory import EMBED_DIM, MemoryStore, cosine, embed


def test_embed_deterministic():
    a = embed("hplc retention time 4.2 minutes")
    b = embed("hplc retention time 4.2 minutes")
    assert a == b
    assert len(a) == EMBED_DIM == 256


def test_embed_empty_is_zero_vector():
    assert embed("") == [0.0] * 256
    assert embed("!!! ???") == [0.0] * 256


def test_embed_unit_norm():
    for text in ("one", "two words", "HPLC column temperature 40C", "a b c d e f g"):
        norm = math.sqrt(sum(v * v for v in embed(text)))
        assert abs(norm - 1.0) < 1e-6


def test_bag_of_words_order_invariance():
    a = embed("hplc retention time")
    b = embed("retention time hplc")
    assert abs(cosine(a, b) - 1.0) < 1e-9


def test_self_search_scores_one(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    store.add("HPLC column temperature 40C", {})
    hits = store.search("HPLC column temperature 40C", k=1)
    assert hits[0]["score"] == pytest.approx(1.0, abs=1e-6)


def test_search_empty_store_and_zero_query(tmp_path):
    store = MemoryStore(tmp_path / "m.jsonl")
    assert store.search("anything", k=3) == []
    store.add("some text", {})
    assert store.search("???", k=3) == []  # zero-vector query


def test_top1_equals_brute_force_argmax(tmp_path):
    rng = random.Random(17)
    vocabulary = ("hplc retention sample column solvent gradient peak area "
                  "synthesis yield purity plate prep actor lab job workflow "
                  "molecule smiles weight assay buffer ph temperature pressure").split()
    store = MemoryStore(tmp_path / "m.jsonl")
    texts = []
    for _ in range(100):
        text = " ".join(rng.choice(vocabulary) for _ in range(rng.randint(3, 10)))
        texts.append(text)
        store.add(text, {})
    for _ in range(50):
        query = " ".join(rng.choice(vocabulary) for _ in range(rng.randint(2, 6)))
        hits = store.search(query, k=1)
        q = embed(query)
        best = max(
            ((cosine(q, r["embedding"]), r["id"]) for r in store.records),
            key=lambda t: (t[0], [-ord(c) for c in t[1]]),
        )
        # ties break by id ascending, so compare score and allow id tie-break
        scored = sorted(
            ((round(cosine(q, r["embedding"]), 9), r["id"]) for r in store.records),
            key=lambda t: (-t[0], t[1]),
        )
        assert hits[0]["id"] == scored[0][1]
        assert hits[0]["score"] == scored[0][0]


def test_persistence_round_trip(tmp_path):
    path = tmp_path / "m.jsonl"
    store = MemoryStore(path)
    for i in range(20):
        store.add(f"record number {i} about hplc", {"i": i})
    before = store.search("record about hplc", k=5)
    reloaded = MemoryStore(path)
    assert len(reloaded) == 20
    after = reloaded.search("record about hplc", k=5)
    assert before == after


def test_cosine_bounds(tmp_path):
    rng = random.Random(3)
    words = "alpha beta gamma delta epsilon zeta".split()
    for _ in range(50):
        a = embed(" ".join(rng.choice(words) for _ in range(4)))
        b = embed(" ".join(rng.choice(words) for _ in range(4)))
        assert -1.0 - 1e-9 <= cosine(a, b) <= 1.0 + 1e-9


def test_search_k_validation(tmp_path):
    store = MemoryStore(tmp_path / "m.jsonl")
    with pytest.raises(ValueError):
        store.search("x", k=0)
