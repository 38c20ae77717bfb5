from __future__ import annotations

import random
from functools import lru_cache

import pytest

from tippy.errors import NoConfidentMatchError, ValidationError
from tippy.fuzzy import damerau_levenshtein, fuzzy_score, normalize
from tippy.tools import fuzzy_lookup_actor, fuzzy_lookup_lab
from tippy.world import seed_world


def oracle_dl(a: str, b: str) -> int:
    """Independent Damerau-Levenshtein (adjacent transposition): memoized recursion."""

    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        cost = 0 if a[i - 1] == b[j - 1] else 1
        best = min(rec(i - 1, j) + 1, rec(i, j - 1) + 1, rec(i - 1, j - 1) + cost)
        if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
            best = min(best, rec(i - 2, j - 2) + 1)
        return best

    return rec(len(a), len(b))


def test_normalization_identity():
    assert normalize("Lab-A") == normalize("lab a") == "lab a"
    assert fuzzy_score("Lab-A", "lab a") == 1.0


def test_hplc_example_value():
    # normalized "hplc 1" vs "hplc 01": DL 1 over max length 7 -> 6/7;
    # token component 1/3; max is the edit component
    assert abs(fuzzy_score("HPLC 1", "hplc 01") - 6 / 7) < 1e-12


def test_empty_after_normalization():
    with pytest.raises(ValidationError):
        fuzzy_score("", "x")
    with pytest.raises(ValidationError):
        fuzzy_score("- _ -", "x")


def test_dl_against_oracle_random():
    rng = random.Random(42)
    alphabet = "abcde "
    for _ in range(300):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        assert damerau_levenshtein(a, b) == oracle_dl(a, b)


def test_dl_known_cases():
    assert damerau_levenshtein("abc", "abc") == 0
    assert damerau_levenshtein("abc", "acb") == 1  # transposition
    assert damerau_levenshtein("", "xyz") == 3
    assert damerau_levenshtein("kitten", "sitting") == 3


def test_score_symmetry_and_identity():
    rng = random.Random(7)
    alphabet = "abcdef -_"
    for _ in range(200):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 10)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 10)))
        if not normalize(a) or not normalize(b):
            continue
        assert abs(fuzzy_score(a, b) - fuzzy_score(b, a)) < 1e-12
        assert fuzzy_score(a, a) == 1.0
        assert 0.0 <= fuzzy_score(a, b) <= 1.0


# --- entity lookups over the seed fixture ---

def test_lookup_actor_hplc1():
    world = seed_world()
    match = fuzzy_lookup_actor(world, "hplc 1")
    assert match.candidate_name == "HPLC-01"
    assert len(match.alternates) == 3


def test_lookup_actor_exact_name_scores_one():
    world = seed_world()
    match = fuzzy_lookup_actor(world, "HPLC-02")
    assert match.candidate_name == "HPLC-02"
    assert match.score == 1.0


def test_lookup_brute_force_agreement():
    """Best hit equals argmax of brute-force scoring over names and ids."""
    world = seed_world()
    for query in ("hplc 1", "liquid handler 01", "dana kim", "synthesizer", "hplc-02"):
        scores = {}
        for actor in world.actors.values():
            scores[actor.id] = max(fuzzy_score(query, actor.name), fuzzy_score(query, actor.id))
        best_id, best_score = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        if best_score >= 0.5:
            match = fuzzy_lookup_actor(world, query)
            assert match.candidate_id == best_id
            assert abs(match.score - best_score) < 1e-12
        else:
            with pytest.raises(NoConfidentMatchError):
                fuzzy_lookup_actor(world, query)


def test_lookup_no_confident_match_lists_candidates():
    world = seed_world()
    with pytest.raises(NoConfidentMatchError) as err:
        fuzzy_lookup_actor(world, "zzzz")
    assert len(err.value.candidates) == 3
    # brute-force check that every fixture score really is below threshold
    for actor in world.actors.values():
        assert max(fuzzy_score("zzzz", actor.name), fuzzy_score("zzzz", actor.id)) < 0.5


def test_lookup_lab():
    world = seed_world()
    assert fuzzy_lookup_lab(world, "chemistry a").candidate_name == "Chemistry Lab A"
    assert fuzzy_lookup_lab(world, "analytics").candidate_name == "Analytics Lab B"
