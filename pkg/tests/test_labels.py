import random
from functools import lru_cache

import pytest
from hypothesis import given
from hypothesis import strategies as st

from harp.core import LabelDictionary, LabelEntry
from harp.errors import AlreadyDecidedError, EmptyDictionaryError, UnknownCanonicalError
from harp.labels import (
    LabelMapping,
    SuggestionScore,
    decide_mapping,
    levenshtein,
    seed_dictionary,
    similarity,
    suggest,
)


def levenshtein_oracle(a: str, b: str) -> int:
    """Brute-force recursive edit distance, memoized; independent of the
    two-row implementation under test."""

    @lru_cache(maxsize=None)
    def d(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


class TestSimilarity:
    def test_identical_strings(self):
        assert similarity("sitting", "sitting") == 1.0

    def test_running_vs_runing(self):
        # oracle: one deletion over max length 7
        assert levenshtein_oracle("running", "runing") == 1
        assert similarity("running", "runing") == pytest.approx(1 - 1 / 7)

    def test_empty_vs_word(self):
        assert similarity("walking", "") == 0.0

    def test_both_empty(self):
        assert similarity("", "") == 1.0

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(123)
        alphabet = "abcdefg_"
        for _ in range(300):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12)))
            expected = 1.0 if a == b else 1 - levenshtein_oracle(a, b) / max(len(a), len(b))
            assert similarity(a, b) == pytest.approx(expected)

    @given(st.text(max_size=25), st.text(max_size=25))
    def test_symmetric_and_bounded(self, a, b):
        s = similarity(a, b)
        assert s == similarity(b, a)
        assert 0.0 <= s <= 1.0
        assert similarity(a, a) == 1.0


@pytest.fixture
def sit_dictionary():
    return LabelDictionary(
        {
            "sitting": LabelEntry("seated state", "state", ("seated",)),
            "sit_down": LabelEntry("stand-to-sit transition", "transition", ("sitting_down",)),
        }
    )


class TestSuggest:
    def test_state_vs_transition_ambiguity_is_surfaced(self, sit_dictionary):
        out = suggest("sitting", sit_dictionary, k=5)
        assert [c for c, _ in out] == ["sitting", "sit_down"]
        assert out[0][1] == SuggestionScore(1.0, "exact_alias")
        # a canonical scores the max over its name and aliases; the alias
        # "sitting_down" (lev 5 / len 12) beats the name "sit_down" (lev 5 / len 8)
        assert levenshtein_oracle("sitting", "sit_down") == 5
        assert levenshtein_oracle("sitting", "sitting_down") == 5
        assert out[1][1].score == pytest.approx(max(1 - 5 / 8, 1 - 5 / 12))
        assert out[1][1].basis == "string_similarity"

    def test_score_without_aliases_uses_the_name(self):
        d = LabelDictionary(
            {
                "sitting": LabelEntry("", "state"),
                "sit_down": LabelEntry("", "transition"),
            }
        )
        out = suggest("sitting", d, k=2)
        assert out[0] == ("sitting", SuggestionScore(1.0, "exact_alias"))
        assert out[1][0] == "sit_down"
        assert out[1][1].score == pytest.approx(1 - 5 / 8)

    def test_exact_canonical_name_ranks_first(self, sit_dictionary):
        out = suggest("Sit Down", sit_dictionary, k=2)
        assert out[0][0] == "sit_down"
        assert out[0][1].score == 1.0

    def test_alias_hit_scores_one(self, sit_dictionary):
        out = suggest("seated", sit_dictionary, k=1)
        assert out[0] == ("sitting", SuggestionScore(1.0, "exact_alias"))

    def test_no_match_still_ranked_with_lexicographic_ties(self):
        d = LabelDictionary(
            {
                "walking": LabelEntry("", "state"),
                "running": LabelEntry("", "state"),
            }
        )
        out = suggest("zzzz", d, k=2)
        expected = {
            "walking": 1 - levenshtein_oracle("zzzz", "walking") / 7,
            "running": 1 - levenshtein_oracle("zzzz", "running") / 7,
        }
        assert {c: s.score for c, s in out} == pytest.approx(expected)
        if expected["running"] == expected["walking"]:
            assert [c for c, _ in out] == ["running", "walking"]

    def test_deterministic(self, sit_dictionary):
        assert suggest("sat", sit_dictionary, k=2) == suggest("sat", sit_dictionary, k=2)

    def test_empty_dictionary(self):
        with pytest.raises(EmptyDictionaryError):
            suggest("walk", LabelDictionary(), k=1)

    def test_top_k_limits(self, sit_dictionary):
        assert len(suggest("sitting", sit_dictionary, k=1)) == 1


def make_mapping(raw="sitting", dataset="ds1"):
    return LabelMapping(
        mapping_id="M1",
        dataset_id=dataset,
        raw_label=raw,
        suggestions=(("sitting", SuggestionScore(1.0, "exact_alias")),),
    )


class TestDecide:
    def test_accept_follows_the_reviewed_suggestion(self, sit_dictionary):
        decided = decide_mapping(make_mapping(), "accept", "sit_down", "anna", sit_dictionary)
        assert decided.status == "accepted"
        assert decided.canonical_label == "sit_down"
        assert decided.decided_by == "anna"
        assert decided.decided_at

    def test_identical_repeat_is_idempotent(self, sit_dictionary):
        first = decide_mapping(make_mapping(), "accept", "sit_down", "anna", sit_dictionary)
        again = decide_mapping(first, "accept", "sit_down", "bob", sit_dictionary)
        assert again is first

    def test_conflicting_repeat_errors(self, sit_dictionary):
        first = decide_mapping(make_mapping(), "accept", "sit_down", "anna", sit_dictionary)
        with pytest.raises(AlreadyDecidedError):
            decide_mapping(first, "accept", "sitting", "bob", sit_dictionary)
        with pytest.raises(AlreadyDecidedError):
            decide_mapping(first, "reject", None, "bob", sit_dictionary)

    def test_manual_with_unknown_canonical(self, sit_dictionary):
        with pytest.raises(UnknownCanonicalError):
            decide_mapping(make_mapping(), "manual", "falling", "anna", sit_dictionary)

    def test_reject_clears_canonical(self, sit_dictionary):
        decided = decide_mapping(make_mapping(), "reject", None, "anna", sit_dictionary)
        assert decided.status == "rejected"
        assert decided.canonical_label is None

    def test_round_trips_through_json(self, sit_dictionary):
        decided = decide_mapping(make_mapping(), "accept", "sitting", "anna", sit_dictionary)
        assert LabelMapping.from_json(decided.to_json()) == decided


class TestSeedDictionary:
    def test_contains_seventeen_labels(self):
        assert len(seed_dictionary()) == 17

    def test_common_aliases_resolve(self):
        d = seed_dictionary()
        assert d.resolve_exact("jogging") == "running"
        assert d.resolve_exact("SIT TO STAND") == "stand_up"
        assert d.resolve_exact("fall sideward") == "fall_lateral"
