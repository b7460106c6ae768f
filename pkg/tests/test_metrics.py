import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from instrux import fixtures
from instrux.errors import InsufficientMembersError, SchemaError, SimilarityError
from instrux.metrics import (
    SimilarityBackend,
    dataset_statistics,
    edit_distance,
    family_sts_stats,
    family_stats,
    length_diversity,
    load_vector_file,
    sts_score,
    word_dissimilarity_stats,
)
from instrux.tasks import InstructionFamily

from conftest import make_card, make_family
from oracles import edit_distance_oracle

LEXICAL = SimilarityBackend.lexical()

texts = st.text(alphabet="ab cd", min_size=0, max_size=20)


class TestStsScore:
    def test_identity_is_exactly_one(self):
        assert sts_score("an identical definition", "an identical definition", LEXICAL) == 1.0

    def test_disjoint_tokens_zero(self):
        assert sts_score("one two three", "four five six", LEXICAL) == 0.0

    def test_hand_computed_two_thirds(self):
        assert sts_score("a b c", "a b d", LEXICAL) == pytest.approx(2 / 3, abs=1e-12)

    @given(texts, texts)
    @settings(max_examples=100)
    def test_symmetric(self, a, b):
        assert sts_score(a, b, LEXICAL) == sts_score(b, a, LEXICAL)

    def test_vector_identity_exactly_one(self):
        backend = SimilarityBackend.from_vectors({"cat": [1.0, 2.0], "sat": [0.5, 0.1]})
        assert sts_score("cat sat", "cat sat", LEXICAL) == 1.0
        assert sts_score("the cat sat", "cat sat there", backend) == 1.0  # same in-vocab tokens

    def test_vector_rescaling_from_minus_one(self):
        backend = SimilarityBackend.from_vectors({"up": [1.0, 0.0], "down": [-1.0, 0.0], "side": [0.0, 1.0]})
        assert sts_score("up", "down", backend) == pytest.approx(0.0, abs=1e-12)
        assert sts_score("up", "side", backend) == pytest.approx(0.5, abs=1e-12)

    def test_fully_out_of_vocabulary_raises(self):
        backend = SimilarityBackend.from_vectors({"known": [1.0, 0.0]})
        with pytest.raises(SimilarityError):
            sts_score("unknown words only", "known", backend)
        with pytest.raises(SimilarityError):
            sts_score("unknown", "also unfamiliar", backend)

    def test_demo_vector_fixture(self):
        backend = load_vector_file(fixtures.fixture_path("vectors", "demo_vectors.txt").read_bytes())
        close = sts_score("classify the report", "categorize the bulletin", backend)
        far = sts_score("classify", "weather", backend)
        assert close > 0.9
        assert far < close

    def test_inconsistent_vector_dims_rejected(self):
        with pytest.raises(SchemaError):
            load_vector_file(b"a 1.0 2.0\nb 1.0\n")


class TestFamilyStsStats:
    def test_all_identical_definitions(self):
        family = make_family(("same wording here", "same wording here", "same wording here"))
        assert family_sts_stats(family, LEXICAL) == (1.0, 0.0)

    def test_two_member_family_sd_zero(self):
        family = make_family(("a b c", "a b d"))
        mean, sd = family_sts_stats(family, LEXICAL)
        assert mean == pytest.approx(2 / 3, abs=1e-12)
        assert sd == 0.0

    def test_three_member_hand_case(self):
        # pair scores {1.0, 0.5, 0.5}: mean 2/3, population sd sqrt(1/18)
        family = make_family(("x", "x", "x y z w"))
        mean, sd = family_sts_stats(family, LEXICAL)
        assert mean == pytest.approx(2 / 3, abs=1e-12)
        assert sd == pytest.approx(math.sqrt(1 / 18), abs=1e-12)

    def test_single_member_family_rejected(self):
        family = InstructionFamily("task900_demo", make_card(), ())
        with pytest.raises(InsufficientMembersError):
            family_sts_stats(family, LEXICAL)


class TestEditDistance:
    @pytest.mark.parametrize("a,b,expected", [
        ("abc", "abc", 0),
        ("", "abc", 3),
        ("abc", "", 3),
        ("kitten", "sitting", 3),
        ("saturday", "sunday", 3),
    ])
    def test_known_values(self, a, b, expected):
        assert edit_distance(a, b) == expected

    def test_matches_full_table_oracle_on_random_pairs(self):
        rng = random.Random(42)
        alphabet = "abcde"
        for _ in range(300):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
            assert edit_distance(a, b) == edit_distance_oracle(a, b)

    @given(st.text(max_size=25), st.text(max_size=25), st.text(max_size=25))
    @settings(max_examples=80)
    def test_metric_axioms(self, a, b, c):
        assert edit_distance(a, b) == edit_distance(b, a)
        assert (edit_distance(a, b) == 0) == (a == b)
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


class TestWordDissimilarity:
    def test_identical_definitions_zero(self):
        family = make_family(("alike wording", "alike wording", "alike wording"))
        assert word_dissimilarity_stats(family) == (0.0, 0.0)

    def test_two_member_family_normalizes_to_one(self):
        family = make_family(("abcdef", "abcxyz"))
        mean, sd = word_dissimilarity_stats(family)
        assert mean == 1.0
        assert sd == 0.0

    def test_hand_case_distances_10_5_5(self):
        # raw pairwise distances {10, 5, 5} -> normalized {1.0, 0.5, 0.5}
        family = make_family(("aaaaa", "aaaaabbbbbbbbbb", "aaaaabbbbb"))
        mean, sd = word_dissimilarity_stats(family)
        assert mean == pytest.approx(2 / 3, abs=1e-9)
        assert sd == pytest.approx(math.sqrt(1 / 18), abs=1e-9)

    @given(st.lists(st.text(alphabet="abcd", min_size=1, max_size=12), min_size=2, max_size=5))
    @settings(max_examples=60)
    def test_normalized_values_in_unit_interval(self, definitions):
        family = make_family(tuple(definitions))
        mean, sd = word_dissimilarity_stats(family)
        assert 0.0 <= mean <= 1.0
        assert sd >= 0.0
        distances = {edit_distance(a, b) for i, a in enumerate(definitions) for b in definitions[i + 1:]}
        if max(distances) > 0:
            # the family maximum must normalize to exactly 1
            norm = [d / max(distances) for d in distances]
            assert max(norm) == 1.0


class TestLengthDiversity:
    def test_equal_lengths(self):
        family = make_family(("one two three", "uno dos tres"))
        assert length_diversity(family) == 0.0

    def test_double_length_is_hundred_percent(self):
        family = make_family(("w " * 50, "w " * 100))
        assert length_diversity(family) == 100.0

    def test_three_lengths_hand_case(self):
        family = make_family(("w " * 40, "w " * 50, "w " * 60))
        assert length_diversity(family) == 50.0


class TestDatasetStatistics:
    def test_synthetic_single_family(self):
        family = make_family(
            tuple(f"phrasing number {i}" for i in range(5)),  # 1 original + 4 variants
            n_instances=10,
        )
        stats = dataset_statistics([family])
        assert stats.avg_variants_per_task == 4
        assert stats.avg_instances_per_task == 10
        assert stats.avg_positive_examples == 3
        assert stats.avg_negative_examples == 2

    def test_fixture_families_match_published_counts(self):
        families = fixtures.load_all_families()
        counts = [len(f.variants) for f in families]
        assert counts == [8, 8, 8, 8, 8, 8, 3, 5]
        stats = dataset_statistics(families)
        assert stats.avg_variants_per_task == 7.0

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            dataset_statistics([])


def test_family_stats_bundle(demo_family):
    stats = family_stats(demo_family, LEXICAL)
    assert stats.family_id == demo_family.family_id
    assert 0.0 <= stats.sts_mean <= 1.0
    assert 0.0 <= stats.dissim_mean <= 1.0
    assert stats.length_diversity_pct >= 0.0
