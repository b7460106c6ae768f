import random

import pytest
from hypothesis import given, settings, strategies as st

from instrux.mixtures import Mixture, MixtureItem
from instrux.scoring import (
    PredictionSet,
    lcs_length,
    load_predictions,
    load_report,
    rouge_l,
    score_predictions,
    serialize_predictions,
    serialize_report,
    tokenize,
)

from oracles import lcs_bruteforce, rouge_l_oracle

token_lists = st.lists(st.sampled_from(list("abcde")), max_size=12)


class TestTokenize:
    def test_strips_punctuation_and_lowercases(self):
        assert tokenize("The cat.") == ["the", "cat"]

    def test_empty(self):
        assert tokenize("") == []

    def test_interior_apostrophe_kept(self):
        assert tokenize("Don't stop") == ["don't", "stop"]

    def test_pure_punctuation_dropped(self):
        assert tokenize("well -- yes!") == ["well", "yes"]


class TestLcs:
    def test_identity(self):
        assert lcs_length(["a", "b", "c"], ["a", "b", "c"]) == 3

    def test_disjoint(self):
        assert lcs_length(["a", "b"], ["c", "d"]) == 0

    def test_hand_case(self):
        assert lcs_length(["the", "cat", "sat"], ["the", "cat", "ran"]) == 2

    @given(token_lists, token_lists)
    @settings(max_examples=150)
    def test_matches_bruteforce(self, a, b):
        assert lcs_length(a, b) == lcs_bruteforce(tuple(a), tuple(b))


class TestRougeL:
    def test_exact_match_scores_one(self):
        assert rouge_l("the cat sat", ["the cat sat"]) == 1.0

    def test_no_overlap_scores_zero(self):
        assert rouge_l("alpha beta", ["gamma delta"]) == 0.0

    def test_hand_case_two_thirds(self):
        assert rouge_l("the cat sat", ["the cat ran"]) == pytest.approx(2 / 3, abs=1e-12)

    def test_max_over_references(self):
        assert rouge_l("the cat sat", ["nothing shared", "the cat sat"]) == 1.0

    def test_empty_prediction_scores_zero(self):
        assert rouge_l("", ["something"]) == 0.0

    def test_empty_references_rejected(self):
        with pytest.raises(ValueError):
            rouge_l("text", [])

    @given(token_lists, st.lists(token_lists, min_size=1, max_size=3))
    @settings(max_examples=150)
    def test_matches_oracle(self, pred, refs):
        got = rouge_l(" ".join(pred), [" ".join(r) for r in refs])
        want = rouge_l_oracle(tuple(pred), [tuple(r) for r in refs])
        assert got == pytest.approx(want, abs=1e-9)

    @given(token_lists.filter(bool), st.permutations(["x y", "a b c", "x b"]))
    @settings(max_examples=40)
    def test_reference_order_invariance(self, pred, refs):
        text = " ".join(pred)
        assert rouge_l(text, refs) == rouge_l(text, list(reversed(refs)))

    @given(token_lists.filter(bool), st.lists(token_lists, min_size=1, max_size=3), token_lists)
    @settings(max_examples=80)
    def test_adding_reference_never_decreases(self, pred, refs, extra):
        text = " ".join(pred)
        base = rouge_l(text, [" ".join(r) for r in refs])
        more = rouge_l(text, [" ".join(r) for r in refs] + [" ".join(extra)])
        assert more >= base


def eval_mixture(items):
    return Mixture(setting="task_specific", regime="EVAL", fraction=1.0, items=tuple(items))


def item(instance_id, family_id, refs):
    return MixtureItem(prompt=f"prompt for {instance_id}", references=tuple(refs),
                       family_id=family_id, variant_index=0, instance_id=instance_id)


class TestScorePredictions:
    def test_perfect_predictions(self):
        mix = eval_mixture([item("i1", "famA", ["gold one"]), item("i2", "famB", ["gold two"])])
        preds = PredictionSet({"i1": "gold one", "i2": "gold two"})
        report = score_predictions(preds, mix)
        assert report.macro == 1.0 and report.micro == 1.0
        assert report.missing == () and report.unmatched == ()

    def test_all_missing(self):
        mix = eval_mixture([item("i1", "famA", ["gold"]), item("i2", "famA", ["gold"])])
        report = score_predictions(PredictionSet({}), mix)
        assert report.macro == 0.0 and report.micro == 0.0
        assert set(report.missing) == {"i1", "i2"}

    def test_macro_vs_micro_hand_case(self):
        # family means {0.5, 1.0}, sizes {1, 3} -> macro 0.75, micro 0.875
        mix = eval_mixture(
            [item("a1", "famA", ["a b"])]
            + [item(f"b{i}", "famB", ["ok fine"]) for i in range(3)]
        )
        preds = PredictionSet({"a1": "a c", **{f"b{i}": "ok fine" for i in range(3)}})
        report = score_predictions(preds, mix)
        assert report.per_family["famA"] == pytest.approx(0.5, abs=1e-12)
        assert report.per_family["famB"] == 1.0
        assert report.macro == pytest.approx(0.75, abs=1e-12)
        assert report.micro == pytest.approx(0.875, abs=1e-12)

    def test_unmatched_ids_listed(self):
        mix = eval_mixture([item("i1", "famA", ["gold"])])
        report = score_predictions(PredictionSet({"i1": "gold", "stray": "x"}), mix)
        assert report.unmatched == ("stray",)

    def test_report_round_trip(self):
        mix = eval_mixture([item("i1", "famA", ["gold"]), item("i2", "famB", ["gold"])])
        report = score_predictions(PredictionSet({"i1": "gold"}), mix)
        assert load_report(serialize_report(report)) == report

    def test_predictions_file_round_trip(self):
        preds = PredictionSet({"i1": "first output", "i2": "second output"})
        assert load_predictions(serialize_predictions(preds)).predictions == preds.predictions


def test_random_rouge_against_oracle_seeded():
    rng = random.Random(926)
    vocab = ["v1", "v2", "v3", "v4", "v5"]
    for _ in range(200):
        pred = [rng.choice(vocab) for _ in range(rng.randint(0, 12))]
        refs = [[rng.choice(vocab) for _ in range(rng.randint(0, 12))]
                for _ in range(rng.randint(1, 3))]
        got = rouge_l(" ".join(pred), [" ".join(r) for r in refs])
        want = rouge_l_oracle(tuple(pred), [tuple(r) for r in refs])
        assert abs(got - want) <= 1e-9
