import logging
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from instrux import fixtures
from instrux.errors import ValidationError
from instrux.mixtures import (
    MVI,
    SI,
    SplitSpec,
    build_crosstask_mixture,
    build_eval_mixture,
    build_multitask_mixture,
    build_mvi_mixture,
    build_si_mixture,
    load_mixture,
    round_half_up,
    sample_fraction,
    serialize_manifest,
    serialize_mixture,
    split_instances,
)

from conftest import make_card, make_family, make_instances

SPEC = SplitSpec(seed=926)


class TestSplit:
    def test_hundred_instances(self):
        card = make_card(n_instances=100)
        train, dev, test = split_instances(card, SPEC)
        assert (len(train), len(dev), len(test)) == (70, 10, 20)

    def test_ten_instances(self):
        card = make_card(n_instances=10)
        train, dev, test = split_instances(card, SPEC)
        assert (len(train), len(dev), len(test)) == (7, 1, 2)

    def test_same_seed_same_partition(self):
        card = make_card(n_instances=37)
        first = split_instances(card, SPEC)
        second = split_instances(card, SPEC)
        assert [[i.id for i in part] for part in first] == [[i.id for i in part] for part in second]

    def test_small_card_warns(self, caplog):
        card = make_card(n_instances=5)
        with caplog.at_level(logging.WARNING):
            split_instances(card, SPEC)
        assert any("degenerate" in rec.getMessage() for rec in caplog.records)

    @given(st.integers(min_value=1, max_value=120), st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=80)
    def test_disjoint_and_exhaustive(self, n, seed):
        card = make_card(n_instances=n)
        train, dev, test = split_instances(card, SplitSpec(seed=seed))
        ids = [i.id for part in (train, dev, test) for i in part]
        assert len(ids) == n
        assert len(set(ids)) == n
        assert len(train) == round_half_up(0.7 * n) and len(test) <= round_half_up(0.2 * n)

    def test_fractions_must_sum_to_one(self):
        with pytest.raises(ValueError):
            SplitSpec(seed=1, train_frac=0.5, dev_frac=0.1, test_frac=0.2)


class TestSampleFraction:
    def test_full_fraction_returns_all(self):
        instances = make_instances(10)
        out = sample_fraction(instances, 1.0, 3)
        assert sorted(i.id for i in out) == sorted(i.id for i in instances)

    def test_one_percent_of_6500(self):
        instances = make_instances(6500)
        assert len(sample_fraction(instances, 0.01, 3)) == 65

    def test_floor_to_one(self):
        instances = make_instances(40)
        assert len(sample_fraction(instances, 0.01, 3)) == 1

    @pytest.mark.parametrize("p", [0.0, -0.5, 1.5])
    def test_out_of_range_rejected(self, p):
        with pytest.raises(ValueError):
            sample_fraction(make_instances(5), p, 1)


class TestSiMixture:
    def test_full_sample_of_hundred_instance_card(self):
        family = make_family(("original phrasing", "variant phrasing"), n_instances=100)
        mix = build_si_mixture(family, 1.0, SPEC)
        assert len(mix.items) == 70
        assert all(item.variant_index == 0 for item in mix.items)

    def test_ten_percent_of_thousand(self):
        family = make_family(("original phrasing", "variant phrasing"), n_instances=1000)
        mix = build_si_mixture(family, 0.1, SPEC)
        assert len(mix.items) == 70  # 10% of the 700-instance train split


class TestMviMixture:
    def test_round_robin_split_two_cards(self):
        family = make_family(("original phrasing", "variant phrasing"), n_instances=15)
        # train split is 10 or 11; use p to land on 10 sampled instances
        train, _, _ = split_instances(family.original, SPEC)
        mix = build_mvi_mixture(family, 10 / len(train), SPEC)
        by_variant = Counter(item.variant_index for item in mix.items)
        assert by_variant[0] == 5 and by_variant[1] == 5

    def test_si_and_mvi_share_instance_multiset(self):
        family = make_family(("original phrasing", "variant a", "variant b"), n_instances=60)
        si = build_si_mixture(family, 0.5, SPEC)
        mvi = build_mvi_mixture(family, 0.5, SPEC)
        assert Counter(i.instance_id for i in si.items) == Counter(i.instance_id for i in mvi.items)
        assert len(si.items) == len(mvi.items)

    def test_equal_data_mode(self):
        # 4 variants -> V' = 5; SI sample of 100 -> ceil(100/5) = 20 items
        family = make_family(tuple(f"phrasing {i}" for i in range(5)), n_instances=143)
        si = build_si_mixture(family, 1.0, SPEC)
        assert len(si.items) == 100
        mvi = build_mvi_mixture(family, 1.0, SPEC, equal_data=True)
        assert len(mvi.items) == 20

    def test_equal_data_not_counting_original(self):
        family = make_family(tuple(f"phrasing {i}" for i in range(5)), n_instances=143)
        mvi = build_mvi_mixture(family, 1.0, SPEC, equal_data=True, count_original=False)
        assert len(mvi.items) == 25

    def test_broadcast_mode_inflates(self):
        family = make_family(("original phrasing", "variant phrasing"), n_instances=20)
        default = build_mvi_mixture(family, 1.0, SPEC)
        inflated = build_mvi_mixture(family, 1.0, SPEC, broadcast=True)
        assert len(inflated.items) == 2 * len(default.items)

    def test_zero_variants_rejected(self):
        family = make_family(("only the original",))
        with pytest.raises(ValidationError):
            build_mvi_mixture(family, 1.0, SPEC)


class TestMultitask:
    def test_item_count_is_sum_of_train_samples(self):
        families = fixtures.load_all_families()
        mix = build_multitask_mixture(families, 1.0, SI, SPEC)
        expected = sum(len(split_instances(f.original, SPEC)[0]) for f in families)
        assert len(mix.items) == expected

    def test_prompts_capped_at_two_examples(self):
        families = fixtures.load_all_families()
        mix = build_multitask_mixture(families, 0.5, MVI, SPEC)
        for item in mix.items[:50]:
            assert item.prompt.count("Positive Example") <= 2
            assert item.prompt.count("Negative Example") <= 2

    def test_manifest_and_items_reproducible(self):
        families = fixtures.load_all_families()[:3]
        a = build_multitask_mixture(families, 0.5, SI, SPEC)
        b = build_multitask_mixture(families, 0.5, SI, SPEC)
        assert serialize_manifest(a) == serialize_manifest(b)
        assert serialize_mixture(a) == serialize_mixture(b)

    def test_jobs_do_not_change_output(self):
        families = fixtures.load_all_families()
        serial = build_multitask_mixture(families, 1.0, MVI, SPEC, jobs=1)
        parallel = build_multitask_mixture(families, 1.0, MVI, SPEC, jobs=8)
        assert serialize_mixture(serial) == serialize_mixture(parallel)


class TestCrosstask:
    def make_many(self, n):
        return [
            make_family(("original phrasing", "variant phrasing"),
                        task_id=f"task{i:03d}_synth", n_instances=10)
            for i in range(n)
        ]

    def test_full_task_fraction_uses_all(self):
        train_families = self.make_many(20)
        eval_families = [make_family(("eval phrasing", "eval variant"), task_id="task990_eval")]
        train, eval_sets = build_crosstask_mixture(train_families, 1.0, 0.5, SI, SPEC, eval_families)
        assert len(train.manifest["families"]) == 20
        assert set(eval_sets) == {"task990_eval"}

    def test_one_percent_of_274_tasks_is_three(self):
        train_families = self.make_many(274)
        train, _ = build_crosstask_mixture(train_families, 0.01, 0.1, SI, SPEC, [])
        assert len(train.manifest["families"]) == 3

    def test_overlapping_families_rejected(self):
        train_families = self.make_many(3)
        with pytest.raises(ValidationError, match="task001_synth"):
            build_crosstask_mixture(train_families, 1.0, 0.5, SI, SPEC, [train_families[1]])

    def test_eval_sets_use_original_wording(self):
        train_families = self.make_many(4)
        eval_family = make_family(("the original eval wording", "a variant eval wording"),
                                  task_id="task991_eval")
        _, eval_sets = build_crosstask_mixture(train_families, 0.5, 0.5, MVI, SPEC, [eval_family])
        eval_mix = eval_sets["task991_eval"]
        assert all(item.variant_index == 0 for item in eval_mix.items)
        assert all("the original eval wording" in item.prompt for item in eval_mix.items)


class TestEvalMixture:
    def test_uses_test_split_of_original(self):
        family = make_family(("original phrasing", "variant phrasing"), n_instances=50)
        _, _, test = split_instances(family.original, SPEC)
        mix = build_eval_mixture(family, SPEC)
        assert sorted(i.instance_id for i in mix.items) == sorted(i.id for i in test)
        assert all(item.variant_index == 0 for item in mix.items)

    def test_wording_override_keeps_instances(self):
        family = make_family(("original phrasing", "variant phrasing"), n_instances=50)
        default = build_eval_mixture(family, SPEC)
        variant = build_eval_mixture(family, SPEC, card=family.variants[0])
        assert [i.instance_id for i in default.items] == [i.instance_id for i in variant.items]
        assert all(item.variant_index == 1 for item in variant.items)
        assert all("variant phrasing" in item.prompt for item in variant.items)


def test_mixture_file_round_trip(demo_family):
    mix = build_si_mixture(demo_family, 1.0, SPEC)
    loaded = load_mixture(serialize_mixture(mix), mix.manifest)
    assert loaded.items == mix.items
    assert loaded.regime == SI
