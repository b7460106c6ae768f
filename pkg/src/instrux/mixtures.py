"""SI / MVI training and evaluation mixture construction.

A mixture is a materialized list of (prompt, references) items plus a
provenance manifest.  Single-instruction (SI) mixtures serialize every
sampled instance under the original card; multi-variant (MVI) mixtures
partition the same sampled instances round-robin across all member cards,
so both regimes see identical instance budgets.  Evaluation sets are built
from the original card's test split.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ParseError, ValidationError
from .seeding import derive_seed, rng_for
from .tasks import Instance, InstructionFamily, TaskCard, serialize_prompt

logger = logging.getLogger(__name__)

TASK_SPECIFIC = "task_specific"
MULTI_TASK = "multi_task"
CROSS_TASK = "cross_task"
SI = "SI"
MVI = "MVI"


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True, slots=True)
class SplitSpec:
    """Train/dev/test fractions plus the master seed for all sampling."""

    seed: int
    train_frac: float = 0.70
    dev_frac: float = 0.10
    test_frac: float = 0.20

    def __post_init__(self):
        total = self.train_frac + self.dev_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total}")


@dataclass(frozen=True, slots=True)
class MixtureItem:
    prompt: str
    references: tuple[str, ...]
    family_id: str
    variant_index: int
    instance_id: str


@dataclass(frozen=True, slots=True)
class Mixture:
    setting: str
    regime: str
    fraction: float
    items: tuple[MixtureItem, ...]
    manifest: dict = field(default_factory=dict)


def split_instances(
    card: TaskCard, spec: SplitSpec
) -> tuple[tuple[Instance, ...], tuple[Instance, ...], tuple[Instance, ...]]:
    """Seeded shuffle, then a contiguous train/dev/test cut.

    Sizes: round-half-up of the train and test fractions, remainder to dev.
    The three parts are disjoint and exhaustive.
    """
    instances = list(card.instances)
    n = len(instances)
    if n < 10:
        logger.warning("task %s: only %d instances, split sizes degenerate", card.task_id, n)
    rng = rng_for(spec.seed, f"split:{card.task_id}")
    rng.shuffle(instances)
    n_train = min(n, round_half_up(spec.train_frac * n))
    n_test = min(n - n_train, round_half_up(spec.test_frac * n))
    n_dev = n - n_train - n_test
    train = instances[:n_train]
    dev = instances[n_train: n_train + n_dev]
    test = instances[n_train + n_dev:]
    return tuple(train), tuple(dev), tuple(test)


def sample_fraction(instances: Sequence[Instance], p: float, seed: int) -> tuple[Instance, ...]:
    """Seeded sample without replacement of max(1, round(p * N)) instances."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {p}")
    rng = rng_for(seed, "sample-fraction")
    size = min(len(instances), max(1, round_half_up(p * len(instances))))
    return tuple(rng.sample(list(instances), size))


def _items_for(
    card: TaskCard,
    family_id: str,
    instances: Iterable[Instance],
    max_pos: int,
    max_neg: int,
    include_explanations: bool,
) -> list[MixtureItem]:
    return [
        MixtureItem(
            prompt=serialize_prompt(card, inst, max_pos, max_neg, include_explanations),
            references=inst.references,
            family_id=family_id,
            variant_index=card.variant_index,
            instance_id=inst.id,
        )
        for inst in instances
    ]


def _train_sample(family: InstructionFamily, p: float, spec: SplitSpec) -> tuple[Instance, ...]:
    train, _, _ = split_instances(family.original, spec)
    return sample_fraction(train, p, derive_seed(spec.seed, f"sample:{family.family_id}"))


def _manifest(setting: str, regime: str, p: float, spec: SplitSpec, **options) -> dict:
    return {
        "setting": setting,
        "regime": regime,
        "fraction": p,
        "seed": spec.seed,
        "split": [spec.train_frac, spec.dev_frac, spec.test_frac],
        "options": options,
    }


def build_si_mixture(
    family: InstructionFamily,
    p: float,
    spec: SplitSpec,
    max_pos: int = 2,
    max_neg: int = 2,
    include_explanations: bool = True,
    setting: str = TASK_SPECIFIC,
) -> Mixture:
    """Training mixture that uses only the original instruction."""
    sample = _train_sample(family, p, spec)
    items = _items_for(family.original, family.family_id, sample, max_pos, max_neg, include_explanations)
    manifest = _manifest(setting, SI, p, spec, max_pos=max_pos, max_neg=max_neg)
    manifest["families"] = {family.family_id: len(items)}
    return Mixture(setting=setting, regime=SI, fraction=p, items=tuple(items), manifest=manifest)


def build_mvi_mixture(
    family: InstructionFamily,
    p: float,
    spec: SplitSpec,
    max_pos: int = 2,
    max_neg: int = 2,
    include_explanations: bool = True,
    equal_data: bool = False,
    count_original: bool = True,
    broadcast: bool = False,
    setting: str = TASK_SPECIFIC,
    members: Sequence[TaskCard] | None = None,
) -> Mixture:
    """Training mixture over the original plus its variant instructions.

    Default mode serializes the same instance sample as SI, round-robin
    across the member cards, so item counts match SI exactly.  Equal-data
    mode keeps only ceil(n / V') instances, V' counting the original by
    default.  ``broadcast`` serializes every instance under every member
    instead (inflates the data; off by default).  ``members`` restricts the
    instruction set, for the per-variant contribution series.
    """
    if not family.variants:
        raise ValidationError(f"family {family.family_id}: MVI needs at least one variant")
    cards = tuple(members) if members is not None else family.members
    sample = list(_train_sample(family, p, spec))
    if equal_data:
        denom = len(cards) if count_original else max(1, len(cards) - 1)
        sample = sample[: math.ceil(len(sample) / denom)]

    items: list[MixtureItem] = []
    if broadcast:
        for card in cards:
            items.extend(_items_for(card, family.family_id, sample, max_pos, max_neg, include_explanations))
    else:
        for i, inst in enumerate(sample):
            card = cards[i % len(cards)]
            items.extend(_items_for(card, family.family_id, [inst], max_pos, max_neg, include_explanations))

    manifest = _manifest(
        setting, MVI, p, spec,
        max_pos=max_pos, max_neg=max_neg, equal_data=equal_data,
        count_original=count_original, broadcast=broadcast,
        instruction_set=[c.variant_index for c in cards],
    )
    manifest["families"] = {family.family_id: len(items)}
    return Mixture(setting=setting, regime=MVI, fraction=p, items=tuple(items), manifest=manifest)


def build_eval_mixture(
    family: InstructionFamily,
    spec: SplitSpec,
    max_pos: int = 2,
    max_neg: int = 2,
    include_explanations: bool = True,
    card: TaskCard | None = None,
) -> Mixture:
    """Evaluation mixture over the original card's test split.

    By default instances are serialized under the original instruction.
    ``card`` swaps in another member's wording or a perturbed card: the
    surface for variant-phrased and perturbed robustness evaluations.  The
    instance set is always the original's test split.
    """
    _, _, test = split_instances(family.original, spec)
    eval_card = card if card is not None else family.original
    items = _items_for(eval_card, family.family_id, test, max_pos, max_neg, include_explanations)
    manifest = _manifest(TASK_SPECIFIC, "EVAL", 1.0, spec, max_pos=max_pos, max_neg=max_neg,
                         wording_variant_index=eval_card.variant_index)
    manifest["families"] = {family.family_id: len(items)}
    return Mixture(setting=TASK_SPECIFIC, regime="EVAL", fraction=1.0, items=tuple(items), manifest=manifest)


def _map_jobs(fn: Callable, values: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(values) <= 1:
        return [fn(v) for v in values]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, values))


def _canonical_sort(items: Iterable[MixtureItem]) -> list[MixtureItem]:
    return sorted(items, key=lambda it: (it.family_id, it.instance_id, it.variant_index))


def build_multitask_mixture(
    families: Sequence[InstructionFamily],
    p: float,
    regime: str,
    spec: SplitSpec,
    include_explanations: bool = True,
    equal_data: bool = False,
    jobs: int = 1,
) -> Mixture:
    """Concatenate per-family mixtures (two positive and two negative
    examples per prompt), then apply one global seeded shuffle.

    Items are canonically sorted before the shuffle, so the result does not
    depend on per-family build order or worker count.
    """
    if not families:
        raise ValueError("need at least one family")

    def build(family: InstructionFamily) -> Mixture:
        if regime == SI:
            return build_si_mixture(family, p, spec, 2, 2, include_explanations, setting=MULTI_TASK)
        return build_mvi_mixture(family, p, spec, 2, 2, include_explanations,
                                 equal_data=equal_data, setting=MULTI_TASK)

    parts = _map_jobs(build, list(families), jobs)
    items = _canonical_sort(it for part in parts for it in part.items)
    rng_for(spec.seed, "shuffle:multi_task").shuffle(items)
    manifest = _manifest(MULTI_TASK, regime, p, spec, max_pos=2, max_neg=2, equal_data=equal_data)
    manifest["families"] = {
        fam.family_id: sum(1 for it in items if it.family_id == fam.family_id)
        for fam in families
    }
    return Mixture(setting=MULTI_TASK, regime=regime, fraction=p, items=tuple(items), manifest=manifest)


def build_crosstask_mixture(
    train_families: Sequence[InstructionFamily],
    task_frac: float,
    instance_frac: float,
    regime: str,
    spec: SplitSpec,
    eval_families: Sequence[InstructionFamily],
    include_explanations: bool = True,
    jobs: int = 1,
) -> tuple[Mixture, dict[str, Mixture]]:
    """Train on a sampled subset of tasks, evaluate on a disjoint task set.

    Task sampling uses its own derived seed, independent of instance
    sampling.  Evaluation sets are per-family test splits under the
    original instruction.
    """
    if not 0.0 < task_frac <= 1.0:
        raise ValueError(f"task fraction must be in (0, 1], got {task_frac}")
    train_ids = {f.family_id for f in train_families}
    overlap = sorted(train_ids & {f.family_id for f in eval_families})
    if overlap:
        raise ValidationError(f"families appear in both train and eval sets: {overlap}")

    ordered = sorted(train_families, key=lambda f: f.family_id)
    k = min(len(ordered), max(1, round_half_up(task_frac * len(ordered))))
    rng = rng_for(spec.seed, "crosstask:tasks")
    chosen = rng.sample(ordered, k)

    def build(family: InstructionFamily) -> Mixture:
        if regime == SI:
            return build_si_mixture(family, instance_frac, spec, 2, 2, include_explanations, setting=CROSS_TASK)
        return build_mvi_mixture(family, instance_frac, spec, 2, 2, include_explanations, setting=CROSS_TASK)

    parts = _map_jobs(build, chosen, jobs)
    items = _canonical_sort(it for part in parts for it in part.items)
    rng_for(spec.seed, "shuffle:cross_task").shuffle(items)
    manifest = _manifest(CROSS_TASK, regime, instance_frac, spec,
                         task_frac=task_frac, max_pos=2, max_neg=2)
    manifest["families"] = {f.family_id: sum(1 for it in items if it.family_id == f.family_id)
                            for f in sorted(chosen, key=lambda f: f.family_id)}
    train = Mixture(setting=CROSS_TASK, regime=regime, fraction=instance_frac,
                    items=tuple(items), manifest=manifest)

    eval_sets = {
        fam.family_id: build_eval_mixture(fam, spec, 2, 2, include_explanations)
        for fam in sorted(eval_families, key=lambda f: f.family_id)
    }
    return train, eval_sets


# ---------------------------------------------------------------------------
# File formats (JSON-lines items plus a manifest sidecar)
# ---------------------------------------------------------------------------


def serialize_mixture(mixture: Mixture) -> bytes:
    lines = [
        json.dumps(
            {
                "prompt": it.prompt,
                "references": list(it.references),
                "family_id": it.family_id,
                "variant_index": it.variant_index,
                "instance_id": it.instance_id,
            },
            ensure_ascii=False,
        )
        for it in mixture.items
    ]
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def serialize_manifest(mixture: Mixture) -> bytes:
    return (json.dumps(mixture.manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n").encode("utf-8")


def load_mixture(data: bytes, manifest: Mapping | None = None) -> Mixture:
    items = []
    for lineno, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"mixture line {lineno}: {exc.msg}") from exc
        items.append(
            MixtureItem(
                prompt=str(obj["prompt"]),
                references=tuple(str(r) for r in obj["references"]),
                family_id=str(obj["family_id"]),
                variant_index=int(obj["variant_index"]),
                instance_id=str(obj["instance_id"]),
            )
        )
    meta = dict(manifest or {})
    return Mixture(
        setting=meta.get("setting", TASK_SPECIFIC),
        regime=meta.get("regime", SI),
        fraction=float(meta.get("fraction", 1.0)),
        items=tuple(items),
        manifest=meta,
    )
