import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from instrux.tasks import ExampleCase, Instance, InstructionFamily, TaskCard


def make_instances(n: int, prefix: str = "inst") -> tuple[Instance, ...]:
    return tuple(
        Instance(id=f"{prefix}-{i:03d}", input=f"input text {prefix} {i}", references=(f"answer {i}",))
        for i in range(1, n + 1)
    )


def make_card(
    task_id: str = "task900_demo",
    definition: str = "Answer the question using the given text.",
    n_instances: int = 12,
    n_pos: int = 3,
    n_neg: int = 2,
    variant_index: int = 0,
    instances: tuple[Instance, ...] | None = None,
    **overrides,
) -> TaskCard:
    positives = tuple(
        ExampleCase(input=f"positive input {i}", output=f"positive output {i}",
                    explanation=f"why example {i} is right")
        for i in range(1, n_pos + 1)
    )
    negatives = tuple(
        ExampleCase(input=f"negative input {i}", output=f"negative output {i}",
                    explanation=f"why example {i} is wrong")
        for i in range(1, n_neg + 1)
    )
    fields = dict(
        task_id=task_id,
        name="demo_task",
        category="Answer Generation",
        definition=definition,
        positives=positives,
        negatives=negatives,
        instances=instances if instances is not None else make_instances(n_instances),
        variant_index=variant_index,
    )
    fields.update(overrides)
    return TaskCard(**fields)


def make_family(
    variant_definitions: tuple[str, ...] = ("first phrasing of the task", "second phrasing of the task"),
    task_id: str = "task900_demo",
    n_instances: int = 12,
    **card_overrides,
) -> InstructionFamily:
    original = make_card(task_id=task_id, definition=variant_definitions[0],
                         n_instances=n_instances, **card_overrides)
    variants = tuple(
        make_card(task_id=task_id, definition=d, n_instances=n_instances,
                  variant_index=i, instances=original.instances, **card_overrides)
        for i, d in enumerate(variant_definitions[1:], start=1)
    )
    return InstructionFamily(family_id=task_id, original=original, variants=variants)


@pytest.fixture
def demo_family() -> InstructionFamily:
    return make_family()
