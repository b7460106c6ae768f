"""Instruction-task data model: parsing, validation and prompt serialization.

An instruction task bundles a natural-language definition, worked positive
and negative examples, and the actual instances to solve.  A family groups
one original task with the variant tasks that rephrase it.

File formats (UTF-8 JSON):

Task file::

    {
      "task_id": "task010_...", "name": "...", "category": "...",
      "definition": "...",
      "positive_examples": [{"input": "...", "output": "...", "explanation": "..."}],
      "negative_examples": [...],
      "instances": [{"id": "...", "input": "...", "output": ["gold", ...]}],
      "variant_index": 0,            // optional, default 0
      "example_order": "positives_first"  // optional presentation order
    }

Family file::

    {"family_id": "...", "members": [<task objects>]}
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from typing import Any

from .errors import ParseError, SchemaError, ValidationError

logger = logging.getLogger(__name__)

POSITIVES_FIRST = "positives_first"
NEGATIVES_FIRST = "negatives_first"
EXAMPLE_ORDERS = (POSITIVES_FIRST, NEGATIVES_FIRST)

_TASK_FIELDS = {
    "task_id",
    "name",
    "category",
    "definition",
    "positive_examples",
    "negative_examples",
    "instances",
    "variant_index",
    "example_order",
}


@dataclass(frozen=True, slots=True)
class ExampleCase:
    """A worked demonstration: input, expected output, optional explanation."""

    input: str
    output: str
    explanation: str = ""


@dataclass(frozen=True, slots=True)
class Instance:
    """An instance to solve, with one or more acceptable gold outputs."""

    id: str
    input: str
    references: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class TaskCard:
    """One instruction task: definition, examples and instances.

    ``variant_index`` 0 marks the original phrasing; variants count from 1.
    ``example_order`` controls only how example blocks are presented when a
    prompt is serialized; it never changes the stored example lists.
    """

    task_id: str
    name: str
    category: str
    definition: str
    positives: tuple[ExampleCase, ...] = ()
    negatives: tuple[ExampleCase, ...] = ()
    instances: tuple[Instance, ...] = ()
    variant_index: int = 0
    example_order: str = POSITIVES_FIRST

    def instance_ids(self) -> set[str]:
        return {inst.id for inst in self.instances}


@dataclass(frozen=True, slots=True)
class InstructionFamily:
    """An original task card plus its variant cards for the same task."""

    family_id: str
    original: TaskCard
    variants: tuple[TaskCard, ...] = ()

    @property
    def members(self) -> tuple[TaskCard, ...]:
        return (self.original,) + self.variants


@dataclass(frozen=True, slots=True)
class Violation:
    """One invariant violation found during validation."""

    variant_index: int | None
    field: str
    message: str

    def __str__(self) -> str:
        where = "family" if self.variant_index is None else f"variant {self.variant_index}"
        return f"{where}: {self.field}: {self.message}"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_card(card: TaskCard) -> list[Violation]:
    """Check every per-card invariant; returns violations, empty if valid."""
    out: list[Violation] = []
    vi = card.variant_index

    def bad(field_path: str, message: str) -> None:
        out.append(Violation(vi, field_path, message))

    if not card.task_id.strip():
        bad("task_id", "must be nonempty")
    if not card.definition.strip():
        bad("definition", "must be nonempty")
    if not card.category.strip():
        bad("category", "must be nonempty")
    if card.variant_index < 0:
        bad("variant_index", "must be >= 0")
    if card.example_order not in EXAMPLE_ORDERS:
        bad("example_order", f"must be one of {EXAMPLE_ORDERS}")

    for label, cases in (("positive_examples", card.positives), ("negative_examples", card.negatives)):
        for i, case in enumerate(cases):
            if not case.input:
                bad(f"{label}[{i}].input", "must be nonempty")
            if not case.output:
                bad(f"{label}[{i}].output", "must be nonempty")

    seen: set[str] = set()
    for i, inst in enumerate(card.instances):
        if not inst.id:
            bad(f"instances[{i}].id", "must be nonempty")
        elif inst.id in seen:
            bad(f"instances[{i}].id", f"duplicate instance id {inst.id!r}")
        else:
            seen.add(inst.id)
        if not inst.input:
            bad(f"instances[{i}].input", "must be nonempty")
        if not inst.references:
            bad(f"instances[{i}].output", "references must be nonempty")
    return out


def validate_family(family: InstructionFamily) -> list[Violation]:
    """Check family-level invariants plus every member card.

    Violations are data, not errors: a well-formed family yields ``[]``.
    """
    out: list[Violation] = []
    for card in family.members:
        out.extend(validate_card(card))

    if family.family_id != family.original.task_id:
        out.append(Violation(None, "family_id", "must equal the original's task_id"))
    if family.original.variant_index != 0:
        out.append(Violation(0, "variant_index", "original must have variant_index 0"))

    seen_idx: set[int] = set()
    for card in family.members:
        if card.variant_index in seen_idx:
            out.append(
                Violation(card.variant_index, "variant_index",
                          f"variant_index {card.variant_index} appears more than once")
            )
        seen_idx.add(card.variant_index)

    categories = {card.category for card in family.members}
    if len(categories) > 1:
        out.append(Violation(None, "category", f"members disagree on category: {sorted(categories)}"))
    return out


# ---------------------------------------------------------------------------
# Parsing and file serialization
# ---------------------------------------------------------------------------


def _require(mapping: dict[str, Any], field_name: str, context: str) -> Any:
    if field_name not in mapping:
        raise SchemaError(field_name, f"{context}: missing required field {field_name!r}")
    return mapping[field_name]


def _example_from_dict(obj: Any, context: str) -> ExampleCase:
    if not isinstance(obj, dict):
        raise SchemaError(context, f"{context}: expected an object")
    return ExampleCase(
        input=str(_require(obj, "input", context)),
        output=str(_require(obj, "output", context)),
        explanation=str(obj.get("explanation", "")),
    )


def _instance_from_dict(obj: Any, context: str) -> Instance:
    if not isinstance(obj, dict):
        raise SchemaError(context, f"{context}: expected an object")
    refs = _require(obj, "output", context)
    if isinstance(refs, str):
        refs = [refs]
    return Instance(
        id=str(_require(obj, "id", context)),
        input=str(_require(obj, "input", context)),
        references=tuple(str(r) for r in refs),
    )


def card_from_dict(obj: dict[str, Any]) -> TaskCard:
    """Build a TaskCard from a decoded task-file object (no invariant checks)."""
    task_id = str(_require(obj, "task_id", "task"))
    unknown = set(obj) - _TASK_FIELDS
    if unknown:
        logger.warning("task %s: ignoring unknown fields %s", task_id, sorted(unknown))
    return TaskCard(
        task_id=task_id,
        name=str(_require(obj, "name", "task")),
        category=str(_require(obj, "category", "task")),
        definition=str(_require(obj, "definition", "task")),
        positives=tuple(
            _example_from_dict(e, f"positive_examples[{i}]")
            for i, e in enumerate(_require(obj, "positive_examples", "task"))
        ),
        negatives=tuple(
            _example_from_dict(e, f"negative_examples[{i}]")
            for i, e in enumerate(_require(obj, "negative_examples", "task"))
        ),
        instances=tuple(
            _instance_from_dict(e, f"instances[{i}]")
            for i, e in enumerate(_require(obj, "instances", "task"))
        ),
        variant_index=int(obj.get("variant_index", 0)),
        example_order=str(obj.get("example_order", POSITIVES_FIRST)),
    )


def _decode_json(data: bytes) -> Any:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc.reason}", byte_offset=exc.start) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(f"malformed JSON: {exc.msg}", byte_offset=offset) from exc


def parse_task_file(data: bytes) -> TaskCard:
    """Parse a task file; the returned card satisfies every invariant.

    Raises ParseError on undecodable content, SchemaError when a required
    field is missing, and ValidationError when an invariant is violated
    (for example a duplicate instance id).
    """
    obj = _decode_json(data)
    if not isinstance(obj, dict):
        raise SchemaError("task", "task file must contain a JSON object")
    card = card_from_dict(obj)
    violations = validate_card(card)
    if violations:
        raise ValidationError("; ".join(str(v) for v in violations))
    return card


def parse_family_file(data: bytes, validate: bool = True) -> InstructionFamily:
    """Parse a family file (original plus variants).

    With ``validate=False`` the family is built as long as the structure is
    parseable, so that :func:`validate_family` can report violations as data.
    """
    obj = _decode_json(data)
    if not isinstance(obj, dict):
        raise SchemaError("family", "family file must contain a JSON object")
    family_id = str(_require(obj, "family_id", "family"))
    members_raw = _require(obj, "members", "family")
    if not isinstance(members_raw, list) or not members_raw:
        raise SchemaError("members", "family: members must be a nonempty array")
    cards = [card_from_dict(m) for m in members_raw]

    originals = [c for c in cards if c.variant_index == 0]
    if validate and len(originals) != 1:
        raise ValidationError(f"family {family_id}: expected exactly one member with variant_index 0, found {len(originals)}")
    original = originals[0] if originals else cards[0]
    variants = tuple(sorted((c for c in cards if c is not original), key=lambda c: c.variant_index))
    family = InstructionFamily(family_id=family_id, original=original, variants=variants)

    if validate:
        violations = validate_family(family)
        if violations:
            raise ValidationError("; ".join(str(v) for v in violations))
    return family


def _example_to_dict(case: ExampleCase) -> dict[str, str]:
    return {"input": case.input, "output": case.output, "explanation": case.explanation}


def card_to_dict(card: TaskCard) -> dict[str, Any]:
    return {
        "task_id": card.task_id,
        "name": card.name,
        "category": card.category,
        "definition": card.definition,
        "positive_examples": [_example_to_dict(e) for e in card.positives],
        "negative_examples": [_example_to_dict(e) for e in card.negatives],
        "instances": [
            {"id": i.id, "input": i.input, "output": list(i.references)} for i in card.instances
        ],
        "variant_index": card.variant_index,
        "example_order": card.example_order,
    }


def serialize_task_file(card: TaskCard) -> bytes:
    """Inverse of :func:`parse_task_file`: round-trips every valid card."""
    return (json.dumps(card_to_dict(card), ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def family_to_dict(family: InstructionFamily) -> dict[str, Any]:
    return {
        "family_id": family.family_id,
        "members": [card_to_dict(c) for c in family.members],
    }


def serialize_family_file(family: InstructionFamily) -> bytes:
    return (json.dumps(family_to_dict(family), ensure_ascii=False, indent=2) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Prompt serialization
# ---------------------------------------------------------------------------


def _render_example(label: str, number: int, case: ExampleCase, include_explanations: bool) -> str:
    lines = [f"{label} Example {number} -", f"Input: {case.input}", f"Output: {case.output}"]
    if include_explanations and case.explanation:
        lines.append(f"Explanation: {case.explanation}")
    return "\n".join(lines)


def serialize_prompt(
    card: TaskCard,
    instance: Instance,
    max_pos: int,
    max_neg: int,
    include_explanations: bool = True,
) -> str:
    """Render the full textual prompt for one instance.

    Pure function of its inputs: definition first, then up to ``max_pos``
    positive and ``max_neg`` negative examples (the first k of each list,
    in the card's presentation order), then the instance to complete.
    """
    if max_pos < 0 or max_neg < 0:
        raise ValueError("max_pos and max_neg must be >= 0")
    parts = [f"Definition: {card.definition}"]
    pos_block = [
        _render_example("Positive", i + 1, case, include_explanations)
        for i, case in enumerate(card.positives[:max_pos])
    ]
    neg_block = [
        _render_example("Negative", i + 1, case, include_explanations)
        for i, case in enumerate(card.negatives[:max_neg])
    ]
    if card.example_order == NEGATIVES_FIRST:
        parts.extend(neg_block)
        parts.extend(pos_block)
    else:
        parts.extend(pos_block)
        parts.extend(neg_block)
    parts.append(f"Now complete the following instance -\nInput: {instance.input}\nOutput:")
    return "\n\n".join(parts)


def with_example_order(card: TaskCard, order: str) -> TaskCard:
    if order not in EXAMPLE_ORDERS:
        raise ValueError(f"unknown example order {order!r}")
    return replace(card, example_order=order)
