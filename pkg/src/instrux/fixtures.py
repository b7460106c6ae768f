"""Access to the data files shipped with the package.

``families/`` holds the eight-family fixture with per-family variant
counts {8, 8, 8, 8, 8, 8, 3, 5}; ``robustness/`` the two-task rig whose
nearest-neighbor outcomes are hand-enumerable; ``aug/`` an original card
plus lexicon for variant generation; ``curves/`` a published SI
performance curve; ``vectors/`` a small word-vector table.
"""

from __future__ import annotations

from pathlib import Path

from .tasks import InstructionFamily, TaskCard, parse_family_file, parse_task_file

FAMILY_IDS = (
    "task010_winogrande_answer_generation",
    "task011_winogrande_question_modification_object",
    "task012_winogrande_question_modification_person",
    "task017_qasc_question_generation",
    "task018_qasc_answer_generation",
    "task020_essential_terms_answering_incomplete_questions",
    "task028_multirc_correct_answer_single_sentence",
    "task058_babi_t1_single_supporting_fact_answer_generation",
)


def fixtures_root() -> Path:
    return Path(__file__).parent / "fixtures"


def fixture_path(*parts: str) -> Path:
    return fixtures_root().joinpath(*parts)


def load_family(family_id: str) -> InstructionFamily:
    return parse_family_file(fixture_path("families", f"{family_id}.json").read_bytes())


def load_all_families() -> list[InstructionFamily]:
    return [load_family(fid) for fid in FAMILY_IDS]


def load_task(*parts: str) -> TaskCard:
    return parse_task_file(fixture_path(*parts).read_bytes())
