"""Variant generation: seeded synonym substitution over definitions plus
instance resampling from a leftover pool.

A lexicon maps lowercase tokens to synonym lists (file format: one line
``token<TAB>syn1,syn2,...``).  Generated variants must pass a semantic
guard: STS against the original definition at or above a configurable
threshold, retried with fresh derived seeds before being dropped.
"""

from __future__ import annotations

import logging
import math
import random
import re
import string
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .errors import GenerationError, SchemaError, ValidationError
from .metrics import SimilarityBackend, sts_score
from .seeding import derive_seed
from .tasks import Instance, InstructionFamily, TaskCard

logger = logging.getLogger(__name__)

_PUNCT = string.punctuation
_WS_SPLIT = re.compile(r"(\s+)")

MAX_GUARD_ATTEMPTS = 16


@dataclass(frozen=True)
class Lexicon:
    """Synonym table keyed by lowercase token."""

    entries: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        for token, synonyms in self.entries.items():
            if not synonyms:
                raise SchemaError("lexicon", f"token {token!r} has no synonyms")
            if token in synonyms:
                raise SchemaError("lexicon", f"token {token!r} maps to itself")

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_pairs(cls, pairs: Mapping[str, Sequence[str]]) -> "Lexicon":
        return cls({k.lower(): tuple(v) for k, v in pairs.items()})


def load_lexicon(data: bytes) -> Lexicon:
    """Parse a lexicon file: ``token<TAB>syn1,syn2,...`` per line."""
    entries: dict[str, tuple[str, ...]] = {}
    for lineno, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        if "\t" not in line:
            raise SchemaError("lexicon", f"line {lineno}: expected 'token<TAB>synonyms'")
        token, _, rest = line.partition("\t")
        synonyms = tuple(s.strip() for s in rest.split(",") if s.strip())
        if not synonyms:
            raise SchemaError("lexicon", f"line {lineno}: no synonyms for {token!r}")
        entries[token.strip().lower()] = synonyms
    return Lexicon(entries)


@dataclass(frozen=True, slots=True)
class AugmentConfig:
    """Knobs for variant generation."""

    substitution_rate: float
    num_variants: int
    seed: int
    min_similarity: float = 0.85

    def __post_init__(self):
        if not 0.0 <= self.substitution_rate <= 1.0:
            raise ValueError("substitution_rate must be in [0, 1]")
        if not 0.0 <= self.min_similarity <= 1.0:
            raise ValueError("min_similarity must be in [0, 1]")
        if self.num_variants < 1:
            raise ValueError("num_variants must be >= 1")


def _split_token(raw: str) -> tuple[str, str, str]:
    """Split a token into (leading punctuation, core, trailing punctuation)."""
    core = raw.strip(_PUNCT)
    if not core:
        return raw, "", ""
    start = raw.index(core[0])
    return raw[:start], core, raw[start + len(core):]


def synonym_substitute(definition: str, lexicon: Lexicon, rate: float, seed: int) -> str:
    """Replace floor(rate * eligible) lexicon-covered tokens with synonyms.

    Deterministic given the seed.  Surrounding punctuation and all
    whitespace are preserved byte for byte; a replacement keeps the
    original token's leading capitalization.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be in [0, 1]")
    chunks = _WS_SPLIT.split(definition)
    eligible: list[int] = []
    for idx, chunk in enumerate(chunks):
        if not chunk or chunk.isspace():
            continue
        _, core, _ = _split_token(chunk)
        if core and core.lower() in lexicon:
            eligible.append(idx)

    n_replace = math.floor(rate * len(eligible))
    if n_replace == 0:
        return definition

    rng = random.Random(seed)
    chosen = sorted(rng.sample(eligible, n_replace))
    for idx in chosen:
        prefix, core, suffix = _split_token(chunks[idx])
        synonym = rng.choice(lexicon.entries[core.lower()])
        if core[0].isupper():
            synonym = synonym[0].upper() + synonym[1:]
        chunks[idx] = prefix + synonym + suffix
    return "".join(chunks)


def resample_instances(
    original: TaskCard, pool: Sequence[Instance], count: int, seed: int
) -> tuple[Instance, ...]:
    """Sample min(count, len(pool)) pool instances without replacement.

    The pool must not share instance ids with the original card.
    """
    overlap = sorted({p.id for p in pool} & original.instance_ids())
    if overlap:
        raise ValidationError(
            f"pool instance ids overlap the original card: {overlap}"
        )
    rng = random.Random(seed)
    k = min(count, len(pool))
    return tuple(rng.sample(list(pool), k))


def generate_variants(
    original: TaskCard,
    lexicon: Lexicon,
    pool: Sequence[Instance],
    config: AugmentConfig,
    similarity: SimilarityBackend,
) -> InstructionFamily:
    """Build an instruction family from one original card.

    Each variant's definition is a synonym rewrite that must score at least
    ``config.min_similarity`` against the original; failing rewrites are
    retried with fresh derived seeds up to MAX_GUARD_ATTEMPTS times and then
    dropped with a warning.  With a pool, the variants consume disjoint
    chunks of one seeded pool shuffle, so no instance id appears in two
    members; a variant whose chunk is empty (pool exhausted) copies the
    original's instances instead.
    """
    shuffled_pool = resample_instances(
        original, pool, len(pool), derive_seed(config.seed, "pool-order")
    )
    pool_cursor = 0
    variants: list[TaskCard] = []
    best_similarity = 0.0
    for k in range(1, config.num_variants + 1):
        accepted = None
        for attempt in range(MAX_GUARD_ATTEMPTS):
            sub_seed = derive_seed(config.seed, f"variant:{k}:attempt:{attempt}")
            definition = synonym_substitute(
                original.definition, lexicon, config.substitution_rate, sub_seed
            )
            score = sts_score(original.definition, definition, similarity)
            best_similarity = max(best_similarity, score)
            if score >= config.min_similarity:
                accepted = definition
                break
        if accepted is None:
            logger.warning(
                "task %s: variant %d dropped after %d attempts (best similarity %.4f < %.4f)",
                original.task_id, k, MAX_GUARD_ATTEMPTS, best_similarity, config.min_similarity,
            )
            continue
        chunk = shuffled_pool[pool_cursor: pool_cursor + len(original.instances)]
        pool_cursor += len(chunk)
        instances = chunk if chunk else original.instances
        variants.append(
            replace(original, definition=accepted, instances=instances, variant_index=k)
        )

    if not variants:
        raise GenerationError(
            f"task {original.task_id}: no variant passed the semantic guard "
            f"(best similarity {best_similarity:.4f}, threshold {config.min_similarity})"
        )
    return InstructionFamily(
        family_id=original.task_id, original=original, variants=tuple(variants)
    )
