"""Dataset-property metrics: semantic similarity, word dissimilarity,
length diversity and whole-dataset summary statistics.

The similarity backend is pluggable: a dependency-free lexical mode
(cosine over token-count vectors) and a vector mode that averages word
vectors loaded from a plain-text file.  Standard deviations throughout are
population SDs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientMembersError, SchemaError, SimilarityError
from .scoring import tokenize
from .tasks import InstructionFamily

LEXICAL = "lexical"
VECTOR = "vector"


@dataclass(frozen=True)
class SimilarityBackend:
    """Text-similarity scorer: ``lexical`` token counts or word ``vector`` means."""

    mode: str
    vectors: Mapping[str, np.ndarray] | None = None

    @classmethod
    def lexical(cls) -> "SimilarityBackend":
        return cls(mode=LEXICAL)

    @classmethod
    def from_vectors(cls, vectors: Mapping[str, Sequence[float]]) -> "SimilarityBackend":
        arrays = {tok: np.asarray(vec, dtype=float) for tok, vec in vectors.items()}
        dims = {a.shape for a in arrays.values()}
        if len(dims) > 1:
            raise SchemaError("vectors", f"inconsistent vector dimensions: {sorted(dims)}")
        if arrays and next(iter(dims)) == (0,):
            raise SchemaError("vectors", "vector dimension must be >= 1")
        return cls(mode=VECTOR, vectors=arrays)


def load_vector_file(data: bytes) -> SimilarityBackend:
    """Parse a word-vector file: one line per token, ``token v1 v2 ... vd``."""
    vectors: dict[str, list[float]] = {}
    for lineno, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 2:
            raise SchemaError("vectors", f"line {lineno}: expected 'token v1 ... vd'")
        try:
            vectors[parts[0]] = [float(x) for x in parts[1:]]
        except ValueError as exc:
            raise SchemaError("vectors", f"line {lineno}: non-numeric component") from exc
    return SimilarityBackend.from_vectors(vectors)


def _count_cosine(a_tokens: list[str], b_tokens: list[str]) -> float:
    ca, cb = Counter(a_tokens), Counter(b_tokens)
    dot = sum(ca[t] * cb[t] for t in ca.keys() & cb.keys())
    if dot == 0:
        return 0.0
    na = sum(v * v for v in ca.values())
    nb = sum(v * v for v in cb.values())
    return dot / math.sqrt(na * nb)


def _mean_vector(tokens: list[str], vectors: Mapping[str, np.ndarray]) -> np.ndarray | None:
    rows = [vectors[t] for t in tokens if t in vectors]
    if not rows:
        return None
    return np.mean(rows, axis=0)


def sts_score(a: str, b: str, backend: SimilarityBackend) -> float:
    """Semantic similarity of two texts in [0, 1]; symmetric.

    Vector mode: cosine of mean word vectors, rescaled from [-1, 1].
    Lexical mode: cosine of token-count vectors.
    """
    a_tokens, b_tokens = tokenize(a), tokenize(b)
    if backend.mode == LEXICAL:
        return _count_cosine(a_tokens, b_tokens)
    if backend.mode != VECTOR:
        raise ValueError(f"unknown backend mode {backend.mode!r}")
    if backend.vectors is None:
        raise SchemaError("vectors", "vector backend has no vectors loaded")
    va = _mean_vector(a_tokens, backend.vectors)
    vb = _mean_vector(b_tokens, backend.vectors)
    if va is None or vb is None:
        sides = [name for name, v in (("first", va), ("second", vb)) if v is None]
        raise SimilarityError(
            f"similarity undefined: {' and '.join(sides)} text fully out of vocabulary"
        )
    if np.array_equal(va, vb):
        return 1.0
    denom = math.sqrt(float(va @ va) * float(vb @ vb))
    if denom == 0.0:
        raise SimilarityError("similarity undefined: zero-magnitude mean vector")
    cos = float(va @ vb) / denom
    cos = max(-1.0, min(1.0, cos))
    return (cos + 1.0) / 2.0


def _pair_stats(values: Sequence[float]) -> tuple[float, float]:
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


def family_sts_stats(family: InstructionFamily, backend: SimilarityBackend) -> tuple[float, float]:
    """Mean and population SD of STS over all unordered member pairs."""
    members = family.members
    if len(members) < 2:
        raise InsufficientMembersError(
            f"family {family.family_id}: need >= 2 members, have {len(members)}"
        )
    scores = [
        sts_score(x.definition, y.definition, backend) for x, y in combinations(members, 2)
    ]
    return _pair_stats(scores)


def edit_distance(a: str, b: str) -> int:
    """Character-level Levenshtein distance with unit costs."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ch_a in enumerate(a, start=1):
        cur = [i]
        for j, ch_b in enumerate(b, start=1):
            cost = 0 if ch_a == ch_b else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def word_dissimilarity_stats(family: InstructionFamily) -> tuple[float, float]:
    """Mean and population SD of pairwise edit distances, normalized by the
    family's largest pairwise distance.  All-identical definitions give (0, 0).
    """
    members = family.members
    if len(members) < 2:
        raise InsufficientMembersError(
            f"family {family.family_id}: need >= 2 members, have {len(members)}"
        )
    distances = [
        edit_distance(x.definition, y.definition) for x, y in combinations(members, 2)
    ]
    highest = max(distances)
    if highest == 0:
        return 0.0, 0.0
    return _pair_stats([d / highest for d in distances])


def length_diversity(family: InstructionFamily) -> float:
    """Percentage spread of definition lengths, in whitespace tokens:
    100 * (max - min) / min."""
    lengths = [len(card.definition.split()) for card in family.members]
    lo, hi = min(lengths), max(lengths)
    if lo == 0:
        raise ValueError(f"family {family.family_id}: empty definition")
    return 100.0 * (hi - lo) / lo


@dataclass(frozen=True, slots=True)
class FamilyStats:
    """Per-family diversity measurements."""

    family_id: str
    sts_mean: float
    sts_sd: float
    dissim_mean: float
    dissim_sd: float
    length_diversity_pct: float

    def to_dict(self) -> dict:
        return {
            "family_id": self.family_id,
            "sts_mean": self.sts_mean,
            "sts_sd": self.sts_sd,
            "dissim_mean": self.dissim_mean,
            "dissim_sd": self.dissim_sd,
            "length_diversity_pct": self.length_diversity_pct,
        }


@dataclass(frozen=True, slots=True)
class DatasetStats:
    """Whole-dataset averages over all member cards."""

    avg_variants_per_task: float
    avg_instances_per_task: float
    avg_positive_examples: float
    avg_negative_examples: float

    def to_dict(self) -> dict:
        return {
            "avg_variants_per_task": self.avg_variants_per_task,
            "avg_instances_per_task": self.avg_instances_per_task,
            "avg_positive_examples": self.avg_positive_examples,
            "avg_negative_examples": self.avg_negative_examples,
        }


def family_stats(family: InstructionFamily, backend: SimilarityBackend) -> FamilyStats:
    sts_mean, sts_sd = family_sts_stats(family, backend)
    dis_mean, dis_sd = word_dissimilarity_stats(family)
    return FamilyStats(
        family_id=family.family_id,
        sts_mean=sts_mean,
        sts_sd=sts_sd,
        dissim_mean=dis_mean,
        dissim_sd=dis_sd,
        length_diversity_pct=length_diversity(family),
    )


def dataset_statistics(families: Iterable[InstructionFamily]) -> DatasetStats:
    """Averages over a collection of families: variants per family, and
    instances / positives / negatives per member card."""
    families = list(families)
    if not families:
        raise ValueError("need at least one family")
    cards = [card for fam in families for card in fam.members]
    return DatasetStats(
        avg_variants_per_task=sum(len(f.variants) for f in families) / len(families),
        avg_instances_per_task=sum(len(c.instances) for c in cards) / len(cards),
        avg_positive_examples=sum(len(c.positives) for c in cards) / len(cards),
        avg_negative_examples=sum(len(c.negatives) for c in cards) / len(cards),
    )
