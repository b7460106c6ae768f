"""Deterministic nearest-neighbor instruction follower.

A dependency-free stand-in for a fine-tuned model: memorize every training
prompt as a token-count vector, answer a query with the output of the
closest stored prompt by cosine similarity.  Because the full serialized
prompt is indexed, instruction wording genuinely matters: training on
variant phrasings changes which neighbors a rephrased query finds.

Similarity comparisons are exact integer arithmetic (cross-multiplied
squared cosines), so predictions are bit-identical across platforms and
ties resolve cleanly to the lowest instance id.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .errors import FitError
from .mixtures import Mixture
from .scoring import PredictionSet, ScoreReport, score_predictions, tokenize


@dataclass(frozen=True, slots=True)
class IndexEntry:
    counts: dict[str, int]
    norm_sq: int
    output: str
    instance_id: str


@dataclass(frozen=True, slots=True)
class RetrievalIndex:
    """Token-count vectors for every training prompt, sorted by instance id."""

    entries: tuple[IndexEntry, ...]
    vocabulary: dict[str, int]


def fit(mixture: Mixture) -> RetrievalIndex:
    """Index one entry per mixture item; the stored output is the first
    gold reference."""
    if not mixture.items:
        raise FitError("cannot fit on an empty mixture")
    entries = []
    vocabulary: dict[str, int] = {}
    for item in mixture.items:
        counts = dict(Counter(tokenize(item.prompt)))
        for token in counts:
            vocabulary.setdefault(token, len(vocabulary))
        entries.append(
            IndexEntry(
                counts=counts,
                norm_sq=sum(v * v for v in counts.values()),
                output=item.references[0],
                instance_id=item.instance_id,
            )
        )
    entries.sort(key=lambda e: e.instance_id)
    return RetrievalIndex(entries=tuple(entries), vocabulary=vocabulary)


def _dot(query: Counter, entry: IndexEntry) -> int:
    if len(query) > len(entry.counts):
        small, large = entry.counts, query
    else:
        small, large = query, entry.counts
    return sum(c * large[t] for t, c in small.items() if t in large)


def predict(index: RetrievalIndex, prompt: str) -> str:
    """Output of the entry with the highest token-count cosine.

    Ties (including an all-zero query) break to the entry with the
    lexicographically lowest instance id.  Comparison is done on squared
    cosines cross-multiplied into integers, so it is exact.
    """
    if not index.entries:
        raise FitError("index has no entries")
    query = Counter(tokenize(prompt))
    best = index.entries[0]
    best_dot = _dot(query, best)
    for entry in index.entries[1:]:
        dot = _dot(query, entry)
        # cos_e > cos_best  <=>  dot_e^2 * norm_best > dot_best^2 * norm_e
        if dot * dot * best.norm_sq > best_dot * best_dot * entry.norm_sq:
            best, best_dot = entry, dot
    return best.output


def predict_mixture(index: RetrievalIndex, eval_set: Mixture) -> PredictionSet:
    predictions = {item.instance_id: predict(index, item.prompt) for item in eval_set.items}
    return PredictionSet(
        predictions=predictions,
        metadata={"learner": "retrieval-nn", "entries": len(index.entries)},
    )


def run_experiment(train: Mixture, eval_set: Mixture) -> ScoreReport:
    """Fit on the training mixture, predict every evaluation prompt, score."""
    preds = predict_mixture(fit(train), eval_set)
    return score_predictions(preds, eval_set)
