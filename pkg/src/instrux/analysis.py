"""Instruction-equivalence interpolation, perturbation suites and
per-variant contribution series.

The equivalence question: how many extra training instances is one
additional instruction variant worth?  Answered by inverting the SI
performance curve at the MVI score and spreading the instance difference
over the variant count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .errors import CoverageError, ParseError
from .mixtures import Mixture, SplitSpec, build_mvi_mixture
from .scoring import ScoreReport
from .tasks import POSITIVES_FIRST, InstructionFamily, TaskCard

P1 = "p1"  # remove the task definition
P2 = "p2"  # present positive examples before negative ones
P3 = "p3"  # remove all positive and negative examples
PERTURBATION_KINDS = (P1, P2, P3)

REMOVED_DEFINITION_MARKER = "[definition removed]"


@dataclass(frozen=True, slots=True)
class CurvePoint:
    fraction: float
    score: float


@dataclass(frozen=True, slots=True)
class PerformanceCurve:
    """(instance-fraction, score) knots with strictly increasing fractions."""

    points: tuple[CurvePoint, ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("curve needs at least 2 points")
        fracs = [p.fraction for p in self.points]
        if any(b <= a for a, b in zip(fracs, fracs[1:])):
            raise ValueError("curve fractions must be strictly increasing")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "PerformanceCurve":
        return cls(tuple(CurvePoint(f, s) for f, s in pairs))

    def scores(self) -> list[float]:
        return [p.score for p in self.points]


@dataclass(frozen=True, slots=True)
class Saturation:
    """Marker returned when a target score exceeds the curve maximum."""

    max_fraction: float
    max_score: float

    def __str__(self) -> str:
        return f">{self.max_fraction:g} (curve max {self.max_score:g})"


def load_curve(data: bytes) -> PerformanceCurve:
    """Parse a curve file: JSON array of {"fraction": ..., "score": ...}."""
    try:
        raw = json.loads(data.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"curve file: {exc.msg}") from exc
    if not isinstance(raw, list):
        raise ParseError("curve file must contain a JSON array")
    return PerformanceCurve.from_pairs(
        (float(p["fraction"]), float(p["score"])) for p in raw
    )


def _envelope(curve: PerformanceCurve) -> PerformanceCurve:
    best = float("-inf")
    points = []
    for p in curve.points:
        best = max(best, p.score)
        points.append(CurvePoint(p.fraction, best))
    return PerformanceCurve(tuple(points))


def interpolate_fraction(
    curve: PerformanceCurve, target: float, monotone_envelope: bool = False
) -> float | Saturation:
    """Piecewise-linear inverse of the performance curve.

    Scans segments left to right and returns the first fraction whose
    interpolated score equals the target.  A flat segment at the target
    resolves to its left endpoint.  Targets below the curve minimum clip to
    the smallest fraction; targets above the maximum return a
    :class:`Saturation` marker.  ``monotone_envelope`` inverts the running
    maximum of the curve instead of the raw scores.
    """
    if monotone_envelope:
        curve = _envelope(curve)
    scores = curve.scores()
    if target > max(scores):
        return Saturation(max_fraction=curve.points[-1].fraction, max_score=max(scores))
    if target < min(scores):
        return curve.points[0].fraction
    for left, right in zip(curve.points, curve.points[1:]):
        if target == left.score:
            return left.fraction
        lo, hi = sorted((left.score, right.score))
        if lo <= target <= hi and left.score != right.score:
            span = (target - left.score) / (right.score - left.score)
            return left.fraction + span * (right.fraction - left.fraction)
    return curve.points[-1].fraction  # exact hit on the final knot


@dataclass(frozen=True, slots=True)
class EquivalenceInput:
    """Inputs for the instances-per-instruction estimate."""

    si_curve: PerformanceCurve
    mvi_score: float
    base_fraction: float
    total_instances: int
    num_variants: int

    def __post_init__(self):
        if self.total_instances < 1:
            raise ValueError("total_instances must be >= 1")
        if self.num_variants < 1:
            raise ValueError("num_variants must be >= 1")
        fracs = [p.fraction for p in self.si_curve.points]
        if not min(fracs) <= self.base_fraction <= max(fracs):
            raise ValueError(
                f"base fraction {self.base_fraction} outside curve range [{min(fracs)}, {max(fracs)}]"
            )


def instruction_worth(
    inp: EquivalenceInput, monotone_envelope: bool = False
) -> float | Saturation:
    """Estimated data samples one additional instruction substitutes for.

    worth = ((inverse(si_curve, mvi_score) - base_fraction) * N) / V.
    Negative when MVI underperforms the SI curve at the base fraction;
    saturation propagates when the MVI score exceeds the curve maximum.
    """
    matched = interpolate_fraction(inp.si_curve, inp.mvi_score, monotone_envelope)
    if isinstance(matched, Saturation):
        return matched
    return ((matched - inp.base_fraction) * inp.total_instances) / inp.num_variants


def average_worth(worths: Sequence[float | Saturation]) -> float:
    """Average per-setting worths; saturated entries are not averageable."""
    if not worths:
        raise ValueError("need at least one worth value")
    saturated = [w for w in worths if isinstance(w, Saturation)]
    if saturated:
        raise ValueError("cannot average saturated worth estimates")
    return sum(worths) / len(worths)


def perturb(card: TaskCard, kind: str) -> TaskCard:
    """Apply one of the three evaluation-time instruction perturbations.

    p1 replaces the definition with a marker; p2 forces positives-first
    presentation order; p3 empties both example lists.  Instances and
    references are never touched.
    """
    if kind == P1:
        return replace(card, definition=REMOVED_DEFINITION_MARKER)
    if kind == P2:
        return replace(card, example_order=POSITIVES_FIRST)
    if kind == P3:
        return replace(card, positives=(), negatives=())
    raise ValueError(f"unknown perturbation kind {kind!r}; expected one of {PERTURBATION_KINDS}")


@dataclass(frozen=True, slots=True)
class GapReport:
    """Per-family and overall score drops between two evaluations."""

    per_family: dict[str, float]
    overall: float

    def to_dict(self) -> dict:
        return {"per_family": dict(sorted(self.per_family.items())), "overall": self.overall}


def robustness_gap(clean_report: ScoreReport, perturbed_report: ScoreReport) -> GapReport:
    """Clean-minus-perturbed deltas; both reports must cover the same families."""
    clean_ids = set(clean_report.per_family)
    pert_ids = set(perturbed_report.per_family)
    if clean_ids != pert_ids:
        missing = sorted(clean_ids ^ pert_ids)
        raise CoverageError(f"reports cover different families: {missing}")
    per_family = {
        fid: clean_report.per_family[fid] - perturbed_report.per_family[fid]
        for fid in clean_ids
    }
    return GapReport(per_family=per_family, overall=clean_report.macro - perturbed_report.macro)


def variant_contribution_series(
    family: InstructionFamily,
    p: float,
    spec: SplitSpec,
    max_pos: int = 2,
    max_neg: int = 2,
    include_explanations: bool = True,
) -> list[tuple[str, Mixture]]:
    """MVI_1 .. MVI_k plus MVI_All, adding one variant at a time.

    Every mixture shares the same seed and instance sample, so only the
    instruction set varies; MVI_All uses every variant (hence it matches
    MVI_k item for item).
    """
    if not family.variants:
        raise ValueError(f"family {family.family_id}: needs at least one variant")
    ordered = sorted(family.variants, key=lambda c: c.variant_index)
    series: list[tuple[str, Mixture]] = []
    for j in range(1, len(ordered) + 1):
        label = f"MVI_{j}"
        mix = build_mvi_mixture(
            family, p, spec, max_pos, max_neg, include_explanations,
            members=(family.original, *ordered[:j]),
        )
        mix.manifest["series_label"] = label
        series.append((label, mix))
    mix_all = build_mvi_mixture(
        family, p, spec, max_pos, max_neg, include_explanations,
        members=(family.original, *ordered),
    )
    mix_all.manifest["series_label"] = "MVI_All"
    series.append(("MVI_All", mix_all))
    return series
