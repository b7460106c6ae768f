"""Rouge-L scoring of predictions against an evaluation mixture.

Rouge-L here is the F1 form: for each reference, precision and recall are
LCS length over the prediction / reference token counts, and the instance
score is the maximum F1 over its references.  Scores live in [0, 1];
reports also carry x100 values to ease comparison with published tables.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ParseError

_PUNCT = string.punctuation


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip surrounding punctuation.

    Interior punctuation (as in "don't") is kept; tokens that strip down
    to nothing are dropped.
    """
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_PUNCT)
        if tok:
            out.append(tok)
    return out


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length, O(len(a) * len(b)) two-row DP."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(prediction: str, references: Sequence[str]) -> float:
    """Max-over-references Rouge-L F1 in [0, 1].

    An empty prediction or reference side contributes 0 for that pair.
    """
    if not references:
        raise ValueError("references must be nonempty")
    pred_tokens = tokenize(prediction)
    best = 0.0
    for ref in references:
        ref_tokens = tokenize(ref)
        if not pred_tokens or not ref_tokens:
            continue
        lcs = lcs_length(pred_tokens, ref_tokens)
        if lcs == 0:
            continue
        p = lcs / len(pred_tokens)
        r = lcs / len(ref_tokens)
        best = max(best, 2 * p * r / (p + r))
    return best


@dataclass(frozen=True, slots=True)
class PredictionSet:
    """Model outputs keyed by instance id, with free-form provenance."""

    predictions: dict[str, str]
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class InstanceScore:
    instance_id: str
    family_id: str
    score: float


@dataclass(frozen=True, slots=True)
class ScoreReport:
    """Per-instance, per-family and overall Rouge-L results.

    ``macro`` is the unweighted mean over per-family means; ``micro`` the
    mean over all instances.  Instances with no prediction score 0 and are
    listed under ``missing``; prediction ids absent from the evaluation set
    are listed under ``unmatched``.
    """

    per_instance: tuple[InstanceScore, ...]
    per_family: dict[str, float]
    macro: float
    micro: float
    missing: tuple[str, ...] = ()
    unmatched: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "per_instance": [
                {"instance_id": s.instance_id, "family_id": s.family_id, "score": s.score}
                for s in self.per_instance
            ],
            "per_family": dict(sorted(self.per_family.items())),
            "macro": self.macro,
            "micro": self.micro,
            "macro_x100": self.macro * 100.0,
            "micro_x100": self.micro * 100.0,
            "missing": list(self.missing),
            "unmatched": list(self.unmatched),
        }


def score_predictions(preds: PredictionSet, eval_set) -> ScoreReport:
    """Score a prediction set against an evaluation mixture.

    Coverage problems are reported, never raised: missing predictions score
    0, surplus prediction ids are echoed back under ``unmatched``.
    """
    predictions = preds.predictions
    per_instance: list[InstanceScore] = []
    missing: list[str] = []
    seen_ids: set[str] = set()
    by_family: dict[str, list[float]] = {}

    for item in eval_set.items:
        seen_ids.add(item.instance_id)
        predicted = predictions.get(item.instance_id)
        if predicted is None:
            missing.append(item.instance_id)
            value = 0.0
        else:
            value = rouge_l(predicted, item.references)
        per_instance.append(InstanceScore(item.instance_id, item.family_id, value))
        by_family.setdefault(item.family_id, []).append(value)

    unmatched = sorted(set(predictions) - seen_ids)
    per_family = {fid: sum(vals) / len(vals) for fid, vals in by_family.items()}
    macro = sum(per_family.values()) / len(per_family) if per_family else 0.0
    micro = (
        sum(s.score for s in per_instance) / len(per_instance) if per_instance else 0.0
    )
    return ScoreReport(
        per_instance=tuple(per_instance),
        per_family=per_family,
        macro=macro,
        micro=micro,
        missing=tuple(missing),
        unmatched=tuple(unmatched),
    )


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def load_predictions(data: bytes, metadata: Mapping | None = None) -> PredictionSet:
    """Read a JSON-lines prediction file: {"id": ..., "prediction": ...}."""
    predictions: dict[str, str] = {}
    for lineno, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"predictions line {lineno}: {exc.msg}") from exc
        predictions[str(obj["id"])] = str(obj["prediction"])
    return PredictionSet(predictions=predictions, metadata=dict(metadata or {}))


def serialize_predictions(preds: PredictionSet) -> bytes:
    lines = [
        json.dumps({"id": k, "prediction": v}, ensure_ascii=False)
        for k, v in sorted(preds.predictions.items())
    ]
    return ("\n".join(lines) + "\n").encode("utf-8")


def serialize_report(report: ScoreReport) -> bytes:
    return (json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n").encode("utf-8")


def load_report(data: bytes) -> ScoreReport:
    obj = json.loads(data.decode("utf-8"))
    return ScoreReport(
        per_instance=tuple(
            InstanceScore(d["instance_id"], d["family_id"], float(d["score"]))
            for d in obj["per_instance"]
        ),
        per_family={k: float(v) for k, v in obj["per_family"].items()},
        macro=float(obj["macro"]),
        micro=float(obj["micro"]),
        missing=tuple(obj.get("missing", ())),
        unmatched=tuple(obj.get("unmatched", ())),
    )
