"""Command-line interface.

Subcommands: validate, augment, stats, mix, score, worth, perturb,
contribute, run.  Every run writes a manifest (argument echo, resolved
seed, tool version) beside its outputs, and identical invocations produce
byte-identical files.  Exit codes: 0 success, 1 validation findings,
2 errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from . import analysis, augment, baseline, metrics, mixtures, scoring, tasks
from .errors import InstruxError
from .seeding import DEFAULT_SEED

SETTINGS = {"ts": mixtures.TASK_SPECIFIC, "mt": mixtures.MULTI_TASK, "ct": mixtures.CROSS_TASK}
REGIMES = {"si": mixtures.SI, "mvi": mixtures.MVI}


def parse_fraction(text: str) -> float:
    """Accept 0-1 fractions or 0-100 percentages with a % suffix."""
    text = text.strip()
    if text.endswith("%"):
        return float(text[:-1]) / 100.0
    value = float(text)
    if value > 1.0:
        raise ValueError(f"bare fraction {text!r} must be <= 1 (use a % suffix for percentages)")
    return value


def resolve_seed(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("INSTRUX_SEED")
    if env is not None:
        return int(env)
    return DEFAULT_SEED


def _write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _manifest_path(anchor: Path) -> Path:
    if anchor.suffix:
        return anchor.with_name(anchor.name + ".manifest.json")
    return anchor / "manifest.json"


_MANIFEST_EXCLUDED = ("func", "jobs", "verbose")  # worker count and log level never shape outputs


def run_info(args: argparse.Namespace, seed: int) -> dict:
    echo = {k: str(v) for k, v in sorted(vars(args).items())
            if k not in _MANIFEST_EXCLUDED and v is not None}
    return {
        "tool": "instrux",
        "version": __version__,
        "command": args.command,
        "seed": seed,
        "args": echo,
    }


def write_run_manifest(anchor: Path, args: argparse.Namespace, seed: int, outputs: list[str]) -> None:
    payload = run_info(args, seed)
    payload["outputs"] = sorted(outputs)
    _write(_manifest_path(anchor), (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8"))


def _load_family(path: Path) -> tasks.InstructionFamily:
    return tasks.parse_family_file(path.read_bytes())


def _load_families(paths: Sequence[str]) -> list[tasks.InstructionFamily]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.glob("*.json")))
        else:
            files.append(p)
    if not files:
        raise InstruxError(f"no family files found under {list(paths)}")
    return [_load_family(f) for f in files]


def _backend(vectors: str | None) -> metrics.SimilarityBackend:
    if vectors:
        return metrics.load_vector_file(Path(vectors).read_bytes())
    return metrics.SimilarityBackend.lexical()


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    family = tasks.parse_family_file(Path(args.family).read_bytes(), validate=False)
    violations = tasks.validate_family(family)
    for v in violations:
        print(str(v))
    if args.out:
        out = Path(args.out)
        payload = {
            "family_id": family.family_id,
            "violations": [
                {"variant_index": v.variant_index, "field": v.field, "message": v.message}
                for v in violations
            ],
        }
        _write(out, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8"))
        write_run_manifest(out, args, resolve_seed(args.seed), [out.name])
    print(f"{len(violations)} violation(s) in family {family.family_id}")
    return 1 if violations else 0


def _load_pool(path: str | None) -> list[tasks.Instance]:
    if not path:
        return []
    raw = json.loads(Path(path).read_bytes().decode("utf-8"))
    if isinstance(raw, dict):
        raw = raw.get("instances", [])
    out = []
    for obj in raw:
        refs = obj["output"]
        if isinstance(refs, str):
            refs = [refs]
        out.append(tasks.Instance(id=str(obj["id"]), input=str(obj["input"]),
                                  references=tuple(str(r) for r in refs)))
    return out


def cmd_augment(args: argparse.Namespace) -> int:
    seed = resolve_seed(args.seed)
    original = tasks.parse_task_file(Path(args.task).read_bytes())
    lexicon = augment.load_lexicon(Path(args.lexicon).read_bytes())
    config = augment.AugmentConfig(
        substitution_rate=parse_fraction(args.rate),
        num_variants=args.variants,
        seed=seed,
        min_similarity=args.min_sim,
    )
    family = augment.generate_variants(
        original, lexicon, _load_pool(args.pool), config, _backend(args.vectors)
    )
    out = Path(args.out)
    _write(out, tasks.serialize_family_file(family))
    write_run_manifest(out, args, seed, [out.name])
    print(f"wrote family {family.family_id} with {len(family.variants)} variant(s) to {out}")
    return 0


def _stats_tsv(rows: list[metrics.FamilyStats]) -> bytes:
    header = "family_id\tsts_mean\tsts_sd\tdissim_mean\tdissim_sd\tlength_diversity_pct"
    lines = [header]
    for s in rows:
        lines.append(
            f"{s.family_id}\t{s.sts_mean:.6f}\t{s.sts_sd:.6f}"
            f"\t{s.dissim_mean:.6f}\t{s.dissim_sd:.6f}\t{s.length_diversity_pct:.6f}"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def cmd_stats(args: argparse.Namespace) -> int:
    families = _load_families(args.families)
    backend = _backend(args.vectors)
    rows = [metrics.family_stats(f, backend) for f in families]
    dataset = metrics.dataset_statistics(families)
    out = Path(args.out)
    payload = {
        "families": [r.to_dict() for r in rows],
        "dataset": dataset.to_dict(),
        "backend": backend.mode,
    }
    _write(out, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    tsv_path = out.with_suffix(".tsv")
    _write(tsv_path, _stats_tsv(rows))
    outputs = [out.name, tsv_path.name]
    if args.plots:
        from . import figures

        written = figures.render_family_stats(rows, Path(args.plots))
        outputs.extend(p.name for p in written)
    write_run_manifest(out, args, resolve_seed(args.seed), outputs)
    print(f"stats over {len(rows)} families -> {out}")
    return 0


def _eval_card(family: tasks.InstructionFamily, args: argparse.Namespace) -> tasks.TaskCard | None:
    if getattr(args, "eval_card", None):
        return tasks.parse_task_file(Path(args.eval_card).read_bytes())
    wording = getattr(args, "eval_wording", 0) or 0
    if wording == 0:
        return None
    for card in family.members:
        if card.variant_index == wording:
            return card
    raise InstruxError(f"family {family.family_id} has no member with variant_index {wording}")


def cmd_mix(args: argparse.Namespace) -> int:
    seed = resolve_seed(args.seed)
    spec = mixtures.SplitSpec(seed=seed)
    setting = SETTINGS[args.setting]
    regime = REGIMES[args.regime]
    p = parse_fraction(args.frac)
    include_expl = not args.no_explanations
    if not args.train_out and not args.eval_out:
        raise InstruxError("nothing to do: pass --train-out and/or --eval-out")

    outputs: list[str] = []
    info = run_info(args, seed)

    def emit(mix: mixtures.Mixture, path: Path) -> None:
        # the mixture sidecar doubles as the run manifest for this output
        mix.manifest["run"] = info
        _write(path, mixtures.serialize_mixture(mix))
        _write(path.with_name(path.name + ".manifest.json"), mixtures.serialize_manifest(mix))
        outputs.extend([path.name, path.name + ".manifest.json"])

    if setting == mixtures.TASK_SPECIFIC:
        family = _load_family(Path(args.family))
        if args.train_out:
            if regime == mixtures.SI:
                mix = mixtures.build_si_mixture(family, p, spec, args.max_pos, args.max_neg, include_expl)
            else:
                mix = mixtures.build_mvi_mixture(
                    family, p, spec, args.max_pos, args.max_neg, include_expl,
                    equal_data=args.equal_data, broadcast=args.broadcast,
                )
            emit(mix, Path(args.train_out))
        if args.eval_out:
            eval_mix = mixtures.build_eval_mixture(
                family, spec, args.max_pos, args.max_neg, include_expl,
                card=_eval_card(family, args),
            )
            emit(eval_mix, Path(args.eval_out))
    elif setting == mixtures.MULTI_TASK:
        families = _load_families(args.families)
        if args.train_out:
            mix = mixtures.build_multitask_mixture(
                families, p, regime, spec, include_expl,
                equal_data=args.equal_data, jobs=args.jobs,
            )
            emit(mix, Path(args.train_out))
        if args.eval_out:
            eval_dir = Path(args.eval_out)
            for family in sorted(families, key=lambda f: f.family_id):
                eval_mix = mixtures.build_eval_mixture(
                    family, spec, 2, 2, include_expl, card=_eval_card(family, args)
                )
                emit(eval_mix, eval_dir / f"{family.family_id}.eval.jsonl")
    else:  # cross_task
        train_families = _load_families(args.families)
        eval_families = _load_families(args.eval_families) if args.eval_families else []
        train, eval_sets = mixtures.build_crosstask_mixture(
            train_families, parse_fraction(args.task_frac), p, regime, spec,
            eval_families, include_expl, jobs=args.jobs,
        )
        if args.train_out:
            emit(train, Path(args.train_out))
        if args.eval_out:
            eval_dir = Path(args.eval_out)
            for fid, eval_mix in sorted(eval_sets.items()):
                emit(eval_mix, eval_dir / f"{fid}.eval.jsonl")

    print(f"mix {args.setting}/{args.regime} frac={p} -> {', '.join(outputs)}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    preds = scoring.load_predictions(Path(args.preds).read_bytes())
    eval_set = mixtures.load_mixture(Path(args.eval).read_bytes())
    report = scoring.score_predictions(preds, eval_set)
    out = Path(args.out)
    _write(out, scoring.serialize_report(report))
    outputs = [out.name]
    tsv = out.with_suffix(".tsv")
    lines = ["family_id\tmean_rouge_l"] + [
        f"{fid}\t{val:.6f}" for fid, val in sorted(report.per_family.items())
    ]
    _write(tsv, ("\n".join(lines) + "\n").encode("utf-8"))
    outputs.append(tsv.name)
    if args.plots:
        from . import figures

        written = figures.render_per_family_scores(report, Path(args.plots) / "per_family_scores.png")
        outputs.append(written.name)
    write_run_manifest(out, args, resolve_seed(args.seed), outputs)
    print(f"macro={report.macro:.4f} micro={report.micro:.4f} "
          f"missing={len(report.missing)} unmatched={len(report.unmatched)}")
    return 0


def cmd_worth(args: argparse.Namespace) -> int:
    curve = analysis.load_curve(Path(args.si_curve).read_bytes())
    inp = analysis.EquivalenceInput(
        si_curve=curve,
        mvi_score=args.mvi_score,
        base_fraction=parse_fraction(args.base),
        total_instances=args.instances,
        num_variants=args.variants,
    )
    matched = analysis.interpolate_fraction(curve, args.mvi_score, args.monotone_envelope)
    worth = analysis.instruction_worth(inp, args.monotone_envelope)
    if isinstance(matched, analysis.Saturation):
        print(f"matched fraction: {matched}")
        print("worth: saturated (MVI score above the SI curve maximum)")
    else:
        print(f"matched fraction: {matched:.4f}")
        print(f"worth: {worth:.4f} instances per additional instruction")
    outputs: list[str] = []
    anchor = None
    if args.out:
        out = Path(args.out)
        payload = {
            "matched_fraction": None if isinstance(matched, analysis.Saturation) else matched,
            "saturated": isinstance(matched, analysis.Saturation),
            "worth": None if isinstance(worth, analysis.Saturation) else worth,
            "base_fraction": inp.base_fraction,
            "total_instances": inp.total_instances,
            "num_variants": inp.num_variants,
            "mvi_score": inp.mvi_score,
        }
        _write(out, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8"))
        outputs.append(out.name)
        anchor = out
    if args.plot:
        from . import figures

        plot_path = figures.render_worth_curve(curve, args.mvi_score, matched, inp.base_fraction, Path(args.plot))
        outputs.append(plot_path.name)
        anchor = anchor or plot_path
    if anchor is not None:
        write_run_manifest(anchor, args, resolve_seed(args.seed), outputs)
    return 0


def cmd_perturb(args: argparse.Namespace) -> int:
    card = tasks.parse_task_file(Path(args.task).read_bytes())
    perturbed = analysis.perturb(card, args.kind)
    out = Path(args.out)
    _write(out, tasks.serialize_task_file(perturbed))
    write_run_manifest(out, args, resolve_seed(args.seed), [out.name])
    print(f"perturbation {args.kind} of {card.task_id} -> {out}")
    return 0


def cmd_contribute(args: argparse.Namespace) -> int:
    seed = resolve_seed(args.seed)
    spec = mixtures.SplitSpec(seed=seed)
    family = _load_family(Path(args.family))
    series = analysis.variant_contribution_series(
        family, parse_fraction(args.frac), spec, args.max_pos, args.max_neg
    )
    out_dir = Path(args.out_dir)
    outputs = []
    for label, mix in series:
        path = out_dir / f"{label.lower()}.jsonl"
        _write(path, mixtures.serialize_mixture(mix))
        _write(path.with_name(path.name + ".manifest.json"), mixtures.serialize_manifest(mix))
        outputs.extend([path.name, path.name + ".manifest.json"])
    write_run_manifest(out_dir, args, seed, outputs)
    print(f"contribution series for {family.family_id}: {len(series)} mixtures -> {out_dir}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    train = mixtures.load_mixture(Path(args.train).read_bytes())
    eval_set = mixtures.load_mixture(Path(args.eval).read_bytes())
    index = baseline.fit(train)
    preds = baseline.predict_mixture(index, eval_set)
    report = scoring.score_predictions(preds, eval_set)
    out = Path(args.out)
    _write(out, scoring.serialize_report(report))
    preds_path = Path(args.preds_out) if args.preds_out else out.with_suffix(".predictions.jsonl")
    _write(preds_path, scoring.serialize_predictions(preds))
    write_run_manifest(out, args, resolve_seed(args.seed), [out.name, preds_path.name])
    print(f"macro={report.macro:.4f} micro={report.micro:.4f} ({len(eval_set.items)} instances)")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="instrux",
        description="Build, measure and evaluate multi-variant instruction datasets.",
    )
    parser.add_argument("--version", action="version", version=f"instrux {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (default: $INSTRUX_SEED or %(default)s)")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("validate", help="check a family file against every invariant")
    p.add_argument("--family", required=True)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("augment", help="generate variant instructions for one task")
    p.add_argument("--task", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--variants", type=int, required=True)
    p.add_argument("--rate", required=True, help="substitution rate (0-1 or N%%)")
    p.add_argument("--min-sim", type=float, default=0.85, dest="min_sim")
    p.add_argument("--pool", help="JSON file with leftover instances")
    p.add_argument("--vectors", help="word-vector file for the semantic guard")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("stats", help="diversity metrics and dataset statistics")
    p.add_argument("--families", nargs="+", required=True, help="family files or directories")
    p.add_argument("--vectors")
    p.add_argument("--out", required=True)
    p.add_argument("--plots", help="directory for rendered figures")
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("mix", help="build SI/MVI training and evaluation mixtures")
    p.add_argument("--setting", choices=sorted(SETTINGS), required=True)
    p.add_argument("--regime", choices=sorted(REGIMES), required=True)
    p.add_argument("--frac", required=True, help="instance fraction (0-1 or N%%)")
    p.add_argument("--family", help="family file (task-specific setting)")
    p.add_argument("--families", nargs="+", help="family files or directories (mt/ct)")
    p.add_argument("--eval-families", nargs="+", dest="eval_families", help="held-out families (ct)")
    p.add_argument("--task-frac", default="1.0", dest="task_frac", help="task fraction (ct)")
    p.add_argument("--train-out", dest="train_out")
    p.add_argument("--eval-out", dest="eval_out")
    p.add_argument("--eval-wording", type=int, default=0, dest="eval_wording",
                   help="variant_index whose wording serializes the eval split")
    p.add_argument("--eval-card", dest="eval_card",
                   help="task file (e.g. perturbed) whose wording serializes the eval split")
    p.add_argument("--equal-data", action="store_true", dest="equal_data")
    p.add_argument("--broadcast", action="store_true",
                   help="serialize every instance under every member (inflates data)")
    p.add_argument("--max-pos", type=int, default=2, dest="max_pos")
    p.add_argument("--max-neg", type=int, default=2, dest="max_neg")
    p.add_argument("--no-explanations", action="store_true", dest="no_explanations")
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("score", help="Rouge-L score a prediction file against an eval mixture")
    p.add_argument("--preds", required=True)
    p.add_argument("--eval", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plots")
    common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("worth", help="instances-per-instruction equivalence estimate")
    p.add_argument("--si-curve", required=True, dest="si_curve")
    p.add_argument("--mvi-score", type=float, required=True, dest="mvi_score")
    p.add_argument("--base", required=True, help="MVI base fraction (0-1 or N%%)")
    p.add_argument("--instances", type=int, required=True)
    p.add_argument("--variants", type=int, required=True)
    p.add_argument("--monotone-envelope", action="store_true", dest="monotone_envelope")
    p.add_argument("--out")
    p.add_argument("--plot", help="path for the rendered curve figure")
    common(p)
    p.set_defaults(func=cmd_worth)

    p = sub.add_parser("perturb", help="apply an instruction perturbation to a task file")
    p.add_argument("--task", required=True)
    p.add_argument("--kind", choices=list(analysis.PERTURBATION_KINDS), required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("contribute", help="per-variant contribution mixture series")
    p.add_argument("--family", required=True)
    p.add_argument("--frac", required=True)
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--max-pos", type=int, default=2, dest="max_pos")
    p.add_argument("--max-neg", type=int, default=2, dest="max_neg")
    common(p)
    p.set_defaults(func=cmd_contribute)

    p = sub.add_parser("run", help="fit the retrieval baseline and score it")
    p.add_argument("--train", required=True)
    p.add_argument("--eval", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--preds-out", dest="preds_out")
    common(p)
    p.set_defaults(func=cmd_run)

    return parser


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(list(argv))
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except InstruxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
