"""Command-line surface: evaluate, analyze, agreement, kernels-selfcheck,
validate.

Every command assembles a deterministic report (JSON or CSV). When --out is
given the report goes to that file and a short 4-decimal summary prints to
stdout; without --out the report itself is the stdout output. Exit codes:
0 success, 1 failed self-checks, 2 input/data errors.
"""

from __future__ import annotations

import argparse
import sys
from collections import Counter

from . import __version__
from .agreement import UndefinedKappaError, fleiss_kappa, load_label_file, percent_agreement
from .analysis import (
    DEFAULT_RULES,
    JoinError,
    classify_question,
    dataset_stats,
    extract_term,
    group_breakdown,
    join_predictions,
    load_dataset,
    load_predictions,
    load_rules,
    repeat_rate,
    term_accuracy,
)
from .kernels import AttentionConfig, load_bundle, multi_head_attention, run_selfcheck
from .linguistics import lcs_profile, level_histogram, load_conllu, load_parses_json
from .metrics import CorpusItem, evaluate_corpus
from .report import build_report, fmt4, write_report
from .text import has_unnormalized_price

__all__ = ["main"]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_DATA_ERROR = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_DATA_ERROR):
        super().__init__(message)
        self.code = code


def _load(loader, path, what):
    try:
        return loader(path)
    except FileNotFoundError:
        raise CliError(f"{what} file not found: {path}")
    except ValueError as exc:
        raise CliError(f"failed to load {what}: {exc}")


def _metric_kwargs(args) -> dict:
    return {
        "max_n": args.max_n,
        "beta": args.beta,
        "meteor_chunk_mode": args.meteor_chunk_mode,
        "cider_scale10": args.cider_scale10,
    }


def _corpus_from(pairs) -> list[CorpusItem]:
    return [CorpusItem(rec.qa_id, pred.answer, (rec.answer,)) for rec, pred in pairs]


def cmd_evaluate(args) -> tuple[dict, int]:
    records = _load(load_dataset, args.dataset, "dataset")
    predictions = _load(load_predictions, args.predictions, "predictions")
    try:
        pairs = join_predictions(records, predictions)
    except JoinError as exc:
        raise CliError(str(exc))
    if not pairs:
        raise CliError("no predictions to evaluate")
    kwargs = _metric_kwargs(args)
    sections = {"metrics": evaluate_corpus(_corpus_from(pairs), **kwargs).as_dict()}
    if args.types:
        by_type: dict[str, list] = {}
        for rec, pred in pairs:
            by_type.setdefault(rec.qa_type, []).append((rec, pred))
        sections["types"] = {
            qa_type: evaluate_corpus(_corpus_from(group), **kwargs).as_dict()
            for qa_type, group in sorted(by_type.items())
        }
    if args.groups:
        sections["groups"] = {
            axis: {
                name: rep.as_dict()
                for name, rep in group_breakdown(records, predictions, axis=axis, **kwargs).items()
            }
            for axis in ("question", "answer")
        }
        sections["repeat_rate"] = repeat_rate(records, predictions)
    if args.question_types:
        rules = _load(load_rules, args.rules, "rules") if args.rules else DEFAULT_RULES
        by_rule_type: dict[str, list] = {}
        for rec, pred in pairs:
            for type_name in classify_question(rec.question, rules):
                by_rule_type.setdefault(type_name, []).append((rec, pred))
        section = {}
        for type_name in sorted(by_rule_type):
            entry = evaluate_corpus(_corpus_from(by_rule_type[type_name]), **kwargs).as_dict()
            if rules[type_name].lexicon:
                entry["term_accuracy"] = term_accuracy(
                    records, predictions, type_name, rules
                )
            section[type_name] = entry
        sections["question_types"] = section
    return sections, EXIT_OK


def cmd_analyze(args) -> tuple[dict, int]:
    records = _load(load_dataset, args.dataset, "dataset")
    if not records:
        raise CliError("dataset has no records")
    sections = {"splits": dataset_stats(records)}

    def histogram(seqs):
        counts = Counter(len(s) for s in seqs)
        return {str(length): counts[length] for length in sorted(counts)}

    sections["length_histograms"] = {
        "question": histogram(r.question for r in records),
        "answer": histogram(r.answer for r in records),
    }
    rules = _load(load_rules, args.rules, "rules") if args.rules else DEFAULT_RULES
    type_counts = Counter()
    for rec in records:
        matched = classify_question(rec.question, rules)
        type_counts.update(matched if matched else {"untyped"})
    sections["question_types"] = {name: type_counts[name] for name in sorted(type_counts)}
    if args.parses:
        loader = load_parses_json if str(args.parses).endswith(".json") else load_conllu
        parses = _load(loader, args.parses, "parses")
        sections["linguistics"] = {
            "complexity": lcs_profile(parses).as_dict(),
            "levels": level_histogram(parses),
        }
    return sections, EXIT_OK


def cmd_agreement(args) -> tuple[dict, int]:
    matrix = _load(load_label_file, args.ratings, "ratings")
    try:
        kappa = fleiss_kappa(matrix)
    except UndefinedKappaError as exc:
        raise CliError(str(exc))
    sections = {
        "fleiss_kappa": kappa,
        "percent_agreement": percent_agreement(matrix),
        "n_items": matrix.n_items,
        "n_annotators": matrix.n_annotators,
        "n_categories": matrix.n_categories,
        "categories": list(matrix.categories),
    }
    return sections, EXIT_OK


def cmd_kernels_selfcheck(args) -> tuple[dict, int]:
    sections = run_selfcheck(seed=args.seed, grad_seeds=args.grad_seeds,
                             random_cases=args.random_cases)
    if args.weights:
        bundle = _load(load_bundle, args.weights, "weights")
        try:
            sections["weight_bundle"] = _exercise_bundle(bundle)
        except (ValueError, KeyError, IndexError) as exc:
            raise CliError(f"weight bundle check failed: {exc}")
    code = EXIT_OK if sections["passed"] else EXIT_CHECK_FAILED
    return sections, code


def _exercise_bundle(bundle) -> dict:
    """Run a forward pass with user-supplied attention weights."""
    import numpy as np

    required = ("w_q", "b_q", "w_k", "b_k", "w_v", "b_v", "w_o", "b_o")
    missing = [name for name in required if name not in bundle]
    if missing:
        raise ValueError(f"missing attention weights: {', '.join(missing)}")
    dim = np.asarray(bundle["w_q"]).shape[0]
    for name in required:
        arr = np.asarray(bundle[name])
        expected = (dim, dim) if name.startswith("w") else (dim,)
        if arr.shape != expected:
            raise ValueError(f"weight {name!r} has shape {arr.shape}, expected {expected}")
    heads = 1
    for candidate in (8, 4, 2):
        if dim % candidate == 0:
            heads = candidate
            break
    cfg = AttentionConfig(heads=heads, model_dim=dim)
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, size=(3, dim))
    out = multi_head_attention(x, x, x, cfg, bundle)
    return {"model_dim": dim, "heads": heads, "forward_ok": bool(np.isfinite(out).all())}


def cmd_validate(args) -> tuple[dict, int]:
    records = _load(load_dataset, args.dataset, "dataset")
    rules = _load(load_rules, args.rules, "rules") if args.rules else DEFAULT_RULES
    color_rule = rules.get("color")

    per_image = Counter(rec.image_id for rec in records)
    min_qas = [
        {"image_id": image_id, "qa_count": count}
        for image_id, count in sorted(per_image.items())
        if count < 3
    ]
    single_word = [
        {"qa_id": rec.qa_id, "answer": rec.answer.text()}
        for rec in records
        if len(rec.answer) == 1
    ]
    digit_quantities = [
        {"qa_id": rec.qa_id, "token": tok}
        for rec in records
        for tok in rec.answer
        if tok.isdigit() and 1 <= int(tok) <= 10
    ]
    colors_missing = []
    if color_rule is not None and color_rule.lexicon:
        for rec in records:
            if "color" not in classify_question(rec.question, rules):
                continue
            if extract_term(rec.answer, color_rule.lexicon) is None:
                colors_missing.append({"qa_id": rec.qa_id, "answer": rec.answer.text()})
    prices = []
    for rec in records:
        for field_name, seq in (("question", rec.question), ("answer", rec.answer)):
            if has_unnormalized_price(seq.text()):
                prices.append({"qa_id": rec.qa_id, "field": field_name})

    def rule(violations):
        return {"count": len(violations), "violations": violations}

    sections = {
        "rules": {
            "min_qas_per_image": rule(min_qas),
            "single_word_answers": rule(single_word),
            "digit_written_quantities": rule(digit_quantities),
            "color_answers_outside_lexicon": rule(colors_missing),
            "unnormalized_prices": rule(prices),
        }
    }
    return sections, EXIT_OK


def _summary_lines(command: str, sections: dict) -> list[str]:
    lines = [f"vqakit {command}"]
    if command == "evaluate":
        for key, value in sections["metrics"].items():
            lines.append(f"  {key}: {fmt4(value)}")
    elif command == "analyze":
        for split, row in sections["splits"].items():
            lines.append(
                f"  {split}: images={row['images']} text={row['text']} "
                f"non_text={row['non_text']}"
            )
    elif command == "agreement":
        lines.append(f"  fleiss_kappa: {fmt4(sections['fleiss_kappa'])}")
        lines.append(f"  percent_agreement: {fmt4(sections['percent_agreement'])}")
        lines.append(
            f"  N={sections['n_items']} n={sections['n_annotators']} "
            f"k={sections['n_categories']}"
        )
    elif command == "kernels-selfcheck":
        lines.append(f"  passed: {sections['passed']}")
        for name, entry in sections["gradients"].items():
            lines.append(
                f"  grad {name}: max_rel_err={entry['max_relative_error']:.3e} "
                f"{'ok' if entry['passed'] else 'FAIL'}"
            )
    elif command == "validate":
        for name, entry in sections["rules"].items():
            lines.append(f"  {name}: {entry['count']} violation(s)")
    return lines


def _config_echo(args, fields) -> dict:
    return {name: getattr(args, name.replace("-", "_")) for name in fields}


_COMMANDS = {
    "evaluate": (
        cmd_evaluate,
        ("dataset", "predictions", "beta", "max_n", "cider_scale10",
         "meteor_chunk_mode", "groups", "types", "question_types", "rules"),
    ),
    "analyze": (cmd_analyze, ("dataset", "parses", "rules")),
    "agreement": (cmd_agreement, ("ratings",)),
    "kernels-selfcheck": (
        cmd_kernels_selfcheck,
        ("weights", "seed", "grad_seeds", "random_cases"),
    ),
    "validate": (cmd_validate, ("dataset", "rules")),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqakit",
        description="Metrics, agreement, linguistics and kernel checks for "
        "open-ended VQA evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"vqakit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", default=None, help="report file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument(
            "--no-timestamp", action="store_true",
            help="omit the timestamp for byte-identical reports",
        )

    p = sub.add_parser("evaluate", help="score predictions against gold answers")
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--beta", type=float, default=1.2, help="ROUGE-L beta")
    p.add_argument("--max-n", type=int, default=4, help="highest n-gram order")
    p.add_argument("--cider-scale10", action="store_true", help="scale CIDEr by 10")
    p.add_argument(
        "--meteor-chunk-mode", choices=("standard", "paper-literal"), default="standard"
    )
    p.add_argument("--groups", action="store_true", help="per length-group breakdown")
    p.add_argument("--types", action="store_true", help="per QA-type breakdown")
    p.add_argument(
        "--question-types", action="store_true",
        help="per rule-based question type breakdown with term accuracy",
    )
    p.add_argument("--rules", default=None, help="question-type rule file")
    add_common(p)

    p = sub.add_parser("analyze", help="dataset statistics and linguistics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--parses", default=None, help="CoNLL-U or JSON dependency parses")
    p.add_argument("--rules", default=None, help="question-type rule file")
    add_common(p)

    p = sub.add_parser("agreement", help="inter-annotator agreement from a label file")
    p.add_argument("--ratings", required=True, help="annotator_id,item_id,label file")
    add_common(p)

    p = sub.add_parser("kernels-selfcheck", help="verify fusion kernels")
    p.add_argument("--weights", default=None, help="JSON weight bundle to exercise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grad-seeds", type=int, default=10)
    p.add_argument("--random-cases", type=int, default=100)
    add_common(p)

    p = sub.add_parser("validate", help="check a dataset against the annotation guideline")
    p.add_argument("--dataset", required=True)
    p.add_argument("--rules", default=None)
    add_common(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler, config_fields = _COMMANDS[args.command]
    try:
        sections, code = handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    report = build_report(
        args.command,
        _config_echo(args, config_fields),
        sections,
        timestamp=not args.no_timestamp,
    )
    rendered = write_report(report, args.out, args.format)
    if args.out is None:
        sys.stdout.write(rendered)
    else:
        for line in _summary_lines(args.command, sections):
            print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
