"""Dataset and prediction analysis: split statistics, length grouping,
question-type classification, term accuracy and question-token repetition.

The dataset file is JSON:

    {"annotations": [{"qa_id", "image_id", "question", "answer",
                      "qa_type", "split"}, ...],
     "images": [{"image_id", "filename"}, ...]}

where questions/answers are either strings (normalized + tokenized on load)
or pre-segmented token arrays. Predictions are a JSON array of
{"qa_id", "answer"}. Question-type rules live in an editable JSON file; the
shipped defaults cover the annotation-guideline color list and Vietnamese
numeral words plus digit forms.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .metrics import CorpusItem, MetricReport, evaluate_corpus
from .text import TokenSeq, normalize

__all__ = [
    "QARecord",
    "Prediction",
    "LengthGroup",
    "TypeRule",
    "QuestionTypeRules",
    "DEFAULT_RULES",
    "JoinError",
    "dataset_stats",
    "length_group",
    "group_breakdown",
    "classify_question",
    "extract_term",
    "term_accuracy",
    "repeat_rate",
    "join_predictions",
    "load_dataset",
    "load_predictions",
    "load_rules",
]

QA_TYPES = ("text", "non_text")
SPLITS = ("train", "dev", "test")


class JoinError(ValueError):
    """A prediction refers to a qa_id absent from the dataset."""


@dataclass(frozen=True)
class QARecord:
    qa_id: str
    image_id: str
    question: TokenSeq
    answer: TokenSeq
    qa_type: str  # "text" | "non_text"
    split: str  # "train" | "dev" | "test"

    def __post_init__(self) -> None:
        if self.qa_type not in QA_TYPES:
            raise ValueError(f"qa {self.qa_id}: bad qa_type {self.qa_type!r}")
        if self.split not in SPLITS:
            raise ValueError(f"qa {self.qa_id}: bad split {self.split!r}")
        if len(self.question) == 0 or len(self.answer) == 0:
            raise ValueError(f"qa {self.qa_id}: empty question or answer")


@dataclass(frozen=True)
class Prediction:
    qa_id: str
    answer: TokenSeq


class LengthGroup(str, Enum):
    S = "S"
    M = "M"
    L = "L"
    XL = "XL"


def length_group(seq: Sequence) -> LengthGroup:
    """Token-count bucket: S <= 5 < M <= 10 < L <= 15 < XL."""
    n = len(seq)
    if n <= 5:
        return LengthGroup.S
    if n <= 10:
        return LengthGroup.M
    if n <= 15:
        return LengthGroup.L
    return LengthGroup.XL


# --------------------------------------------------------------------------
# question-type rules

@dataclass(frozen=True)
class TypeRule:
    """Patterns that detect a question type, plus the term lexicon used to
    grade answers of that type. The lexicon is a tuple of variant groups:
    each group lists the surface forms of one canonical term."""

    name: str
    patterns: tuple[str, ...]
    lexicon: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        if not self.patterns:
            raise ValueError(f"rule {self.name!r} has no patterns")


# Guideline color list (12 colors) with their common Vietnamese surface
# forms; each inner tuple is one canonical color, longest surface first.
_COLOR_LEXICON = (
    ("đen",),
    ("trắng",),
    ("đỏ",),
    ("cam",),
    ("vàng",),
    ("xanh lá cây", "xanh lá"),
    ("xanh da trời",),
    ("xanh dương", "xanh nước biển", "xanh"),
    ("tím",),
    ("hồng",),
    ("nâu",),
    ("xám",),
)

_QUANTITY_LEXICON = (
    ("một", "1"),
    ("hai", "2"),
    ("ba", "3"),
    ("bốn", "4"),
    ("năm", "5"),
    ("sáu", "6"),
    ("bảy", "bẩy", "7"),
    ("tám", "8"),
    ("chín", "9"),
    ("mười", "10"),
)

DEFAULT_RULES: dict[str, TypeRule] = {
    "color": TypeRule(
        "color",
        patterns=("màu gì", "màu nào", "có màu", "màu sắc"),
        lexicon=_COLOR_LEXICON,
    ),
    "quantity": TypeRule(
        "quantity",
        patterns=("bao nhiêu", r"có mấy", r"^mấy\b", r"\bmấy (cái|chiếc|con|người|quả|cây)"),
        lexicon=_QUANTITY_LEXICON,
    ),
    "location": TypeRule(
        "location",
        patterns=("ở đâu", "nơi nào", "chỗ nào", "bên nào", "phía nào", "khu vực nào"),
    ),
}

QuestionTypeRules = Mapping[str, TypeRule]


def _flat_text(seq: Sequence[str]) -> str:
    """Space-joined tokens with segmentation underscores flattened, so
    patterns and lexicon entries are written in plain surface form."""
    return " ".join(seq).replace("_", " ")


def classify_question(question: Sequence[str], rules: QuestionTypeRules = DEFAULT_RULES) -> set:
    """All rule names whose patterns match the question; empty set = untyped."""
    text = _flat_text(question)
    return {
        name for name, rule in rules.items() if any(re.search(p, text) for p in rule.patterns)
    }


def _lexicon_regex(lexicon: Sequence[Sequence[str]]) -> tuple[re.Pattern, dict]:
    surface_to_canonical = {}
    for group in lexicon:
        for surface in group:
            surface_to_canonical[surface] = group[0]
    # longest surface first so "xanh da trời" wins over "xanh"
    ordered = sorted(surface_to_canonical, key=len, reverse=True)
    pattern = re.compile(
        r"(?<!\w)(" + "|".join(re.escape(s) for s in ordered) + r")(?!\w)"
    )
    return pattern, surface_to_canonical


def extract_term(seq: Sequence[str], lexicon: Sequence[Sequence[str]]) -> str | None:
    """Canonical form of the first lexicon term occurring in the text, or None."""
    if not lexicon:
        return None
    pattern, canonical = _lexicon_regex(lexicon)
    match = pattern.search(_flat_text(seq))
    return canonical[match.group(1)] if match else None


# --------------------------------------------------------------------------
# dataset statistics and prediction analysis

def dataset_stats(records: Sequence[QARecord]) -> dict:
    """Per-split image / Text QA / Non-text QA counts plus a total row.

    Image counts deduplicate image_id within each split; the total row sums
    the per-split rows.
    """
    if not records:
        raise ValueError("no records")
    images: dict[str, set] = {split: set() for split in SPLITS}
    qa_counts: dict[str, Counter] = {split: Counter() for split in SPLITS}
    for rec in records:
        images[rec.split].add(rec.image_id)
        qa_counts[rec.split][rec.qa_type] += 1
    out = {}
    for split in SPLITS:
        out[split] = {
            "images": len(images[split]),
            "text": qa_counts[split]["text"],
            "non_text": qa_counts[split]["non_text"],
        }
    out["total"] = {
        key: sum(out[split][key] for split in SPLITS) for key in ("images", "text", "non_text")
    }
    return out


def join_predictions(
    records: Sequence[QARecord], predictions: Sequence[Prediction]
) -> list[tuple[QARecord, Prediction]]:
    """Pair predictions with their records; unknown qa_ids raise JoinError."""
    by_id = {rec.qa_id: rec for rec in records}
    missing = sorted({p.qa_id for p in predictions if p.qa_id not in by_id})
    if missing:
        raise JoinError(f"predictions reference unknown qa_ids: {', '.join(missing)}")
    return [(by_id[p.qa_id], p) for p in predictions]


def _corpus(pairs: Iterable[tuple[QARecord, Prediction]]) -> list[CorpusItem]:
    return [
        CorpusItem(rec.qa_id, pred.answer, (rec.answer,)) for rec, pred in pairs
    ]


def group_breakdown(
    records: Sequence[QARecord],
    predictions: Sequence[Prediction],
    axis: str = "answer",
    **metric_kwargs,
) -> dict[str, MetricReport]:
    """Metric reports per length group of the question or gold answer.

    Groups with no items are absent from the result.
    """
    if axis not in ("question", "answer"):
        raise ValueError(f"axis must be 'question' or 'answer', got {axis!r}")
    pairs = join_predictions(records, predictions)
    partitions: dict[str, list] = {}
    for rec, pred in pairs:
        key_seq = rec.question if axis == "question" else rec.answer
        partitions.setdefault(length_group(key_seq).value, []).append((rec, pred))
    return {
        group.value: evaluate_corpus(_corpus(partitions[group.value]), **metric_kwargs)
        for group in LengthGroup
        if group.value in partitions
    }


def term_accuracy(
    records: Sequence[QARecord],
    predictions: Sequence[Prediction],
    type_name: str,
    rules: QuestionTypeRules = DEFAULT_RULES,
) -> float:
    """Fraction of type-matching questions whose prediction gives the gold term.

    Supported for term-graded types only (color, quantity): locations vary
    too much in surface form to grade by term.
    """
    rule = rules.get(type_name)
    if rule is None or not rule.lexicon:
        raise ValueError(f"term accuracy unsupported for type {type_name!r}")
    pairs = join_predictions(records, predictions)
    scoped = [
        (rec, pred)
        for rec, pred in pairs
        if type_name in classify_question(rec.question, rules)
    ]
    if not scoped:
        raise ValueError(f"no questions of type {type_name!r}")
    correct = 0
    for rec, pred in scoped:
        gold = extract_term(rec.answer, rule.lexicon)
        got = extract_term(pred.answer, rule.lexicon)
        if gold is not None and got is not None and gold == got:
            correct += 1
    return correct / len(scoped)


def repeat_rate(
    records: Sequence[QARecord], predictions: Sequence[Prediction]
) -> dict[str, float]:
    """Per answer-length group: mean fraction of prediction tokens repeated
    from the question (multiset intersection; empty predictions count 0)."""
    pairs = join_predictions(records, predictions)
    rates: dict[str, list[float]] = {}
    for rec, pred in pairs:
        group = length_group(rec.answer).value
        if len(pred.answer) == 0:
            rate = 0.0
        else:
            overlap = Counter(pred.answer.tokens) & Counter(rec.question.tokens)
            rate = sum(overlap.values()) / len(pred.answer)
        rates.setdefault(group, []).append(rate)
    return {
        group.value: sum(rates[group.value]) / len(rates[group.value])
        for group in LengthGroup
        if group.value in rates
    }


# --------------------------------------------------------------------------
# file loading

def _as_token_seq(value, field: str, qa_id: str, language: str = "vi") -> TokenSeq:
    if isinstance(value, str):
        return TokenSeq(tuple(normalize(value, language).split()), language)
    if isinstance(value, list) and all(isinstance(t, str) for t in value):
        return TokenSeq(tuple(value), language)
    raise ValueError(f"qa {qa_id}: {field} must be a string or a token array")


def _canon_qa_type(raw, qa_id: str) -> str:
    value = str(raw).strip().lower().replace("-", "_").replace(" ", "_")
    if value in ("text", "text_qa"):
        return "text"
    if value in ("non_text", "non_text_qa", "nontext"):
        return "non_text"
    raise ValueError(f"qa {qa_id}: unknown qa_type {raw!r}")


def load_dataset(path: str | Path) -> list[QARecord]:
    """Read the dataset JSON into QARecords."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        data = json.load(fh)
    annotations = data.get("annotations")
    if not isinstance(annotations, list) or not annotations:
        raise ValueError(f"{path}: missing or empty 'annotations' array")
    records = []
    for i, ann in enumerate(annotations):
        qa_id = str(ann.get("qa_id", f"#{i}"))
        try:
            records.append(
                QARecord(
                    qa_id=qa_id,
                    image_id=str(ann["image_id"]),
                    question=_as_token_seq(ann["question"], "question", qa_id),
                    answer=_as_token_seq(ann["answer"], "answer", qa_id),
                    qa_type=_canon_qa_type(ann["qa_type"], qa_id),
                    split=str(ann["split"]).strip().lower(),
                )
            )
        except KeyError as exc:
            raise ValueError(f"{path}: qa {qa_id}: missing field {exc}") from exc
    return records


def load_predictions(path: str | Path) -> list[Prediction]:
    """Read the predictions JSON array into Predictions."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of predictions")
    preds = []
    for i, entry in enumerate(data):
        qa_id = str(entry.get("qa_id", f"#{i}"))
        answer = entry.get("answer", "")
        preds.append(Prediction(qa_id=qa_id, answer=_as_token_seq(answer, "answer", qa_id)))
    return preds


def load_rules(path: str | Path) -> dict[str, TypeRule]:
    """Read a rule file: {"types": {name: {"patterns": [...], "lexicon": [...]}}}.

    Lexicon entries may be plain strings (their own group) or arrays of
    variant surfaces for one canonical term.
    """
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        data = json.load(fh)
    types = data.get("types")
    if not isinstance(types, dict) or not types:
        raise ValueError(f"{path}: missing or empty 'types' object")
    rules = {}
    for name, spec in types.items():
        patterns = tuple(spec.get("patterns", []))
        for pattern in patterns:
            try:
                re.compile(pattern)
            except re.error as exc:
                raise ValueError(f"{path}: type {name!r}: bad pattern {pattern!r}: {exc}")
        lexicon = tuple(
            (entry,) if isinstance(entry, str) else tuple(entry)
            for entry in spec.get("lexicon", [])
        )
        rules[name] = TypeRule(name=name, patterns=patterns, lexicon=lexicon)
    return rules
