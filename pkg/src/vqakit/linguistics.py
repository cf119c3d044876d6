"""Complexity and linguistic-level analysis over dependency parses.

Parses are consumed, never produced: the toolkit reads trees emitted by an
external dependency parser (CoNLL-U or an equivalent JSON array) and derives

  * per-sentence complexity: word count, dependency count, tree height
    (height counts nodes, so a single token has height 1), and
  * a linguistic level: one-token texts are words, texts whose root is a
    verb with a subject-labelled dependent are sentences, everything else
    is a phrase.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "ParsedToken",
    "DependencyParse",
    "ComplexityStats",
    "CorpusComplexity",
    "LinguisticLevel",
    "DEFAULT_SUBJECT_LABELS",
    "DEFAULT_VERB_TAGS",
    "complexity",
    "lcs_profile",
    "lls_classify",
    "level_histogram",
    "load_conllu",
    "load_parses_json",
]

# Subject labels and verb tags are parser-specific; these defaults cover
# the common Vietnamese and universal-dependency tagsets.
DEFAULT_SUBJECT_LABELS = frozenset({"sub", "nsub", "nsubj", "csubj"})
DEFAULT_VERB_TAGS = frozenset({"V", "VERB", "VB"})


@dataclass(frozen=True)
class ParsedToken:
    form: str
    upos: str
    head: int  # 1-based index of the head token, 0 for the root
    deprel: str


class LinguisticLevel(str, Enum):
    WORD = "word"
    PHRASE = "phrase"
    SENTENCE = "sentence"


@dataclass(frozen=True)
class DependencyParse:
    """A single-rooted, acyclic dependency tree."""

    tokens: tuple[ParsedToken, ...]

    def __post_init__(self) -> None:
        tokens = tuple(self.tokens)
        object.__setattr__(self, "tokens", tokens)
        if not tokens:
            raise ValueError("empty parse")
        n = len(tokens)
        roots = [i for i, t in enumerate(tokens) if t.head == 0]
        if len(roots) != 1:
            raise ValueError(f"parse must have exactly one root, found {len(roots)}")
        for i, tok in enumerate(tokens):
            if not 0 <= tok.head <= n:
                raise ValueError(f"token {i + 1}: head {tok.head} out of range [0, {n}]")
        # cycle check: every token must reach the root
        for i in range(n):
            seen = set()
            cur = i
            while tokens[cur].head != 0:
                if cur in seen:
                    raise ValueError(f"cycle through token {cur + 1}")
                seen.add(cur)
                cur = tokens[cur].head - 1

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def root_index(self) -> int:
        return next(i for i, t in enumerate(self.tokens) if t.head == 0)

    def children(self, index: int) -> list[int]:
        return [i for i, t in enumerate(self.tokens) if t.head == index + 1]


@dataclass(frozen=True)
class ComplexityStats:
    word_count: int
    dependency_count: int
    tree_height: int


@dataclass(frozen=True)
class CorpusComplexity:
    """Min/mean/max aggregates over per-sentence complexity."""

    sentences: int
    word: tuple[int, float, int]
    dependency: tuple[int, float, int]
    height: tuple[int, float, int]

    def as_dict(self) -> dict:
        def row(agg):
            lo, mean, hi = agg
            return {"min": lo, "mean": mean, "mean_display": round(mean, 1), "max": hi}

        return {
            "sentences": self.sentences,
            "word": row(self.word),
            "dependency": row(self.dependency),
            "height": row(self.height),
        }


def complexity(parse: DependencyParse, include_punct: bool = True) -> ComplexityStats:
    """Per-sentence word count, dependency count and node-counted tree height."""
    counted = [
        t for t in parse.tokens if include_punct or t.upos.upper() != "PUNCT"
    ]
    heights = {parse.root_index: 1}
    order = [parse.root_index]
    for idx in order:
        for child in parse.children(idx):
            heights[child] = heights[idx] + 1
            order.append(child)
    return ComplexityStats(
        word_count=len(counted),
        dependency_count=sum(1 for t in parse.tokens if t.head != 0),
        tree_height=max(heights.values()),
    )


def lcs_profile(
    parses: Sequence[DependencyParse], include_punct: bool = True
) -> CorpusComplexity:
    """Corpus min/mean/max of the per-sentence complexity statistics."""
    if not parses:
        raise ValueError("empty parse list")
    stats = [complexity(p, include_punct=include_punct) for p in parses]

    def agg(values):
        return (min(values), sum(values) / len(values), max(values))

    return CorpusComplexity(
        sentences=len(stats),
        word=agg([s.word_count for s in stats]),
        dependency=agg([s.dependency_count for s in stats]),
        height=agg([s.tree_height for s in stats]),
    )


def _label_matches(label: str, wanted: frozenset[str] | set[str]) -> bool:
    lowered = {w.lower() for w in wanted}
    label = label.lower()
    return label in lowered or label.split(":")[0] in lowered


def lls_classify(
    parse: DependencyParse,
    subject_labels: Iterable[str] = DEFAULT_SUBJECT_LABELS,
    verb_tags: Iterable[str] = DEFAULT_VERB_TAGS,
) -> LinguisticLevel:
    """Classify a parse as word, sentence or phrase.

    word: exactly one token. sentence: the root is a verb and one of its
    dependents carries a subject label. phrase: everything else.
    """
    if len(parse) == 1:
        return LinguisticLevel.WORD
    subject_labels = frozenset(subject_labels)
    verb_tags = frozenset(verb_tags)
    root = parse.root_index
    if _label_matches(parse.tokens[root].upos, verb_tags):
        for child in parse.children(root):
            if _label_matches(parse.tokens[child].deprel, subject_labels):
                return LinguisticLevel.SENTENCE
    return LinguisticLevel.PHRASE


def level_histogram(
    parses: Sequence[DependencyParse],
    subject_labels: Iterable[str] = DEFAULT_SUBJECT_LABELS,
    verb_tags: Iterable[str] = DEFAULT_VERB_TAGS,
) -> dict:
    """Counts per linguistic level; values always sum to len(parses)."""
    counts = {level.value: 0 for level in LinguisticLevel}
    for parse in parses:
        counts[lls_classify(parse, subject_labels, verb_tags).value] += 1
    return counts


def _finish_sentence(rows: list[ParsedToken], lineno: int) -> DependencyParse:
    try:
        return DependencyParse(tuple(rows))
    except ValueError as exc:
        raise ValueError(f"line {lineno}: {exc}") from exc


def load_conllu(path: str | Path) -> list[DependencyParse]:
    """Read a CoNLL-U (or 5-column subset) file into dependency parses.

    Accepts the full 10-column format (FORM/UPOS/HEAD/DEPREL taken from their
    standard positions) or a 5-column ID FORM UPOS HEAD DEPREL subset.
    Sentences are blank-line separated; comment and multi-word-token lines
    are skipped. Errors name the offending line number.
    """
    path = Path(path)
    parses: list[DependencyParse] = []
    rows: list[ParsedToken] = []
    lineno = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                if rows:
                    parses.append(_finish_sentence(rows, lineno))
                    rows = []
                continue
            if line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) == 1:
                fields = line.split()
            if len(fields) >= 10:
                token_id, form, upos, head, deprel = (
                    fields[0], fields[1], fields[3], fields[6], fields[7],
                )
            elif len(fields) == 5:
                token_id, form, upos, head, deprel = fields
            else:
                raise ValueError(
                    f"{path}: line {lineno}: expected 5 or 10 columns, got {len(fields)}"
                )
            if "-" in token_id or "." in token_id:
                continue  # multi-word token / empty node lines carry no head
            try:
                head_idx = int(head)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-integer head {head!r}")
            rows.append(ParsedToken(form=form, upos=upos, head=head_idx, deprel=deprel))
    if rows:
        parses.append(_finish_sentence(rows, lineno + 1))
    if not parses:
        raise ValueError(f"{path}: no sentences found")
    return parses


def load_parses_json(path: str | Path) -> list[DependencyParse]:
    """Read the JSON form: an array of sentences, each an array of
    {form, upos, head, deprel} objects."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not data:
        raise ValueError(f"{path}: expected a non-empty JSON array of sentences")
    parses = []
    for i, sentence in enumerate(data):
        try:
            tokens = tuple(
                ParsedToken(
                    form=tok["form"],
                    upos=tok.get("upos", ""),
                    head=int(tok["head"]),
                    deprel=tok.get("deprel", ""),
                )
                for tok in sentence
            )
            parses.append(DependencyParse(tokens))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: sentence {i}: {exc}") from exc
    return parses
