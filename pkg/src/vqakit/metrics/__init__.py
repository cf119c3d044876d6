"""Corpus-level answer-quality metrics: BLEU@n, ROUGE-L, METEOR, CIDEr.

All metrics score a list of `CorpusItem`s (one machine hypothesis against one
or more human references, already normalized and tokenized). Corpus
accumulations use `math.fsum`, so every score is exactly invariant under
permutation of the item order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..text import TokenSeq
from .bleu import bleu
from .cider import cider
from .meteor import meteor, meteor_align
from .rouge import lcs_length, rouge_l

__all__ = [
    "CorpusItem",
    "MetricReport",
    "bleu",
    "rouge_l",
    "lcs_length",
    "meteor",
    "meteor_align",
    "cider",
    "evaluate_corpus",
]


@dataclass(frozen=True)
class CorpusItem:
    """One evaluation record: a hypothesis and its reference answers."""

    item_id: str
    hypothesis: TokenSeq
    references: tuple[TokenSeq, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "references", tuple(self.references))
        if not self.references:
            raise ValueError(f"item {self.item_id!r} has no references")


@dataclass(frozen=True)
class MetricReport:
    """Scores for one corpus (or one slice of a corpus)."""

    bleu: tuple[float, ...]  # BLEU@1 .. BLEU@max_n
    meteor: float
    rouge_l: float
    cider: float
    item_count: int

    def as_dict(self) -> dict:
        out = {f"bleu@{k}": v for k, v in enumerate(self.bleu, start=1)}
        out["meteor"] = self.meteor
        out["rouge_l"] = self.rouge_l
        out["cider"] = self.cider
        out["item_count"] = self.item_count
        return out


def evaluate_corpus(
    corpus: Sequence[CorpusItem],
    max_n: int = 4,
    beta: float = 1.2,
    meteor_chunk_mode: str = "standard",
    cider_scale10: bool = False,
) -> MetricReport:
    """Run every metric over `corpus` and collect a MetricReport."""
    if not corpus:
        raise ValueError("empty corpus")
    return MetricReport(
        bleu=tuple(bleu(corpus, max_n=max_n)),
        meteor=meteor(corpus, chunk_mode=meteor_chunk_mode),
        rouge_l=rouge_l(corpus, beta=beta),
        cider=cider(corpus, max_n=max_n, scale10=cider_scale10),
        item_count=len(corpus),
    )
