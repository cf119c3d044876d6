"""Inter-annotator agreement statistics for QA-type classification.

Works on an N x k count matrix (items x categories) where every row sums to
the number of annotators n:

    P_i   = (1 / (n (n-1))) * sum_j n_ij (n_ij - 1)
    p_j   = (1 / (N n)) * sum_i n_ij
    kappa = (P_bar - P_e_bar) / (1 - P_e_bar)   with P_e_bar = sum_j p_j^2

Percent agreement is the fraction of items where all annotators chose the
same category.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "RatingMatrix",
    "UndefinedKappaError",
    "item_agreement",
    "fleiss_kappa",
    "percent_agreement",
    "load_label_file",
]


class UndefinedKappaError(ValueError):
    """Raised when chance agreement is 1 (all ratings in one category)."""


@dataclass(frozen=True)
class RatingMatrix:
    """Counts of annotators per item and category."""

    counts: np.ndarray  # shape (N, k), non-negative ints
    n_annotators: int
    categories: tuple[str, ...] = ()
    item_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 2 or counts.shape[0] < 1 or counts.shape[1] < 2:
            raise ValueError(f"need an N x k matrix with k >= 2, got shape {counts.shape}")
        if self.n_annotators < 2:
            raise ValueError(f"need at least 2 annotators, got {self.n_annotators}")
        if (counts < 0).any():
            raise ValueError("negative rating counts")
        bad = np.nonzero(counts.sum(axis=1) != self.n_annotators)[0]
        if bad.size:
            ids = [self.item_ids[i] if self.item_ids else str(i) for i in bad.tolist()]
            raise ValueError(
                f"rows must sum to n={self.n_annotators}; offending items: {', '.join(ids)}"
            )

    @property
    def n_items(self) -> int:
        return self.counts.shape[0]

    @property
    def n_categories(self) -> int:
        return self.counts.shape[1]


def item_agreement(row: Sequence[int], n: int) -> float:
    """P_i for one item: the proportion of agreeing annotator pairs."""
    row = np.asarray(row, dtype=np.int64)
    if n < 2:
        raise ValueError(f"need at least 2 annotators, got {n}")
    if row.sum() != n:
        raise ValueError(f"row sums to {row.sum()}, expected n={n}")
    return float((row * (row - 1)).sum() / (n * (n - 1)))


def fleiss_kappa(m: RatingMatrix) -> float:
    """Chance-corrected agreement over the whole matrix."""
    counts = m.counts.astype(np.float64)
    n = m.n_annotators
    p_i = (counts * (counts - 1)).sum(axis=1) / (n * (n - 1))
    p_bar = float(p_i.mean())
    p_j = counts.sum(axis=0) / (m.n_items * n)
    p_e = float((p_j**2).sum())
    if p_e >= 1.0:
        raise UndefinedKappaError("all ratings fall in a single category; kappa undefined")
    return (p_bar - p_e) / (1.0 - p_e)


def percent_agreement(m: RatingMatrix) -> float:
    """Fraction of items all annotators labelled identically."""
    return float((m.counts == m.n_annotators).any(axis=1).mean())


def load_label_file(path: str | Path) -> RatingMatrix:
    """Aggregate a per-annotator label file into a RatingMatrix.

    Expects delimited UTF-8 text with header annotator_id,item_id,label.
    Every annotator must rate every item exactly once.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        delimiter = "\t" if sample.count("\t") > sample.count(",") else ","
        reader = csv.DictReader(fh, delimiter=delimiter)
        required = {"annotator_id", "item_id", "label"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(
                f"{path}: expected header with columns annotator_id,item_id,label, "
                f"got {reader.fieldnames}"
            )
        seen: set[tuple[str, str]] = set()
        votes: dict[str, dict[str, int]] = {}
        annotators: set[str] = set()
        labels: set[str] = set()
        for lineno, rec in enumerate(reader, start=2):
            annotator = (rec["annotator_id"] or "").strip()
            item_id = (rec["item_id"] or "").strip()
            label = (rec["label"] or "").strip()
            if not annotator or not item_id or not label:
                raise ValueError(f"{path}:{lineno}: empty field")
            if (annotator, item_id) in seen:
                raise ValueError(f"{path}:{lineno}: duplicate rating by {annotator} on {item_id}")
            seen.add((annotator, item_id))
            annotators.add(annotator)
            labels.add(label)
            by_label = votes.setdefault(item_id, {})
            by_label[label] = by_label.get(label, 0) + 1

    if not votes:
        raise ValueError(f"{path}: no ratings found")
    n = len(annotators)
    incomplete = sorted(
        item_id for item_id, by_label in votes.items() if sum(by_label.values()) != n
    )
    if incomplete:
        raise ValueError(
            f"{path}: items not rated by all {n} annotators: {', '.join(incomplete)}"
        )
    categories = tuple(sorted(labels))
    item_ids = tuple(sorted(votes))
    counts = np.array(
        [[votes[item_id].get(cat, 0) for cat in categories] for item_id in item_ids],
        dtype=np.int64,
    )
    return RatingMatrix(counts, n, categories=categories, item_ids=item_ids)
