"""ROUGE-L: longest-common-subsequence F-measure.

Per item and reference:

    R = LCS(hypo, ref) / len(ref)
    P = LCS(hypo, ref) / len(hypo)
    F = (1 + beta^2) * R * P / (R + beta^2 * P)     (0 when R = P = 0)

An item scores the maximum F over its references; the corpus score is the
mean over items.
"""

from __future__ import annotations

import math
from typing import Sequence

__all__ = ["lcs_length", "rouge_l"]


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence, O(len(a) * len(b))."""
    a = list(a)
    b = list(b)
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for tok_a in a:
        cur = [0]
        for j, tok_b in enumerate(b, start=1):
            if tok_a == tok_b:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def _f_score(lcs: int, hypo_len: int, ref_len: int, beta: float) -> float:
    if lcs == 0 or hypo_len == 0 or ref_len == 0:
        return 0.0
    r = lcs / ref_len
    p = lcs / hypo_len
    return (1.0 + beta * beta) * r * p / (r + beta * beta * p)


def rouge_l(corpus, beta: float = 1.2) -> float:
    """Corpus ROUGE-L: mean over items of the best per-reference F score."""
    if not corpus:
        raise ValueError("empty corpus")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    scores = []
    for item in corpus:
        hypo = list(item.hypothesis)
        scores.append(
            max(
                _f_score(lcs_length(hypo, list(ref)), len(hypo), len(ref), beta)
                for ref in item.references
            )
        )
    return math.fsum(scores) / len(scores)
