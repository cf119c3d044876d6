"""Corpus-level BLEU with clipped n-gram precision and brevity penalty.

    p_n  = sum over items of clipped n-gram matches / sum of hypo n-gram totals
    BP   = exp(min(1 - r/c, 0))   with c = total hypo length,
                                       r = total effective reference length
    BLEU@k = BP * exp(sum_{n=1..k} (1/k) * log p_n)

The effective reference length of an item is the reference whose length is
closest to the hypothesis length, ties going to the shorter reference.
BLEU@k is 0 whenever some p_n with n <= k is 0.
"""

from __future__ import annotations

import math
from typing import Sequence

from ..text import clipped_counts, ngrams

__all__ = ["bleu"]


def _effective_ref_length(hypo_len: int, ref_lens: Sequence[int]) -> int:
    return min(ref_lens, key=lambda r: (abs(r - hypo_len), r))


def bleu(corpus, max_n: int = 4) -> list[float]:
    """Return [BLEU@1, ..., BLEU@max_n] over the corpus."""
    if not corpus:
        raise ValueError("empty corpus")
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")

    matched = [0] * (max_n + 1)  # index by n; slot 0 unused
    total = [0] * (max_n + 1)
    c = 0
    r = 0
    for item in corpus:
        hypo = list(item.hypothesis)
        refs = [list(ref) for ref in item.references]
        c += len(hypo)
        r += _effective_ref_length(len(hypo), [len(ref) for ref in refs])
        for n in range(1, max_n + 1):
            hypo_counts = ngrams(hypo, n)
            if not hypo_counts:
                continue
            ref_counts = [ngrams(ref, n) for ref in refs]
            matched[n] += sum(clipped_counts(hypo_counts, ref_counts).values())
            total[n] += sum(hypo_counts.values())

    log_bp = min(1.0 - r / c, 0.0) if c > 0 else float("-inf")
    scores = []
    for k in range(1, max_n + 1):
        if any(matched[n] == 0 or total[n] == 0 for n in range(1, k + 1)):
            scores.append(0.0)
            continue
        log_p = math.fsum(math.log(matched[n] / total[n]) for n in range(1, k + 1)) / k
        scores.append(math.exp(log_bp + log_p))
    return scores
