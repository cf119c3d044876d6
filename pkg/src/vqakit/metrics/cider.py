"""CIDEr: consensus scoring with per-order TF-IDF n-gram vectors.

Document frequency is computed over the reference sets of all items (one
"document" per item). For a sentence s and n-gram w of order n:

    tf(w, s)  = count(w, s) / total n-grams of order n in s
    idf(w)    = log(|Q| / max(1, #items whose references contain w))
    g^n(s)[w] = tf(w, s) * idf(w)

Per item: score_n = (1/m) * sum over the m references of
cosine(g^n(hypo), g^n(ref)), with cosine defined as 0 when either vector is
zero. The item score is the mean of score_n over n = 1..max_n, the corpus
score the mean over items. No x10 scaling unless `scale10` is set.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Mapping, Sequence

from ..text import ngrams

__all__ = ["cider"]


def _tfidf_vector(counts: Mapping[tuple, int], idf: Mapping[tuple, float]) -> dict:
    total = sum(counts.values())
    if total == 0:
        return {}
    return {gram: (count / total) * idf[gram] for gram, count in counts.items()}


def _cosine(a: Mapping[tuple, float], b: Mapping[tuple, float]) -> float:
    # Iterate sorted shared keys so the result is exactly symmetric in (a, b).
    dot = math.fsum(a[g] * b[g] for g in sorted(a.keys() & b.keys()))
    norm_a = math.sqrt(math.fsum(v * v for _, v in sorted(a.items())))
    norm_b = math.sqrt(math.fsum(v * v for _, v in sorted(b.items())))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def cider(
    corpus,
    max_n: int = 4,
    scale10: bool = False,
    n_weights: Sequence[float] | None = None,
) -> float:
    """Corpus CIDEr score. `n_weights` overrides the uniform mean over orders."""
    if not corpus:
        raise ValueError("empty corpus")
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    if n_weights is not None and len(n_weights) != max_n:
        raise ValueError(f"n_weights must have length {max_n}")
    weights = list(n_weights) if n_weights is not None else [1.0 / max_n] * max_n

    # Single read-only pre-pass: document frequency over reference sets.
    num_items = len(corpus)
    df: list[Counter] = [Counter() for _ in range(max_n + 1)]
    for item in corpus:
        for n in range(1, max_n + 1):
            seen = set()
            for ref in item.references:
                seen.update(ngrams(list(ref), n))
            df[n].update(seen)

    def idf_for(counts: Mapping[tuple, int], n: int) -> dict:
        return {g: math.log(num_items / max(1, df[n][g])) for g in counts}

    item_scores = []
    for item in corpus:
        hypo = list(item.hypothesis)
        per_n = []
        for n in range(1, max_n + 1):
            hypo_counts = ngrams(hypo, n)
            hypo_vec = _tfidf_vector(hypo_counts, idf_for(hypo_counts, n))
            cosines = []
            for ref in item.references:
                ref_counts = ngrams(list(ref), n)
                ref_vec = _tfidf_vector(ref_counts, idf_for(ref_counts, n))
                cosines.append(_cosine(hypo_vec, ref_vec))
            per_n.append(math.fsum(cosines) / len(cosines))
        item_scores.append(math.fsum(w * s for w, s in zip(weights, per_n)))

    score = math.fsum(item_scores) / len(item_scores)
    return score * 10.0 if scale10 else score
