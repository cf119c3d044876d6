"""Exact-match METEOR with minimum-crossing unigram alignment.

The alignment between hypothesis and reference is a one-to-one matching of
equal unigrams that has maximum cardinality and, among those, the fewest
crossing pairs. Scoring per item and reference:

    P = m / w_h          R = m / w_r          F_mean = 10 P R / (R + 9 P)
    penalty = 0.5 * (c / u_m)^3               M = F_mean * (1 - penalty)

with m matched unigrams, w_h/w_r the hypothesis/reference lengths, u_m = m,
and c the number of chunks (maximal runs of mappings contiguous and in order
on both sides). `chunk_mode="paper-literal"` instead sets c to the matched
unigram count itself. An item scores the maximum over its references; the
corpus score is the mean over items.
"""

from __future__ import annotations

import math
from typing import Sequence

__all__ = ["meteor", "meteor_align", "count_chunks"]

# Explored-state bound for the exact alignment search. Answer-length
# sentences stay far below this; pathological repetition falls back to the
# greedy matcher.
DEFAULT_NODE_CAP = 200_000


class _SearchBudgetExceeded(Exception):
    pass


def _exact_align(hypo: Sequence[str], ref: Sequence[str], node_cap: int) -> list[tuple[int, int]]:
    """Backtracking search with memoization over (hypo position, used-ref bitmask).

    Pairs are added in increasing hypo order, so matching hypo position i to
    ref position j adds exactly popcount(mask >> (j+1)) crossings: one per
    already-used ref position to the right of j.
    """
    ref_positions: dict[str, list[int]] = {}
    for j, tok in enumerate(ref):
        ref_positions.setdefault(tok, []).append(j)

    candidates = [ref_positions.get(tok, []) for tok in hypo]
    memo: dict[tuple[int, int], tuple[tuple[int, int], int]] = {}

    def best(i: int, mask: int) -> tuple[int, int]:
        """Best (matches, -crossings) achievable from hypo position i on."""
        if i == len(hypo):
            return (0, 0)
        key = (i, mask)
        if key in memo:
            return memo[key][0]
        if len(memo) >= node_cap:
            raise _SearchBudgetExceeded
        value, choice = best(i + 1, mask), -1
        for j in candidates[i]:
            bit = 1 << j
            if mask & bit:
                continue
            sub_matches, sub_neg_cross = best(i + 1, mask | bit)
            crossings = (mask >> (j + 1)).bit_count()
            cand = (sub_matches + 1, sub_neg_cross - crossings)
            # ties prefer matching here, at the leftmost reference position
            if cand > value or (cand == value and choice == -1):
                value, choice = cand, j
        memo[key] = (value, choice)
        return value

    best(0, 0)
    pairs: list[tuple[int, int]] = []
    i, mask = 0, 0
    while i < len(hypo):
        choice = memo[(i, mask)][1]
        if choice >= 0:
            pairs.append((i, choice))
            mask |= 1 << choice
        i += 1
    return pairs


def _greedy_align(hypo: Sequence[str], ref: Sequence[str]) -> list[tuple[int, int]]:
    """Leftmost pairing per token type; maximum cardinality, not min-crossing."""
    ref_positions: dict[str, list[int]] = {}
    for j, tok in enumerate(ref):
        ref_positions.setdefault(tok, []).append(j)
    hypo_positions: dict[str, list[int]] = {}
    for i, tok in enumerate(hypo):
        hypo_positions.setdefault(tok, []).append(i)
    pairs = []
    for tok, his in hypo_positions.items():
        pairs.extend(zip(his, ref_positions.get(tok, [])))
    return sorted(pairs)


def meteor_align(
    hypo: Sequence[str], ref: Sequence[str], node_cap: int = DEFAULT_NODE_CAP
) -> list[tuple[int, int]]:
    """Align equal unigrams one-to-one: maximum cardinality, minimum crossings.

    Returns (hypo_index, ref_index) pairs sorted by hypo index. Falls back to
    leftmost-greedy matching when the exact search exceeds `node_cap` states.
    """
    hypo = list(hypo)
    ref = list(ref)
    if len(ref) > 63:  # bitmask search domain; long refs go straight to greedy
        return _greedy_align(hypo, ref)
    try:
        return _exact_align(hypo, ref, node_cap)
    except _SearchBudgetExceeded:
        return _greedy_align(hypo, ref)


def count_chunks(pairs: Sequence[tuple[int, int]]) -> int:
    """Number of maximal runs of mappings adjacent and in order on both sides."""
    pairs = sorted(pairs)
    chunks = 0
    prev = None
    for hi, ri in pairs:
        if prev is None or (hi, ri) != (prev[0] + 1, prev[1] + 1):
            chunks += 1
        prev = (hi, ri)
    return chunks


def _score_pair(hypo: Sequence[str], ref: Sequence[str], chunk_mode: str, node_cap: int) -> float:
    pairs = meteor_align(hypo, ref, node_cap=node_cap)
    m = len(pairs)
    if m == 0:
        return 0.0
    p = m / len(hypo)
    r = m / len(ref)
    f_mean = 10.0 * p * r / (r + 9.0 * p)
    c = count_chunks(pairs) if chunk_mode == "standard" else m
    penalty = 0.5 * (c / m) ** 3
    return f_mean * (1.0 - penalty)


def meteor(corpus, chunk_mode: str = "standard", node_cap: int = DEFAULT_NODE_CAP) -> float:
    """Corpus METEOR: mean over items of the best per-reference score."""
    if not corpus:
        raise ValueError("empty corpus")
    if chunk_mode not in ("standard", "paper-literal"):
        raise ValueError(f"unknown chunk_mode {chunk_mode!r}")
    scores = []
    for item in corpus:
        hypo = list(item.hypothesis)
        if not hypo:
            scores.append(0.0)
            continue
        scores.append(
            max(_score_pair(hypo, list(ref), chunk_mode, node_cap) for ref in item.references)
        )
    return math.fsum(scores) / len(scores)
