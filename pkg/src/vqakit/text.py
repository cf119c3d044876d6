"""Text normalization, tokenization and n-gram counting.

Everything downstream (metrics, analysis, validation) works on sequences of
tokens produced here. Vietnamese input is expected to be word-segmented
upstream (multi-syllable words joined with underscores); this module never
splits or merges syllables itself.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

__all__ = [
    "TokenSeq",
    "normalize",
    "tokenize",
    "ngrams",
    "clipped_counts",
    "has_unnormalized_price",
]

# Digit run with optional thousands separators, then a currency marker.
# "đồng" before "đ" and "vnd" before "d" so the longer marker wins; the
# lookahead keeps "đ"/"d" from eating the first letter of a following word
# ("độ", "dân", ...).
_PRICE_RE = re.compile(r"(\d+(?:[.,]\d+)*)\s*(?:đồng|đ|vnd|d)(?!\w)")

# Connector punctuation (Pc, i.e. underscore) is exempt: it joins the
# syllables of pre-segmented Vietnamese words.
_SPACED_CATEGORIES = frozenset({"Pd", "Ps", "Pe", "Pi", "Pf", "Po"})


def _rewrite_price(match: re.Match) -> str:
    amount = int(match.group(1).replace(".", "").replace(",", ""))
    return f"{amount:,} đồng"


def _space_punctuation(text: str) -> str:
    out: list[str] = []
    for i, ch in enumerate(text):
        if unicodedata.category(ch) in _SPACED_CATEGORIES:
            # Keep thousands separators glued to their digits so the
            # canonical price form survives a second normalize pass.
            prev_digit = i > 0 and text[i - 1].isdigit()
            next_digit = i + 1 < len(text) and text[i + 1].isdigit()
            if ch in ",." and prev_digit and next_digit:
                out.append(ch)
            else:
                out.append(f" {ch} ")
        else:
            out.append(ch)
    return "".join(out)


def has_unnormalized_price(text: str) -> bool:
    """True when `text` contains a price not in the canonical "#,### đồng" form."""
    lowered = unicodedata.normalize("NFC", text).lower()
    return _PRICE_RE.sub(_rewrite_price, lowered) != lowered


def normalize(raw: str, language: str = "vi") -> str:
    """Normalize raw text: NFC, lowercase, canonical prices, spaced punctuation.

    Price expressions such as "25000đ", "25.000 VND" or "25,000 đồng" are
    rewritten to the canonical "#,### đồng" form. The function is idempotent:
    normalizing already-normalized text is a no-op.
    """
    text = unicodedata.normalize("NFC", raw)
    text = text.lower()
    text = _PRICE_RE.sub(_rewrite_price, text)
    text = _space_punctuation(text)
    # rewrites can leave a combining mark after inserted text; recompose so
    # the output is NFC and a second pass is a byte-level no-op
    return unicodedata.normalize("NFC", " ".join(text.split()))


@dataclass(frozen=True)
class TokenSeq:
    """An ordered, whitespace-free token sequence with a language tag."""

    tokens: tuple[str, ...]
    language: str = "vi"

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for tok in self.tokens:
            if not tok or any(c.isspace() for c in tok):
                raise ValueError(f"invalid token {tok!r}: empty or contains whitespace")

    @classmethod
    def from_text(cls, raw: str, language: str = "vi") -> "TokenSeq":
        """Normalize `raw` and split it on whitespace."""
        return cls(tuple(normalize(raw, language).split()), language)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __getitem__(self, idx):
        return self.tokens[idx]

    def text(self) -> str:
        return " ".join(self.tokens)


def tokenize(normalized: str, language: str = "vi", require_nonempty: bool = False) -> TokenSeq:
    """Split normalized text on whitespace.

    Vietnamese multi-syllable words must already be underscore-joined by the
    upstream segmenter; no segmentation happens here.
    """
    tokens = tuple(normalized.split())
    if require_nonempty and not tokens:
        raise ValueError("empty input where a non-empty token sequence is required")
    return TokenSeq(tokens, language)


def ngrams(seq: Iterable[str], n: int) -> Counter:
    """Count the contiguous n-grams of `seq` as tuples of tokens."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    tokens = tuple(seq)
    return Counter(tokens[i : i + n] for i in range(len(tokens) - n + 1))


def _arity(counts: Mapping[tuple, int]) -> int | None:
    arities = {len(g) for g in counts}
    if len(arities) > 1:
        raise ValueError(f"mixed n-gram arities in counts: {sorted(arities)}")
    return arities.pop() if arities else None


def clipped_counts(hypo: Mapping[tuple, int], refs: Iterable[Mapping[tuple, int]]) -> dict:
    """Clip hypothesis n-gram counts at the per-n-gram maximum over references.

    Returns an entry for every hypothesis n-gram, including ones absent from
    all references (clipped to 0). All inputs must share one arity.
    """
    refs = list(refs)
    arities = {a for c in [hypo, *refs] for a in [_arity(c)] if a is not None}
    if len(arities) > 1:
        raise ValueError(f"mixed n-gram arities across inputs: {sorted(arities)}")
    return {
        gram: min(count, max((ref.get(gram, 0) for ref in refs), default=0))
        for gram, count in hypo.items()
    }
