"""Primitive attention operations with hand-derived backward passes.

Everything is float64 and pure: forward functions return (output, cache) and
the matching backward consumes the cache plus the upstream gradient. The
convention for linear maps is row vectors, `x @ w + b` with `w` shaped
(in, out). Attention masks are boolean (query_len, key_len) arrays where
True marks positions a query may attend to; masked weights are exactly 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AttentionConfig",
    "softmax_rows",
    "softmax_rows_vjp",
    "multi_head_attention",
    "mha_forward",
    "mha_backward",
    "init_mha_weights",
]

MHA_WEIGHT_NAMES = ("w_q", "b_q", "w_k", "b_k", "w_v", "b_v", "w_o", "b_o")


@dataclass(frozen=True)
class AttentionConfig:
    heads: int
    model_dim: int
    glimpses: int = 1

    def __post_init__(self) -> None:
        if self.heads < 1 or self.glimpses < 1:
            raise ValueError("heads and glimpses must be >= 1")
        if self.model_dim % self.heads != 0:
            raise ValueError(
                f"model_dim {self.model_dim} not divisible by heads {self.heads}"
            )

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.heads


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; -inf entries come out exactly 0."""
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        return m.copy()
    shifted = m - m.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_rows_vjp(out: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Gradient through a row softmax given its output."""
    inner = (grad_out * out).sum(axis=-1, keepdims=True)
    return out * (grad_out - inner)


def init_mha_weights(dim: int, rng: np.random.Generator) -> dict:
    w = {}
    for name in MHA_WEIGHT_NAMES:
        shape = (dim, dim) if name.startswith("w") else (dim,)
        w[name] = rng.uniform(-0.1, 0.1, size=shape)
    return w


def _split_heads(x: np.ndarray, heads: int) -> list[np.ndarray]:
    return np.split(x, heads, axis=1)


def mha_forward(
    query: np.ndarray,
    key: np.ndarray,
    value: np.ndarray,
    cfg: AttentionConfig,
    weights: dict,
    mask: np.ndarray | None = None,
) -> tuple[np.ndarray, dict]:
    """Scaled dot-product multi-head attention; returns (output, cache)."""
    query = np.asarray(query, dtype=np.float64)
    key = np.asarray(key, dtype=np.float64)
    value = np.asarray(value, dtype=np.float64)
    dim = cfg.model_dim
    if query.shape[1] != dim or key.shape[1] != dim or value.shape[1] != dim:
        raise ValueError(
            f"expected feature dim {dim}, got query {query.shape}, "
            f"key {key.shape}, value {value.shape}"
        )
    if key.shape[0] != value.shape[0]:
        raise ValueError(f"key rows {key.shape[0]} != value rows {value.shape[0]}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (query.shape[0], key.shape[0]):
            raise ValueError(
                f"mask shape {mask.shape} != {(query.shape[0], key.shape[0])}"
            )
        if mask.size and (~mask).all(axis=1).any():
            raise ValueError("fully masked attention row")

    q = query @ weights["w_q"] + weights["b_q"]
    k = key @ weights["w_k"] + weights["b_k"]
    v = value @ weights["w_v"] + weights["b_v"]
    scale = np.sqrt(cfg.head_dim)

    heads_out = []
    head_caches = []
    for qh, kh, vh in zip(
        _split_heads(q, cfg.heads), _split_heads(k, cfg.heads), _split_heads(v, cfg.heads)
    ):
        scores = qh @ kh.T / scale
        if mask is not None:
            scores = np.where(mask, scores, -np.inf)
        attn = softmax_rows(scores)
        heads_out.append(attn @ vh)
        head_caches.append((qh, kh, vh, attn))
    concat = np.concatenate(heads_out, axis=1)
    out = concat @ weights["w_o"] + weights["b_o"]
    cache = {
        "query": query,
        "key": key,
        "value": value,
        "weights": weights,
        "cfg": cfg,
        "head_caches": head_caches,
        "scale": scale,
    }
    return out, cache


def mha_backward(cache: dict, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Input gradients (d_query, d_key, d_value) for a cached forward pass."""
    weights = cache["weights"]
    cfg: AttentionConfig = cache["cfg"]
    scale = cache["scale"]
    d_concat = grad_out @ weights["w_o"].T
    d_q_heads, d_k_heads, d_v_heads = [], [], []
    for (qh, kh, vh, attn), d_oh in zip(
        cache["head_caches"], _split_heads(d_concat, cfg.heads)
    ):
        d_attn = d_oh @ vh.T
        d_vh = attn.T @ d_oh
        d_scores = softmax_rows_vjp(attn, d_attn) / scale
        d_q_heads.append(d_scores @ kh)
        d_k_heads.append(d_scores.T @ qh)
        d_v_heads.append(d_vh)
    d_q = np.concatenate(d_q_heads, axis=1)
    d_k = np.concatenate(d_k_heads, axis=1)
    d_v = np.concatenate(d_v_heads, axis=1)
    d_query = d_q @ weights["w_q"].T
    d_key = d_k @ weights["w_k"].T
    d_value = d_v @ weights["w_v"].T
    return d_query, d_key, d_value


def multi_head_attention(
    query: np.ndarray,
    key: np.ndarray,
    value: np.ndarray,
    cfg: AttentionConfig,
    weights: dict,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Forward-only multi-head attention (see `mha_forward`)."""
    out, _ = mha_forward(query, key, value, cfg, weights, mask=mask)
    return out


def attention_weights(
    query: np.ndarray,
    key: np.ndarray,
    cfg: AttentionConfig,
    weights: dict,
    mask: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Per-head attention weight matrices, for invariant checks."""
    out, cache = mha_forward(query, key, key, cfg, weights, mask=mask)
    return [attn for (_, _, _, attn) in cache["head_caches"]]
