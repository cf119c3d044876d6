"""Forward/backward reference implementations of the three fusion mechanisms.

* stacked attention: glimpse-stacked spatial attention over image features
  guided by a single question vector, spatially pooled per glimpse and summed
  (or concatenated) into one fused vector.
* guided attention: self-attention refines image and question features, then
  a cross-attention with the image as query keeps only question-relevant
  image features; outputs are row-concatenated.
* trimodal fusion: question self-attention guides separate context (scene
  text) and spatial (image) cross-attentions; both attended outputs are
  pooled to a shared row count with a learned query and summed element-wise.

Backward passes are hand-derived compositions of the primitive VJPs in
`ops`; each returns gradients with respect to the data inputs.
"""

from __future__ import annotations

import numpy as np

from .ops import (
    AttentionConfig,
    init_mha_weights,
    mha_backward,
    mha_forward,
    softmax_rows,
    softmax_rows_vjp,
)

__all__ = [
    "stacked_attention_fuse",
    "stacked_forward",
    "stacked_backward",
    "init_stacked_weights",
    "guided_attention_fuse",
    "guided_forward",
    "guided_backward",
    "init_guided_weights",
    "trimodal_fuse",
    "trimodal_forward",
    "trimodal_backward",
    "init_trimodal_weights",
]


# --------------------------------------------------------------------------
# stacked attention (single question vector, D glimpses)

def init_stacked_weights(d_image: int, d_question: int, glimpses: int, rng) -> dict:
    return {
        "w_x": rng.uniform(-0.1, 0.1, size=(glimpses, glimpses)),
        "w_i": rng.uniform(-0.1, 0.1, size=(d_image, glimpses)),
        "w_q": rng.uniform(-0.1, 0.1, size=(d_question, glimpses)),
    }


def stacked_forward(
    x_image: np.ndarray,
    x_question: np.ndarray,
    weights: dict,
    concat_glimpses: bool = False,
) -> tuple[np.ndarray, dict]:
    """Glimpse attention over the spatial axis; returns (fused vector, cache).

    The question vector is repeated across the spatial axis; attention logits
    are projected to one column per glimpse and softmaxed over the spatial
    positions. Each glimpse pools the image rows with its weights; glimpse
    results are summed (default) or concatenated.
    """
    x_image = np.asarray(x_image, dtype=np.float64)
    x_question = np.asarray(x_question, dtype=np.float64).reshape(-1)
    s, d_image = x_image.shape
    if weights["w_i"].shape[0] != d_image:
        raise ValueError(
            f"w_i expects image dim {weights['w_i'].shape[0]}, got {d_image}"
        )
    if weights["w_q"].shape[0] != x_question.shape[0]:
        raise ValueError(
            f"w_q expects question dim {weights['w_q'].shape[0]}, "
            f"got {x_question.shape[0]}"
        )
    x_q_rep = np.tile(x_question, (s, 1))
    pre = x_image @ weights["w_i"] + x_q_rep @ weights["w_q"]  # s x D
    logits = pre @ weights["w_x"]  # s x D
    attn = softmax_rows(logits.T).T  # softmax over the spatial axis, per glimpse
    if concat_glimpses:
        fused = (attn.T @ x_image).reshape(-1)  # D*d_image
    else:
        fused = x_image.T @ attn.sum(axis=1)  # d_image
    cache = {
        "x_image": x_image,
        "attn": attn,
        "weights": weights,
        "concat": concat_glimpses,
    }
    return fused, cache


def stacked_backward(cache: dict, grad_fused: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(d_x_image, d_x_question) for a cached stacked-attention forward."""
    x_image = cache["x_image"]
    attn = cache["attn"]
    weights = cache["weights"]
    glimpses = attn.shape[1]
    if cache["concat"]:
        grad_mat = grad_fused.reshape(glimpses, -1)  # D x d_image
        d_attn = x_image @ grad_mat.T  # s x D
        d_x_image = attn @ grad_mat
    else:
        pooled_w = attn.sum(axis=1)
        d_pooled = x_image @ grad_fused  # s
        d_attn = np.tile(d_pooled[:, None], (1, glimpses))
        d_x_image = np.outer(pooled_w, grad_fused)
    d_logits = softmax_rows_vjp(attn.T, d_attn.T).T  # per-glimpse spatial softmax
    d_pre = d_logits @ weights["w_x"].T
    d_x_image += d_pre @ weights["w_i"].T
    d_x_question = (d_pre @ weights["w_q"].T).sum(axis=0)
    return d_x_image, d_x_question


def stacked_attention_fuse(
    x_image: np.ndarray,
    x_question: np.ndarray,
    weights: dict,
    concat_glimpses: bool = False,
) -> np.ndarray:
    fused, _ = stacked_forward(x_image, x_question, weights, concat_glimpses)
    return fused


# --------------------------------------------------------------------------
# guided attention (image queries question)

def init_guided_weights(cfg: AttentionConfig, rng) -> dict:
    return {
        "self_image": init_mha_weights(cfg.model_dim, rng),
        "self_question": init_mha_weights(cfg.model_dim, rng),
        "cross": init_mha_weights(cfg.model_dim, rng),
    }


def guided_forward(
    x_image: np.ndarray,
    x_question: np.ndarray,
    cfg: AttentionConfig,
    weights: dict,
) -> tuple[np.ndarray, dict]:
    """Self-attend both inputs, cross-attend image over question, concat rows."""
    image_refined, c_image = mha_forward(x_image, x_image, x_image, cfg, weights["self_image"])
    question_refined, c_question = mha_forward(
        x_question, x_question, x_question, cfg, weights["self_question"]
    )
    image_guided, c_cross = mha_forward(
        image_refined, question_refined, question_refined, cfg, weights["cross"]
    )
    fused = np.concatenate([image_guided, question_refined], axis=0)
    cache = {"c_image": c_image, "c_question": c_question, "c_cross": c_cross,
             "s": x_image.shape[0]}
    return fused, cache


def guided_backward(cache: dict, grad_fused: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(d_x_image, d_x_question) for a cached guided-attention forward."""
    s = cache["s"]
    d_guided = grad_fused[:s]
    d_question_refined = grad_fused[s:].copy()
    d_image_refined, d_qk, d_qv = mha_backward(cache["c_cross"], d_guided)
    d_question_refined += d_qk + d_qv
    dq_q, dq_k, dq_v = mha_backward(cache["c_question"], d_question_refined)
    d_x_question = dq_q + dq_k + dq_v
    di_q, di_k, di_v = mha_backward(cache["c_image"], d_image_refined)
    d_x_image = di_q + di_k + di_v
    return d_x_image, d_x_question


def guided_attention_fuse(
    x_image: np.ndarray,
    x_question: np.ndarray,
    cfg: AttentionConfig,
    weights: dict,
) -> np.ndarray:
    fused, _ = guided_forward(x_image, x_question, cfg, weights)
    return fused


# --------------------------------------------------------------------------
# trimodal fusion (context + spatial attention over the guided question)

def init_trimodal_weights(
    cfg: AttentionConfig, n_scene: int, s_regions: int, rng, pool_rows: int | None = None
) -> dict:
    q = pool_rows if pool_rows is not None else (min(n_scene, s_regions) or s_regions)
    return {
        "self_question": init_mha_weights(cfg.model_dim, rng),
        "context": init_mha_weights(cfg.model_dim, rng),
        "spatial": init_mha_weights(cfg.model_dim, rng),
        "pool_query": rng.uniform(-0.1, 0.1, size=(q, cfg.model_dim)),
    }


def _pool_forward(pool_query: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, dict]:
    scale = np.sqrt(pool_query.shape[1])
    attn = softmax_rows(pool_query @ x.T / scale)
    return attn @ x, {"pool_query": pool_query, "x": x, "attn": attn, "scale": scale}


def _pool_backward(cache: dict, grad_out: np.ndarray) -> np.ndarray:
    attn = cache["attn"]
    d_attn = grad_out @ cache["x"].T
    d_scores = softmax_rows_vjp(attn, d_attn) / cache["scale"]
    return attn.T @ grad_out + d_scores.T @ cache["pool_query"]


def trimodal_forward(
    x_image: np.ndarray,
    x_scene: np.ndarray,
    x_question: np.ndarray,
    cfg: AttentionConfig,
    weights: dict,
) -> tuple[np.ndarray, dict]:
    """Context/spatial attention over self-attended question; pooled sum.

    Scene-text and image features attend over the question representation,
    then both are pooled to the learned-query row count and summed. With no
    scene text (0 rows) the context side contributes an exact zero matrix.
    """
    x_image = np.asarray(x_image, dtype=np.float64)
    x_scene = np.asarray(x_scene, dtype=np.float64)
    x_question = np.asarray(x_question, dtype=np.float64)
    question_attended, c_question = mha_forward(
        x_question, x_question, x_question, cfg, weights["self_question"]
    )
    spatial, c_spatial = mha_forward(
        x_image, question_attended, question_attended, cfg, weights["spatial"]
    )
    pooled_spatial, c_pool_spatial = _pool_forward(weights["pool_query"], spatial)
    cache = {
        "c_question": c_question,
        "c_spatial": c_spatial,
        "c_pool_spatial": c_pool_spatial,
        "n_scene": x_scene.shape[0],
    }
    if x_scene.shape[0] > 0:
        context, c_context = mha_forward(
            x_scene, question_attended, question_attended, cfg, weights["context"]
        )
        pooled_context, c_pool_context = _pool_forward(weights["pool_query"], context)
        cache["c_context"] = c_context
        cache["c_pool_context"] = c_pool_context
    else:
        pooled_context = np.zeros_like(pooled_spatial)
    return pooled_context + pooled_spatial, cache


def trimodal_backward(
    cache: dict, grad_fused: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(d_x_image, d_x_scene, d_x_question) for a cached fusion forward."""
    d_spatial = _pool_backward(cache["c_pool_spatial"], grad_fused)
    d_image, d_qk, d_qv = mha_backward(cache["c_spatial"], d_spatial)
    d_question_attended = d_qk + d_qv
    if cache["n_scene"] > 0:
        d_context = _pool_backward(cache["c_pool_context"], grad_fused)
        d_scene, d_ck, d_cv = mha_backward(cache["c_context"], d_context)
        d_question_attended += d_ck + d_cv
    else:
        d_scene = np.zeros((0, d_image.shape[1]))
    dq_q, dq_k, dq_v = mha_backward(cache["c_question"], d_question_attended)
    return d_image, d_scene, dq_q + dq_k + dq_v


def trimodal_fuse(
    x_image: np.ndarray,
    x_scene: np.ndarray,
    x_question: np.ndarray,
    cfg: AttentionConfig,
    weights: dict,
) -> np.ndarray:
    fused, _ = trimodal_forward(x_image, x_scene, x_question, cfg, weights)
    return fused
