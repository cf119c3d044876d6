"""Dynamic pointer scoring and autoregressive greedy decoding.

Pointer scores let a decoder copy detected scene-text tokens: projected
decoder states are matched against projected scene-text features,

    ocr = (h w_h + b_h) (x_s w_s + b_s)^T    of shape (steps, n_scene)

and the emitted token per step is the argmax over the concatenation of
vocabulary logits and pointer scores. Indices below the vocabulary size are
vocabulary tokens; index v + i copies scene text i.
"""

from __future__ import annotations

import numpy as np

from .ops import AttentionConfig, init_mha_weights, mha_forward

__all__ = [
    "pointer_scores",
    "pointer_forward",
    "pointer_backward",
    "init_pointer_weights",
    "output_select",
    "init_decoder_weights",
    "greedy_decode",
]


def init_pointer_weights(dim: int, rng) -> dict:
    return {
        "w_h": rng.uniform(-0.1, 0.1, size=(dim, dim)),
        "b_h": rng.uniform(-0.1, 0.1, size=dim),
        "w_s": rng.uniform(-0.1, 0.1, size=(dim, dim)),
        "b_s": rng.uniform(-0.1, 0.1, size=dim),
    }


def pointer_forward(
    h: np.ndarray,
    x_scene: np.ndarray,
    w_h: np.ndarray,
    b_h: np.ndarray,
    w_s: np.ndarray,
    b_s: np.ndarray,
) -> tuple[np.ndarray, dict]:
    h = np.asarray(h, dtype=np.float64)
    x_scene = np.asarray(x_scene, dtype=np.float64)
    if h.shape[1] != w_h.shape[0] or x_scene.shape[1] != w_s.shape[0]:
        raise ValueError(
            f"dim mismatch: h {h.shape} vs w_h {w_h.shape}, "
            f"x_scene {x_scene.shape} vs w_s {w_s.shape}"
        )
    h_proj = h @ w_h + b_h
    s_proj = x_scene @ w_s + b_s
    ocr = h_proj @ s_proj.T
    return ocr, {"h_proj": h_proj, "s_proj": s_proj, "w_h": w_h, "w_s": w_s}


def pointer_backward(cache: dict, grad_ocr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(d_h, d_x_scene) for a cached pointer forward."""
    d_h_proj = grad_ocr @ cache["s_proj"]
    d_s_proj = grad_ocr.T @ cache["h_proj"]
    return d_h_proj @ cache["w_h"].T, d_s_proj @ cache["w_s"].T


def pointer_scores(h, x_scene, w_h, b_h, w_s, b_s) -> np.ndarray:
    """Copy scores of every decoder step against every scene text."""
    ocr, _ = pointer_forward(h, x_scene, w_h, b_h, w_s, b_s)
    return ocr


def output_select(h_vocab: np.ndarray, ocr: np.ndarray) -> np.ndarray:
    """Per-row argmax over [vocabulary logits, pointer scores].

    Returns integer indices; index >= vocab size means copy scene text
    (index - vocab size).
    """
    h_vocab = np.asarray(h_vocab, dtype=np.float64)
    ocr = np.asarray(ocr, dtype=np.float64).reshape(h_vocab.shape[0], -1)
    combined = np.concatenate([h_vocab, ocr], axis=1)
    return combined.argmax(axis=1)


# --------------------------------------------------------------------------
# greedy decoding with a masked self-attention + cross-attention stack

def init_decoder_weights(
    vocab_size: int,
    cfg: AttentionConfig,
    max_len: int,
    rng,
    layers: int = 3,
    with_pointer: bool = False,
) -> dict:
    dim = cfg.model_dim
    weights = {
        "embed": rng.uniform(-0.1, 0.1, size=(vocab_size, dim)),
        "pos": rng.uniform(-0.1, 0.1, size=(max_len + 1, dim)),
        "w_out": rng.uniform(-0.1, 0.1, size=(dim, vocab_size)),
        "b_out": rng.uniform(-0.1, 0.1, size=vocab_size),
        "layers": [
            {"self": init_mha_weights(dim, rng), "cross": init_mha_weights(dim, rng)}
            for _ in range(layers)
        ],
    }
    if with_pointer:
        weights["pointer"] = init_pointer_weights(dim, rng)
    return weights


def _decoder_states(
    token_indices: list[int],
    fused: np.ndarray,
    weights: dict,
    cfg: AttentionConfig,
    x_scene: np.ndarray | None,
) -> np.ndarray:
    vocab_size = weights["embed"].shape[0]
    rows = [
        weights["embed"][idx] if idx < vocab_size else x_scene[idx - vocab_size]
        for idx in token_indices
    ]
    h = np.stack(rows) + weights["pos"][: len(rows)]
    steps = len(rows)
    causal = np.tril(np.ones((steps, steps), dtype=bool))
    for layer in weights["layers"]:
        self_out, _ = mha_forward(h, h, h, cfg, layer["self"], mask=causal)
        h = h + self_out
        cross_out, _ = mha_forward(h, fused, fused, cfg, layer["cross"])
        h = h + cross_out
    return h


def greedy_decode(
    fused: np.ndarray,
    weights: dict,
    cfg: AttentionConfig,
    max_len: int,
    bos: int,
    eos: int,
    x_scene: np.ndarray | None = None,
) -> list[int]:
    """Autoregressive argmax decoding conditioned on the fused features.

    Emits up to `max_len` indices, stopping early (without emitting) at
    `eos`. When scene-text features and pointer weights are present, each
    step's scores are [vocabulary, pointer] and copy indices (>= vocab size)
    are fed back through the scene-text feature rows. Deterministic given
    the weights.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    fused = np.asarray(fused, dtype=np.float64)
    if fused.ndim == 1:
        fused = fused.reshape(1, -1)
    use_pointer = (
        x_scene is not None and x_scene.shape[0] > 0 and "pointer" in weights
    )
    emitted: list[int] = []
    for _ in range(max_len):
        states = _decoder_states([bos, *emitted], fused, weights, cfg, x_scene)
        last = states[-1:]
        logits = (last @ weights["w_out"] + weights["b_out"]).reshape(-1)
        if use_pointer:
            p = weights["pointer"]
            ocr = pointer_scores(last, x_scene, p["w_h"], p["b_h"], p["w_s"], p["b_s"])
            logits = np.concatenate([logits, ocr.reshape(-1)])
        nxt = int(logits.argmax())
        if nxt == eos:
            break
        emitted.append(nxt)
    return emitted
