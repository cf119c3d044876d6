"""Kernel self-verification: shape contracts, attention invariants, argmax
invariances, decode determinism and finite-difference gradient checks.

Everything is seeded, so a selfcheck report is a pure function of its
configuration. Used by the CLI's kernels-selfcheck command and by the
acceptance suite.
"""

from __future__ import annotations

import numpy as np

from .fusion import (
    guided_backward,
    guided_forward,
    init_guided_weights,
    init_trimodal_weights,
    init_stacked_weights,
    trimodal_backward,
    trimodal_forward,
    stacked_backward,
    stacked_forward,
)
from .gradcheck import NonFiniteError, grad_check
from .ops import AttentionConfig, attention_weights, init_mha_weights, mha_backward, mha_forward, softmax_rows
from .pointer import (
    greedy_decode,
    init_decoder_weights,
    init_pointer_weights,
    output_select,
    pointer_backward,
    pointer_forward,
)
from .schedule import lr_schedule

__all__ = ["run_selfcheck", "GRAD_TOLERANCE"]

GRAD_TOLERANCE = 1e-4
ROW_SUM_TOLERANCE = 1e-9

_DIM = 8
_HEADS = 2
_CFG = AttentionConfig(heads=_HEADS, model_dim=_DIM)
_S, _L, _N = 3, 4, 2  # image rows, question rows, scene-text rows
_D_IMAGE, _D_QUESTION, _GLIMPSES = 5, 3, 2


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _grad_cases(seed: int):
    """One (name, forward, grad, inputs) tuple per differentiable kernel."""
    rng = _rng(seed)
    mha_w = init_mha_weights(_DIM, rng)
    stacked_w = init_stacked_weights(_D_IMAGE, _D_QUESTION, _GLIMPSES, rng)
    guided_w = init_guided_weights(_CFG, rng)
    trimodal_w = init_trimodal_weights(_CFG, _N, _S, rng)
    pointer_w = init_pointer_weights(_DIM, rng)
    causal = np.tril(np.ones((_L, _L), dtype=bool))

    def u(*shape):
        return rng.uniform(-1.0, 1.0, size=shape)

    cases = [
        (
            "softmax_rows",
            lambda inp: softmax_rows(inp["m"]),
            lambda inp: {
                "m": _softmax_grad(inp["m"]),
            },
            {"m": u(3, 4)},
        ),
        (
            "stacked_attention_fuse",
            lambda inp: stacked_forward(inp["x_image"], inp["x_question"], stacked_w)[0],
            lambda inp: dict(
                zip(
                    ("x_image", "x_question"),
                    stacked_backward(
                        stacked_forward(inp["x_image"], inp["x_question"], stacked_w)[1],
                        np.ones(_D_IMAGE),
                    ),
                )
            ),
            {"x_image": u(_S, _D_IMAGE), "x_question": u(_D_QUESTION)},
        ),
        (
            "multi_head_attention",
            lambda inp: mha_forward(inp["query"], inp["key"], inp["value"], _CFG, mha_w)[0],
            lambda inp: _mha_grad(inp, mha_w, None),
            {"query": u(_L, _DIM), "key": u(_N + 1, _DIM), "value": u(_N + 1, _DIM)},
        ),
        (
            "multi_head_attention_causal",
            lambda inp: mha_forward(
                inp["query"], inp["key"], inp["value"], _CFG, mha_w, mask=causal
            )[0],
            lambda inp: _mha_grad(inp, mha_w, causal),
            {"query": u(_L, _DIM), "key": u(_L, _DIM), "value": u(_L, _DIM)},
        ),
        (
            "guided_attention_fuse",
            lambda inp: guided_forward(inp["x_image"], inp["x_question"], _CFG, guided_w)[0],
            lambda inp: dict(
                zip(
                    ("x_image", "x_question"),
                    guided_backward(
                        guided_forward(inp["x_image"], inp["x_question"], _CFG, guided_w)[1],
                        np.ones((_S + _L, _DIM)),
                    ),
                )
            ),
            {"x_image": u(_S, _DIM), "x_question": u(_L, _DIM)},
        ),
        (
            "trimodal_fuse",
            lambda inp: trimodal_forward(
                inp["x_image"], inp["x_scene"], inp["x_question"], _CFG, trimodal_w
            )[0],
            lambda inp: dict(
                zip(
                    ("x_image", "x_scene", "x_question"),
                    trimodal_backward(
                        trimodal_forward(
                            inp["x_image"], inp["x_scene"], inp["x_question"], _CFG, trimodal_w
                        )[1],
                        np.ones((trimodal_w["pool_query"].shape[0], _DIM)),
                    ),
                )
            ),
            {"x_image": u(_S, _DIM), "x_scene": u(_N, _DIM), "x_question": u(_L, _DIM)},
        ),
        (
            "pointer_scores",
            lambda inp: pointer_forward(
                inp["h"], inp["x_scene"],
                pointer_w["w_h"], pointer_w["b_h"], pointer_w["w_s"], pointer_w["b_s"],
            )[0],
            lambda inp: dict(
                zip(
                    ("h", "x_scene"),
                    pointer_backward(
                        pointer_forward(
                            inp["h"], inp["x_scene"],
                            pointer_w["w_h"], pointer_w["b_h"],
                            pointer_w["w_s"], pointer_w["b_s"],
                        )[1],
                        np.ones((_L, _N)),
                    ),
                )
            ),
            {"h": u(_L, _DIM), "x_scene": u(_N, _DIM)},
        ),
    ]
    return cases


def _softmax_grad(m: np.ndarray) -> np.ndarray:
    from .ops import softmax_rows_vjp

    out = softmax_rows(m)
    return softmax_rows_vjp(out, np.ones_like(out))


def _mha_grad(inp, weights, mask):
    out, cache = mha_forward(inp["query"], inp["key"], inp["value"], _CFG, weights, mask=mask)
    d_query, d_key, d_value = mha_backward(cache, np.ones_like(out))
    return {"query": d_query, "key": d_key, "value": d_value}


def _check_gradients(base_seed: int, seeds_per_kernel: int) -> dict:
    results = {}
    for offset in range(seeds_per_kernel):
        for name, forward, grad, inputs in _grad_cases(base_seed + offset):
            try:
                err = grad_check(forward, grad, inputs)
            except NonFiniteError as exc:
                results.setdefault(name, {"errors": [], "failures": []})
                results[name]["failures"].append(str(exc))
                continue
            results.setdefault(name, {"errors": [], "failures": []})
            results[name]["errors"].append(err)
    out = {}
    for name, r in results.items():
        max_err = float(max(r["errors"])) if r["errors"] else float("inf")
        out[name] = {
            "max_relative_error": max_err,
            "seeds": seeds_per_kernel,
            "passed": bool(not r["failures"] and max_err < GRAD_TOLERANCE),
        }
    return out


def _check_shapes_and_invariants(seed: int) -> dict:
    rng = _rng(seed)
    checks = {}

    # softmax rows sum to 1; large-offset row stays finite
    m = rng.uniform(-1, 1, size=(5, 7))
    sm = softmax_rows(m)
    uniform = softmax_rows(np.zeros((2, 4)))
    big = softmax_rows(np.array([[0.0, 1000.0]]))
    checks["softmax_rows"] = {
        "row_sums_ok": bool(np.abs(sm.sum(axis=1) - 1.0).max() < 1e-12),
        "uniform_ok": bool(np.allclose(uniform, 0.25, atol=1e-15)),
        "stability_ok": bool(np.isfinite(big).all() and abs(big[0, 1] - 1.0) < 1e-12),
    }
    checks["softmax_rows"]["passed"] = all(checks["softmax_rows"].values())

    # stacked attention: output length d_image; uniform attention = D * column mean
    stacked_w = init_stacked_weights(_D_IMAGE, _D_QUESTION, _GLIMPSES, rng)
    x_image = rng.uniform(-1, 1, size=(_S, _D_IMAGE))
    x_question = rng.uniform(-1, 1, size=_D_QUESTION)
    fused, cache = stacked_forward(x_image, x_question, stacked_w)
    zero_w = {k: np.zeros_like(v) for k, v in stacked_w.items()}
    uniform_fused, _ = stacked_forward(x_image, x_question, zero_w)
    concat_fused, _ = stacked_forward(x_image, x_question, stacked_w, concat_glimpses=True)
    checks["stacked_attention_fuse"] = {
        "shape_ok": fused.shape == (_D_IMAGE,),
        "concat_shape_ok": concat_fused.shape == (_GLIMPSES * _D_IMAGE,),
        "attn_columns_sum_ok": bool(
            np.abs(cache["attn"].sum(axis=0) - 1.0).max() < ROW_SUM_TOLERANCE
        ),
        "uniform_is_mean_pooling": bool(
            np.allclose(uniform_fused, _GLIMPSES * x_image.mean(axis=0), atol=1e-12)
        ),
    }
    checks["stacked_attention_fuse"]["passed"] = all(checks["stacked_attention_fuse"].values())

    # multi-head attention: rows sum to 1, causal masked weights exactly 0
    mha_w = init_mha_weights(_DIM, rng)
    query = rng.uniform(-1, 1, size=(_L, _DIM))
    causal = np.tril(np.ones((_L, _L), dtype=bool))
    heads = attention_weights(query, query, _CFG, mha_w, mask=causal)
    row_sums_ok = all(np.abs(h.sum(axis=1) - 1.0).max() < ROW_SUM_TOLERANCE for h in heads)
    masked_zero = all((h[~causal] == 0.0).all() for h in heads)
    out = mha_forward(query, query, query, _CFG, mha_w, mask=causal)[0]
    checks["multi_head_attention"] = {
        "shape_ok": out.shape == (_L, _DIM),
        "row_sums_ok": bool(row_sums_ok),
        "masked_weights_exactly_zero": bool(masked_zero),
    }
    checks["multi_head_attention"]["passed"] = all(checks["multi_head_attention"].values())

    # guided attention: (s + l) x dim, and s = 0 degenerates to the question rows
    guided_w = init_guided_weights(_CFG, rng)
    x_img = rng.uniform(-1, 1, size=(_S, _DIM))
    x_qst = rng.uniform(-1, 1, size=(_L, _DIM))
    fused_guided, _ = guided_forward(x_img, x_qst, _CFG, guided_w)
    fused_no_image, _ = guided_forward(np.zeros((0, _DIM)), x_qst, _CFG, guided_w)
    checks["guided_attention_fuse"] = {
        "shape_ok": fused_guided.shape == (_S + _L, _DIM),
        "no_image_shape_ok": fused_no_image.shape == (_L, _DIM),
    }
    checks["guided_attention_fuse"]["passed"] = all(checks["guided_attention_fuse"].values())

    # trimodal fusion: addend shapes match; n = 0 falls back to the spatial side alone
    trimodal_w = init_trimodal_weights(_CFG, _N, _S, rng)
    x_scene = rng.uniform(-1, 1, size=(_N, _DIM))
    fused_trimodal, _ = trimodal_forward(x_img, x_scene, x_qst, _CFG, trimodal_w)
    pool_rows = trimodal_w["pool_query"].shape[0]
    trimodal_w_s = init_trimodal_weights(_CFG, 0, _S, rng)
    fused_no_scene, _ = trimodal_forward(x_img, np.zeros((0, _DIM)), x_qst, _CFG, trimodal_w_s)
    checks["trimodal_fuse"] = {
        "shape_ok": fused_trimodal.shape == (pool_rows, _DIM),
        "no_scene_shape_ok": fused_no_scene.shape == (_S, _DIM),
    }
    checks["trimodal_fuse"]["passed"] = all(checks["trimodal_fuse"].values())

    # pointer: l x n scores; n = 0 gives an empty matrix
    pointer_w = init_pointer_weights(_DIM, rng)
    h = rng.uniform(-1, 1, size=(_L, _DIM))
    ocr, _ = pointer_forward(
        h, x_scene, pointer_w["w_h"], pointer_w["b_h"], pointer_w["w_s"], pointer_w["b_s"]
    )
    empty, _ = pointer_forward(
        h, np.zeros((0, _DIM)),
        pointer_w["w_h"], pointer_w["b_h"], pointer_w["w_s"], pointer_w["b_s"],
    )
    checks["pointer_scores"] = {
        "shape_ok": ocr.shape == (_L, _N),
        "empty_scene_shape_ok": empty.shape == (_L, 0),
    }
    checks["pointer_scores"]["passed"] = all(checks["pointer_scores"].values())
    return checks


def _check_pointer_equivariance(seed: int, cases: int) -> dict:
    rng = _rng(seed)
    failures = 0
    for _ in range(cases):
        n = int(rng.integers(1, 6))
        l = int(rng.integers(1, 5))
        dim = 6
        w = init_pointer_weights(dim, rng)
        h = rng.uniform(-1, 1, size=(l, dim))
        x_scene = rng.uniform(-1, 1, size=(n, dim))
        perm = rng.permutation(n)
        base, _ = pointer_forward(h, x_scene, w["w_h"], w["b_h"], w["w_s"], w["b_s"])
        permuted, _ = pointer_forward(h, x_scene[perm], w["w_h"], w["b_h"], w["w_s"], w["b_s"])
        if not np.array_equal(base[:, perm], permuted):
            failures += 1
    return {"cases": cases, "failures": failures, "passed": failures == 0}


def _check_argmax_shift_invariance(seed: int, cases: int) -> dict:
    rng = _rng(seed)
    failures = 0
    for _ in range(cases):
        l = int(rng.integers(1, 5))
        v = int(rng.integers(1, 7))
        n = int(rng.integers(0, 4))
        h_vocab = rng.uniform(-1, 1, size=(l, v))
        ocr = rng.uniform(-1, 1, size=(l, n))
        shift = rng.uniform(-100, 100, size=(l, 1))
        base = output_select(h_vocab, ocr)
        shifted = output_select(h_vocab + shift, ocr + shift)
        if not np.array_equal(base, shifted):
            failures += 1
        if (base >= v + n).any():
            failures += 1
    return {"cases": cases, "failures": failures, "passed": failures == 0}


def _check_decode(seed: int) -> dict:
    rng = _rng(seed)
    vocab, max_len = 9, 6
    weights = init_decoder_weights(vocab, _CFG, max_len, rng, with_pointer=True)
    fused = rng.uniform(-1, 1, size=(_S + _L, _DIM))
    x_scene = rng.uniform(-1, 1, size=(_N, _DIM))
    bos, eos = 0, 1
    first = greedy_decode(fused, weights, _CFG, max_len, bos, eos, x_scene=x_scene)
    second = greedy_decode(fused, weights, _CFG, max_len, bos, eos, x_scene=x_scene)
    single = greedy_decode(fused, weights, _CFG, 1, bos, vocab - 1, x_scene=x_scene)

    eos_weights = init_decoder_weights(vocab, _CFG, max_len, rng)
    eos_weights["b_out"] = np.zeros(vocab)
    eos_weights["b_out"][eos] = 1e6
    forced_empty = greedy_decode(fused, eos_weights, _CFG, max_len, bos, eos)

    return {
        "deterministic": first == second,
        "indices_in_range": all(0 <= t < vocab + _N for t in first),
        "respects_max_len": len(first) <= max_len and len(single) == 1,
        "eos_at_step0_gives_empty_answer": forced_empty == [],
        "passed": (
            first == second
            and all(0 <= t < vocab + _N for t in first)
            and len(first) <= max_len
            and len(single) == 1
            and forced_empty == []
        ),
    }


def _check_schedule() -> dict:
    warm = lr_schedule(10_000, 512, 10_000)
    decay_branch = 512**-0.5 * 10_000**-0.5
    warmup_branch = 512**-0.5 * 10_000 * 10_000**-1.5
    return {
        "value_at_warmup": warm,
        "branch_equality_ok": abs(decay_branch - warmup_branch) < 1e-15,
        "passed": abs(decay_branch - warmup_branch) < 1e-15
        and abs(warm - decay_branch) < 1e-18,
    }


def run_selfcheck(seed: int = 0, grad_seeds: int = 10, random_cases: int = 100) -> dict:
    """Run every kernel check; returns a deterministic nested report."""
    report = {
        "seed": seed,
        "grad_seeds": grad_seeds,
        "random_cases": random_cases,
        "shape_invariants": _check_shapes_and_invariants(seed),
        "gradients": _check_gradients(seed, grad_seeds),
        "pointer_permutation_equivariance": _check_pointer_equivariance(seed + 1, random_cases),
        "argmax_shift_invariance": _check_argmax_shift_invariance(seed + 2, random_cases),
        "greedy_decode": _check_decode(seed + 3),
        "lr_schedule": _check_schedule(),
    }

    def collect(node) -> list[bool]:
        if isinstance(node, dict):
            flags = [bool(node["passed"])] if "passed" in node else []
            for value in node.values():
                if isinstance(value, dict):
                    flags.extend(collect(value))
            return flags
        return []

    flags = collect(report)
    report["passed"] = bool(flags) and all(flags)
    return report
