"""Fusion-kernel reference implementations with gradient verification."""

from .fusion import (
    guided_attention_fuse,
    init_guided_weights,
    init_trimodal_weights,
    init_stacked_weights,
    trimodal_fuse,
    stacked_attention_fuse,
)
from .gradcheck import NonFiniteError, grad_check
from .ops import AttentionConfig, init_mha_weights, multi_head_attention, softmax_rows
from .pointer import (
    greedy_decode,
    init_decoder_weights,
    init_pointer_weights,
    output_select,
    pointer_scores,
)
from .schedule import lr_schedule
from .selfcheck import run_selfcheck
from .weights import load_bundle, save_bundle

__all__ = [
    "AttentionConfig",
    "softmax_rows",
    "multi_head_attention",
    "stacked_attention_fuse",
    "guided_attention_fuse",
    "trimodal_fuse",
    "pointer_scores",
    "output_select",
    "greedy_decode",
    "lr_schedule",
    "grad_check",
    "NonFiniteError",
    "run_selfcheck",
    "init_mha_weights",
    "init_stacked_weights",
    "init_guided_weights",
    "init_trimodal_weights",
    "init_pointer_weights",
    "init_decoder_weights",
    "save_bundle",
    "load_bundle",
]
