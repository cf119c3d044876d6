"""Warmup-then-decay learning-rate schedule used for generator training."""

from __future__ import annotations

__all__ = ["lr_schedule"]


def lr_schedule(step: int, model_dim: int, warmup_steps: int = 10_000) -> float:
    """model_dim^-0.5 * min(step^-0.5, step * warmup_steps^-1.5).

    Rises linearly over the warmup, decays as step^-0.5 afterwards; both
    branches coincide exactly at step == warmup_steps.
    """
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    if model_dim < 1 or warmup_steps < 1:
        raise ValueError("model_dim and warmup_steps must be positive")
    return model_dim**-0.5 * min(step**-0.5, step * warmup_steps**-1.5)
