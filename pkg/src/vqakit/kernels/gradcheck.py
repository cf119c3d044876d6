"""Finite-difference verification of the hand-derived backward passes.

An op under test is a pair of callables over a dict of named input arrays:
`forward(inputs) -> output array(s)` and `grad(inputs) -> dict of gradients
of sum(outputs) with respect to each input`. Central differences perturb
every input component and the worst relative disagreement is returned,
where per-component error is |analytic - numeric| / max(1, |analytic|,
|numeric|): components smaller than 1 are compared absolutely, since they
sit at the noise floor of the finite differences themselves.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping

import numpy as np

__all__ = ["NonFiniteError", "grad_check"]


class NonFiniteError(ArithmeticError):
    """A forward or backward evaluation produced a non-finite value."""


def _loss(forward: Callable, inputs: Mapping[str, np.ndarray]) -> float:
    out = forward(inputs)
    arrays = out if isinstance(out, (tuple, list)) else [out]
    total = 0.0
    for arr in arrays:
        arr = np.asarray(arr, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise NonFiniteError("forward pass produced non-finite values")
        total += float(arr.sum())
    return total


def grad_check(
    forward: Callable[[Mapping[str, np.ndarray]], np.ndarray],
    grad: Callable[[Mapping[str, np.ndarray]], Mapping[str, np.ndarray]],
    inputs: Mapping[str, np.ndarray],
    epsilon: float = 1e-5,
    check_inputs: Iterable[str] | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    inputs = {k: np.asarray(v, dtype=np.float64) for k, v in inputs.items()}
    analytic = grad(inputs)
    names = list(check_inputs) if check_inputs is not None else list(inputs)
    max_rel = 0.0
    for name in names:
        a = np.asarray(analytic[name], dtype=np.float64)
        if not np.isfinite(a).all():
            raise NonFiniteError(f"analytic gradient of {name!r} is non-finite")
        x = inputs[name]
        if a.shape != x.shape:
            raise ValueError(f"gradient shape {a.shape} != input shape {x.shape} for {name!r}")
        flat = x.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = _loss(forward, inputs)
            flat[i] = orig - epsilon
            down = _loss(forward, inputs)
            flat[i] = orig
            numeric = (up - down) / (2.0 * epsilon)
            ana = float(a.reshape(-1)[i])
            rel = abs(ana - numeric) / max(1.0, abs(ana), abs(numeric))
            max_rel = max(max_rel, rel)
    return float(max_rel)
