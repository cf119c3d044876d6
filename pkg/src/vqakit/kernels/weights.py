"""Weight-bundle serialization: named float64 matrices in JSON.

Nested weight dicts (decoder layers, fusion blocks) flatten to dotted names
("layers.0.self.w_q") so a bundle is always a flat name -> array mapping on
disk:

    {"name": {"shape": [rows, cols], "data": [flat values]}, ...}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["flatten_weights", "unflatten_weights", "save_bundle", "load_bundle"]


def flatten_weights(weights, prefix: str = "") -> dict[str, np.ndarray]:
    flat: dict[str, np.ndarray] = {}
    if isinstance(weights, dict):
        for key, value in weights.items():
            flat.update(flatten_weights(value, f"{prefix}{key}."))
    elif isinstance(weights, (list, tuple)):
        for i, value in enumerate(weights):
            flat.update(flatten_weights(value, f"{prefix}{i}."))
    else:
        flat[prefix[:-1]] = np.asarray(weights, dtype=np.float64)
    return flat


def unflatten_weights(flat: dict[str, np.ndarray]):
    nested: dict = {}
    for name, value in flat.items():
        parts = name.split(".")
        node = nested
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value

    def listify(node):
        if not isinstance(node, dict):
            return node
        keys = list(node)
        if keys and all(k.isdigit() for k in keys):
            return [listify(node[str(i)]) for i in range(len(keys))]
        return {k: listify(v) for k, v in node.items()}

    return listify(nested)


def save_bundle(weights, path: str | Path) -> None:
    flat = flatten_weights(weights)
    payload = {
        name: {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
        for name, arr in sorted(flat.items())
    }
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_bundle(path: str | Path):
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        payload = json.load(fh)
    flat = {}
    for name, spec in payload.items():
        shape = tuple(spec["shape"])
        data = np.asarray(spec["data"], dtype=np.float64)
        expected = int(np.prod(shape)) if shape else 1
        if data.size != expected:
            raise ValueError(
                f"{path}: weight {name!r} declares shape {shape} "
                f"({expected} values) but carries {data.size}"
            )
        flat[name] = data.reshape(shape)
    return unflatten_weights(flat)
