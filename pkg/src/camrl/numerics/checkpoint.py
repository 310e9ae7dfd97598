"""Parameter checkpoints as a flat name -> array map in ``.npz`` form.

Arrays keep dtype and shape headers, so save -> load is bit-exact. Metadata
(config hash, seed, counters) rides along as one JSON string.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .tensor import Tensor

_META_KEY = "__meta__"


def save_params(path, params: Mapping[str, Tensor | np.ndarray], meta: Mapping[str, Any] | None = None) -> Path:
    path = Path(path)
    arrays = {k: np.asarray(v.data if isinstance(v, Tensor) else v, dtype=np.float64) for k, v in params.items()}
    if _META_KEY in arrays:
        raise KeyError(f"{_META_KEY} is reserved")
    arrays[_META_KEY] = np.array(json.dumps(dict(meta or {}), sort_keys=True))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_params(path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    with np.load(Path(path), allow_pickle=False) as z:
        arrays = {k: z[k] for k in z.files}
    meta = json.loads(str(arrays.pop(_META_KEY))) if _META_KEY in arrays else {}
    return arrays, meta
