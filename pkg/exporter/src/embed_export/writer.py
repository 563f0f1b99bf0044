"""Serialization of the embedding matrix contract: NPY plus JSON manifest.

The on-disk layout matches the evaluation toolkit's reader exactly: an NPY
version 1.0 file holding a C-order little-endian float32 (n, d) array, and a
manifest object with keys ids, dim, source and optionally normalizer,
written UTF-8 with LF line endings, two-space indentation and a trailing
newline. Both files are byte-deterministic for fixed inputs.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .errors import SchemaError


def write_embeddings(
    npy_path: str,
    manifest_path: str,
    ids: Sequence[str],
    data: np.ndarray,
    source: str = "",
    normalizer: str | None = None,
) -> None:
    if data.ndim != 2:
        raise SchemaError(f"embedding data must be 2-D, got shape {data.shape}")
    if len(ids) != data.shape[0]:
        raise SchemaError(f"{len(ids)} ids for {data.shape[0]} rows")
    if len(set(ids)) != len(ids):
        raise SchemaError("embedding ids must be unique")
    arr = np.ascontiguousarray(data, dtype="<f4")
    with open(npy_path, "wb") as fh:
        np.save(fh, arr, allow_pickle=False)
    manifest: dict[str, object] = {
        "ids": list(ids),
        "dim": int(arr.shape[1]),
        "source": source,
    }
    if normalizer is not None:
        manifest["normalizer"] = normalizer
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
