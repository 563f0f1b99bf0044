"""Embedding matrices: float32 row-per-item arrays paired with a JSON manifest.

On disk: an NPY version 1.0 file (dtype <f4, C order, shape (n, d)) plus a
manifest carrying the row ids, the dimension, a free-form source string and
optionally the normalizer description of the producing pipeline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SchemaError


@dataclass(frozen=True)
class EmbeddingMatrix:
    ids: tuple[str, ...]
    data: np.ndarray
    source: str = ""
    normalizer: str | None = None

    def __post_init__(self) -> None:
        if self.data.ndim != 2:
            raise ValueError(f"embedding data must be 2-D, got shape {self.data.shape}")
        if len(self.ids) != self.data.shape[0]:
            raise ValueError(
                f"manifest lists {len(self.ids)} ids but data has {self.data.shape[0]} rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("embedding ids must be unique")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("embedding data contains non-finite values")

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])

    def __len__(self) -> int:
        return int(self.data.shape[0])

    def row(self, item_id: str) -> np.ndarray:
        return self.data[self.index_of(item_id)]

    def index_of(self, item_id: str) -> int:
        index = getattr(self, "_index", None)
        if index is None:
            index = {item: i for i, item in enumerate(self.ids)}
            object.__setattr__(self, "_index", index)
        if item_id not in index:
            raise KeyError(item_id)
        return index[item_id]

    def subset(self, ids: "Sequence[str]") -> "EmbeddingMatrix":
        """New matrix with the given rows, in the given order."""
        rows = [self.index_of(i) for i in ids]
        return EmbeddingMatrix(
            ids=tuple(ids),
            data=self.data[rows],
            source=self.source,
            normalizer=self.normalizer,
        )

    def save(self, npy_path: str, manifest_path: str) -> None:
        arr = np.ascontiguousarray(self.data, dtype="<f4")
        with open(npy_path, "wb") as fh:
            np.save(fh, arr, allow_pickle=False)
        manifest: dict[str, object] = {
            "ids": list(self.ids),
            "dim": self.dim,
            "source": self.source,
        }
        if self.normalizer is not None:
            manifest["normalizer"] = self.normalizer
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, ensure_ascii=False, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, npy_path: str, manifest_path: str) -> "EmbeddingMatrix":
        try:
            arr = np.load(npy_path, allow_pickle=False)
        except (OSError, ValueError) as exc:
            raise SchemaError(f"cannot read embedding array {npy_path}: {exc}") from exc
        try:
            with open(manifest_path, "r", encoding="utf-8") as fh:
                manifest = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read manifest {manifest_path}: {exc}") from exc
        if arr.ndim != 2:
            raise SchemaError(f"{npy_path}: expected a 2-D array, got shape {arr.shape}")
        if arr.dtype != np.dtype("<f4"):
            raise SchemaError(f"{npy_path}: expected dtype <f4, got {arr.dtype}")
        ids = manifest.get("ids")
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            raise SchemaError(f"{manifest_path}: manifest 'ids' must be a list of strings")
        dim = manifest.get("dim")
        if dim is not None and int(dim) != arr.shape[1]:
            raise SchemaError(
                f"{manifest_path}: manifest dim {dim} != array dim {arr.shape[1]}"
            )
        if len(ids) != arr.shape[0]:
            raise SchemaError(
                f"{manifest_path}: {len(ids)} ids for {arr.shape[0]} rows"
            )
        try:
            return cls(
                ids=tuple(ids),
                data=arr,
                source=str(manifest.get("source", "")),
                normalizer=manifest.get("normalizer"),
            )
        except ValueError as exc:
            raise SchemaError(str(exc)) from exc
