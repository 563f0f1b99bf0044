"""Resolution-adaptation surgery on saved vision transformer weights.

Two transforms are offered: corner-aligned bilinear interpolation of the
position-embedding grid, and pseudoinverse resizing of the patch-projection
kernel. Corner alignment maps old grid corners onto new grid corners, which
makes the same-size resize the identity; a single-row or single-column
output is pinned to the first input position.

Weight tensors travel as a bundle: a directory of .npy files plus an
index.json mapping each tensor name to its file, shape, layout string and,
for position embeddings, the token grid.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .errors import ComputeError, SchemaError

POS_EMBED_NAME = "pos_embed"
PATCH_KERNEL_NAME = "patch_embed.weight"
POS_LAYOUT = "tokens,dim"
PATCH_LAYOUT = "out,ph,pw,in"
INDEX_FILE = "index.json"
PINV_RCOND = 1e-10


@dataclass(frozen=True)
class PositionEmbedding:
    """Class-token vector (optional) plus an h x w x d position grid."""

    grid: np.ndarray
    cls: np.ndarray | None = None

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.ndim != 3 or grid.shape[0] < 1 or grid.shape[1] < 1:
            raise ValueError(f"grid must be h x w x d with h, w >= 1, got {grid.shape}")
        if not np.all(np.isfinite(grid)):
            raise ComputeError("position grid contains non-finite values")
        object.__setattr__(self, "grid", grid)
        if self.cls is not None:
            cls = np.asarray(self.cls, dtype=np.float64)
            if cls.shape != (grid.shape[2],):
                raise ValueError("cls vector must match the grid dimension")
            if not np.all(np.isfinite(cls)):
                raise ComputeError("cls vector contains non-finite values")
            object.__setattr__(self, "cls", cls)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.grid.shape


def axis_weights(n_old: int, n_new: int) -> np.ndarray:
    """Corner-aligned linear interpolation weights, shape (n_new, n_old)."""
    if n_old < 1 or n_new < 1:
        raise ValueError("axis sizes must be at least 1")
    W = np.zeros((n_new, n_old), dtype=np.float64)
    if n_old == 1:
        W[:, 0] = 1.0
        return W
    if n_new == 1:
        # A degenerate target axis has no second corner; pin it to position 0.
        W[0, 0] = 1.0
        return W
    for i in range(n_new):
        x = i * (n_old - 1) / (n_new - 1)
        lo = min(int(math.floor(x)), n_old - 2)
        frac = x - lo
        W[i, lo] = 1.0 - frac
        W[i, lo + 1] = frac
    return W


def interpolate_grid(grid: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Bilinear corner-aligned resize of an h x w x d grid."""
    g = np.asarray(grid)
    if g.ndim != 3:
        raise ValueError(f"grid must be 3-D, got shape {g.shape}")
    if new_h < 1 or new_w < 1:
        raise ValueError("target grid sizes must be at least 1")
    if not np.all(np.isfinite(g)):
        raise ComputeError("position grid contains non-finite values")
    h, w, _ = g.shape
    if (h, w) == (new_h, new_w):
        return g.copy()
    wh = axis_weights(h, new_h)
    ww = axis_weights(w, new_w)
    return np.einsum("Hh,Ww,hwd->HWd", wh, ww, g.astype(np.float64))


def interpolate_pos_embed(pe: PositionEmbedding, new_h: int, new_w: int) -> PositionEmbedding:
    """Resize the grid part; the class token is carried over unchanged."""
    return PositionEmbedding(grid=interpolate_grid(pe.grid, new_h, new_w), cls=pe.cls)


def build_resize_matrix(p_old: int, p_new: int) -> np.ndarray:
    """Operator B with B @ x.ravel() the bilinear resize of a p_old-square patch.

    Patches flatten row-major, so B is the Kronecker product of the row and
    column axis weights; every row sums to 1.
    """
    w = axis_weights(p_old, p_new)
    return np.kron(w, w)


def pseudoinverse_patch_resize(kernel: np.ndarray, p_new: int) -> np.ndarray:
    """Re-derive patch-projection kernels at a new patch size.

    Per (out_channel, in_channel) slice w, the new kernel is (B+)^T w with
    B+ the Moore-Penrose pseudoinverse of the patch-resize operator
    (singular values below 1e-10 of the largest are truncated). For
    upsampling B has full column rank, so tokens are preserved:
    <w_new, B x> equals <w, x>. Downsampling is allowed but carries no such
    guarantee.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 4 or k.shape[1] != k.shape[2]:
        raise ValueError(f"kernel must be out x p x p x in, got shape {k.shape}")
    if k.shape[1] < 1 or p_new < 1:
        raise ValueError("patch sizes must be at least 1")
    if not np.all(np.isfinite(k)):
        raise ComputeError("patch kernel contains non-finite values")
    out_ch, p, _, in_ch = k.shape
    if p_new == p:
        return k.copy()
    B = build_resize_matrix(p, p_new)
    try:
        B_pinv = np.linalg.pinv(B, rcond=PINV_RCOND)
    except np.linalg.LinAlgError as exc:
        raise ComputeError(f"pseudoinverse of the resize operator failed: {exc}") from exc
    flat = k.reshape(out_ch, p * p, in_ch)
    new_flat = np.einsum("qP,oqc->oPc", B_pinv, flat)
    return new_flat.reshape(out_ch, p_new, p_new, in_ch)


# --------------------------------------------------------------------------
# Weight bundles on disk.

@dataclass(frozen=True)
class BundleTensor:
    name: str
    array: np.ndarray
    layout: str
    grid: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not self.name or "/" in self.name or "\\" in self.name or self.name.startswith("."):
            raise SchemaError(f"invalid tensor name {self.name!r}")
        if not self.layout:
            raise SchemaError(f"tensor {self.name!r} needs a layout string")
        if self.grid is not None:
            h, w = self.grid
            if h < 1 or w < 1:
                raise SchemaError(f"tensor {self.name!r} has an invalid grid {self.grid!r}")
            object.__setattr__(self, "grid", (int(h), int(w)))


def save_weight_bundle(directory: str, tensors: Mapping[str, BundleTensor]) -> None:
    os.makedirs(directory, exist_ok=True)
    index: dict[str, dict] = {}
    for name in sorted(tensors):
        tensor = tensors[name]
        if tensor.name != name:
            raise SchemaError(f"bundle key {name!r} does not match tensor name {tensor.name!r}")
        filename = f"{name}.npy"
        np.save(os.path.join(directory, filename), np.ascontiguousarray(tensor.array), allow_pickle=False)
        entry: dict = {
            "file": filename,
            "shape": list(tensor.array.shape),
            "layout": tensor.layout,
        }
        if tensor.grid is not None:
            entry["grid"] = list(tensor.grid)
        index[name] = entry
    with open(os.path.join(directory, INDEX_FILE), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(index, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def load_weight_bundle(directory: str) -> dict[str, BundleTensor]:
    index_path = os.path.join(directory, INDEX_FILE)
    try:
        with open(index_path, "r", encoding="utf-8") as fh:
            index = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read weight-bundle index {index_path}: {exc}") from exc
    if not isinstance(index, dict):
        raise SchemaError(f"{index_path}: index must be an object")
    bundle: dict[str, BundleTensor] = {}
    for name, entry in index.items():
        if not isinstance(entry, dict) or "file" not in entry or "layout" not in entry:
            raise SchemaError(f"{index_path}: entry for {name!r} needs 'file' and 'layout'")
        path = os.path.join(directory, entry["file"])
        try:
            array = np.load(path, allow_pickle=False)
        except (OSError, ValueError) as exc:
            raise SchemaError(f"cannot load tensor {name!r} from {path}: {exc}") from exc
        if "shape" in entry and list(array.shape) != list(entry["shape"]):
            raise SchemaError(
                f"tensor {name!r}: file shape {list(array.shape)} != index shape {entry['shape']}"
            )
        grid = tuple(entry["grid"]) if "grid" in entry else None
        bundle[name] = BundleTensor(name=name, array=array, layout=entry["layout"], grid=grid)
    return bundle


def resize_bundle(
    bundle: Mapping[str, BundleTensor],
    new_grid: tuple[int, int] | None = None,
    new_patch: int | None = None,
    pos_name: str = POS_EMBED_NAME,
    patch_name: str = PATCH_KERNEL_NAME,
) -> dict[str, BundleTensor]:
    """Apply the requested resizes; untouched tensors pass through as-is.

    The position tensor is (prefix + h*w, dim) row-major with the prefix
    rows (class or other special tokens) carried over unchanged; its index
    entry must name the grid. Results are cast back to the stored dtype.
    """
    out = dict(bundle)
    if new_grid is not None:
        if pos_name not in bundle:
            raise SchemaError(f"bundle has no position tensor named {pos_name!r}")
        tensor = bundle[pos_name]
        if tensor.grid is None:
            raise SchemaError(f"tensor {pos_name!r} has no grid in the bundle index")
        array = tensor.array
        if array.ndim != 2:
            raise SchemaError(f"tensor {pos_name!r} must be 2-D (tokens, dim), got {array.shape}")
        h, w = tensor.grid
        prefix = array.shape[0] - h * w
        if prefix < 0:
            raise SchemaError(
                f"tensor {pos_name!r}: grid {h}x{w} exceeds its {array.shape[0]} tokens"
            )
        grid_part = np.asarray(array[prefix:], dtype=np.float64).reshape(h, w, array.shape[1])
        resized = interpolate_grid(grid_part, new_grid[0], new_grid[1])
        flat = resized.reshape(new_grid[0] * new_grid[1], array.shape[1])
        stacked = np.concatenate([np.asarray(array[:prefix], dtype=np.float64), flat], axis=0)
        out[pos_name] = replace(tensor, array=stacked.astype(array.dtype), grid=(new_grid[0], new_grid[1]))
    if new_patch is not None:
        if patch_name not in bundle:
            raise SchemaError(f"bundle has no patch tensor named {patch_name!r}")
        tensor = bundle[patch_name]
        if tensor.array.ndim != 4:
            raise SchemaError(
                f"tensor {patch_name!r} must be 4-D ({PATCH_LAYOUT}), got {tensor.array.shape}"
            )
        resized_kernel = pseudoinverse_patch_resize(tensor.array, new_patch)
        out[patch_name] = replace(tensor, array=resized_kernel.astype(tensor.array.dtype))
    return out
