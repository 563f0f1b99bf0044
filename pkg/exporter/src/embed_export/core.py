"""Export jobs: collect inputs, run the encoder over them, write the matrix.

Inputs come from a directory (processed in sorted id order) or from a list
file naming one image path per line (processed in line order; blank lines
and # comments are skipped, relative paths resolve against the list file).
The manifest id of an input is its file name without extension. Every
encoder output must share one dimension; drift aborts the job. Inference is
batched sequentially with no shared mutable state, so results do not depend
on timing.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .encoders import resolve_encoder
from .errors import ComputeError, SchemaError
from .preprocess import MODES, load_image, preprocess
from .writer import write_embeddings

SUPPORTED_RESOLUTIONS = (224, 336, 448)
IMAGE_EXTENSIONS = (".bmp", ".jpeg", ".jpg", ".png", ".tif", ".tiff")


@dataclass(frozen=True)
class ExportJob:
    """One batch run: where to read, how to preprocess, what to call, where to write."""

    input_path: str
    encoder_spec: str | Callable[[np.ndarray], np.ndarray]
    npy_path: str
    manifest_path: str
    resolution: int = 336
    pad_aspect: bool = False
    mode: str = "L"
    mean: float = 0.5
    std: float = 0.25
    apply_preprocess: bool = True
    source: str | None = None

    def __post_init__(self) -> None:
        if self.resolution not in SUPPORTED_RESOLUTIONS:
            raise SchemaError(
                f"resolution {self.resolution} unsupported; choose one of "
                f"{SUPPORTED_RESOLUTIONS}"
            )
        if self.mode not in MODES:
            raise SchemaError(f"unsupported image mode {self.mode!r}; expected one of {MODES}")
        if not self.std > 0:
            raise SchemaError(f"normalization std must be positive, got {self.std}")


def collect_inputs(input_path: str) -> list[tuple[str, Path]]:
    """(id, path) pairs in manifest order.

    A directory yields its image files sorted by id; a list file yields its
    entries in line order. Duplicate ids are rejected because the manifest
    could not distinguish their rows.
    """
    root = Path(input_path)
    pairs: list[tuple[str, Path]] = []
    if root.is_dir():
        files = [
            p
            for p in root.iterdir()
            if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
        ]
        files.sort(key=lambda p: (p.stem, p.name))
        pairs = [(p.stem, p) for p in files]
    elif root.is_file():
        try:
            lines = root.read_text(encoding="utf-8").splitlines()
        except (OSError, UnicodeDecodeError) as exc:
            raise SchemaError(f"cannot read input list {input_path}: {exc}") from exc
        for line in lines:
            entry = line.strip()
            if not entry or entry.startswith("#"):
                continue
            path = Path(entry)
            if not path.is_absolute():
                path = root.parent / path
            pairs.append((path.stem, path))
    else:
        raise SchemaError(f"input {input_path} is neither a directory nor a list file")
    if not pairs:
        raise SchemaError(f"no input images found under {input_path}")
    seen: dict[str, Path] = {}
    for item_id, path in pairs:
        if item_id in seen:
            raise SchemaError(
                f"duplicate input id {item_id!r}: {seen[item_id]} and {path}"
            )
        seen[item_id] = path
    return pairs


def describe_preprocess(job: ExportJob) -> str:
    """The manifest normalizer string documenting the preprocessing applied."""
    if not job.apply_preprocess:
        return "raw"
    parts = [f"resolution={job.resolution}"]
    if job.pad_aspect:
        parts.append("pad-aspect")
    parts.extend([f"mode={job.mode}", f"mean={job.mean:g}", f"std={job.std:g}"])
    return ",".join(parts)


def _default_source(job: ExportJob) -> str:
    spec = job.encoder_spec
    if callable(spec):
        module = getattr(spec, "__module__", "encoder")
        name = getattr(spec, "__qualname__", getattr(spec, "__name__", "encoder"))
        return f"embed-export {module}:{name}"
    return f"embed-export {spec}"


def run_export(job: ExportJob) -> tuple[int, int]:
    """Encode every input and write the NPY + manifest pair; returns (n, dim)."""
    inputs = collect_inputs(job.input_path)
    if callable(job.encoder_spec):
        encoder = job.encoder_spec
    else:
        encoder = resolve_encoder(job.encoder_spec)
    ids: list[str] = []
    rows: list[np.ndarray] = []
    dim: int | None = None
    for item_id, path in inputs:
        array = load_image(str(path), mode=job.mode)
        if job.apply_preprocess:
            array = preprocess(
                array,
                job.resolution,
                pad_aspect=job.pad_aspect,
                mean=job.mean,
                std=job.std,
            )
        try:
            vector = np.asarray(encoder(array), dtype=np.float32)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"encoder failed on {item_id!r}: {exc}") from exc
        if vector.ndim != 1 or vector.size == 0:
            raise SchemaError(
                f"encoder returned shape {vector.shape} for {item_id!r}; "
                "expected a non-empty vector"
            )
        if not np.all(np.isfinite(vector)):
            raise ComputeError(f"encoder produced non-finite values for {item_id!r}")
        if dim is None:
            dim = int(vector.size)
        elif int(vector.size) != dim:
            raise SchemaError(
                f"dimension drift: {item_id!r} produced {vector.size} values, "
                f"previous inputs produced {dim}"
            )
        ids.append(item_id)
        rows.append(vector)
    data = np.vstack(rows)
    source = job.source if job.source is not None else _default_source(job)
    write_embeddings(
        job.npy_path,
        job.manifest_path,
        ids,
        data,
        source=source,
        normalizer=describe_preprocess(job),
    )
    return len(ids), int(dim if dim is not None else 0)
