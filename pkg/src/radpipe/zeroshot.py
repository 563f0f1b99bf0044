"""Zero-shot abnormality scoring from prompt embeddings.

Four strategies share one score convention:

    score = d(image, normal anchor) - d(image, abnormal anchor)

with d the cosine distance; an image is called abnormal when its score is
strictly positive. TextBinary and TextEnumeration use a single prompt per
class, LatentMinimum takes the closest abnormal sub-prompt, LatentMean
averages the sub-prompt embeddings before measuring the distance.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import SchemaError
from .metrics import cosine_distances_to


class Strategy(enum.Enum):
    TEXT_BINARY = "text-binary"
    TEXT_ENUMERATION = "text-enum"
    LATENT_MINIMUM = "latent-min"
    LATENT_MEAN = "latent-mean"


@dataclass(frozen=True)
class Prompt:
    text: str
    embedding: np.ndarray


@dataclass(frozen=True)
class PromptSet:
    strategy: Strategy
    normal: tuple[Prompt, ...]
    abnormal: tuple[Prompt, ...]

    def __post_init__(self) -> None:
        if not self.normal or not self.abnormal:
            raise ValueError("prompt set needs at least one prompt per class")
        single = self.strategy in (Strategy.TEXT_BINARY, Strategy.TEXT_ENUMERATION)
        if single and (len(self.normal) != 1 or len(self.abnormal) != 1):
            raise ValueError(f"{self.strategy.value} requires exactly one prompt per class")
        dims = {p.embedding.shape for p in self.normal + self.abnormal}
        if len(dims) != 1:
            raise ValueError("prompt embeddings disagree on dimension")


def _class_distance(images: np.ndarray, prompts: tuple[Prompt, ...], strategy: Strategy) -> np.ndarray:
    if strategy is Strategy.LATENT_MEAN:
        anchor = np.mean(np.stack([p.embedding for p in prompts]), axis=0)
        return cosine_distances_to(anchor, images)
    per_prompt = np.stack([cosine_distances_to(p.embedding, images) for p in prompts])
    if strategy is Strategy.LATENT_MINIMUM:
        return np.min(per_prompt, axis=0)
    return per_prompt[0]


def zero_shot_scores(images: EmbeddingMatrix, prompts: PromptSet) -> np.ndarray:
    """Score every image; positive means predicted abnormal."""
    if images.dim != prompts.normal[0].embedding.shape[0]:
        raise ValueError(
            f"image dim {images.dim} != prompt dim {prompts.normal[0].embedding.shape[0]}"
        )
    d_normal = _class_distance(images.data, prompts.normal, prompts.strategy)
    d_abnormal = _class_distance(images.data, prompts.abnormal, prompts.strategy)
    return d_normal - d_abnormal


def predict_abnormal(scores: np.ndarray) -> np.ndarray:
    return np.asarray(scores) > 0.0


def query_anchor(prompts: PromptSet, which: str) -> np.ndarray:
    """Single query embedding for retrieval ('normal' or 'abnormal' class).

    LatentMinimum has no single anchor per class and is rejected.
    """
    if which not in ("normal", "abnormal"):
        raise ValueError(f"unknown class {which!r}")
    if prompts.strategy is Strategy.LATENT_MINIMUM:
        raise SchemaError("latent-min has no single query embedding; use another strategy")
    group = prompts.abnormal if which == "abnormal" else prompts.normal
    if prompts.strategy is Strategy.LATENT_MEAN:
        return np.mean(np.stack([p.embedding for p in group]), axis=0)
    return group[0].embedding


def pool_study_scores(
    scores: Sequence[float],
    image_ids: Sequence[str],
    grouping: Mapping[str, str],
) -> dict[str, float]:
    """Arithmetic mean of image scores per study.

    Every image id must appear in the grouping map.
    """
    if len(scores) != len(image_ids):
        raise ValueError("scores and image ids must be aligned")
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for score, image_id in zip(scores, image_ids):
        if image_id not in grouping:
            raise SchemaError(f"image {image_id!r} missing from study grouping")
        study = grouping[image_id]
        sums[study] = sums.get(study, 0.0) + float(score)
        counts[study] = counts.get(study, 0) + 1
    return {study: sums[study] / counts[study] for study in sorted(sums)}


# --------------------------------------------------------------------------
# Prompt specifications: JSON naming prompt strings per class and strategy.

def load_prompt_spec(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read prompt spec {path}: {exc}") from exc
    _validate_prompt_spec(spec, path)
    return spec


def builtin_prompt_spec(name: str) -> dict:
    """Bundled prompt specifications ('mura', 'fracatlas')."""
    try:
        text = (resources.files("radpipe") / "data" / "prompts" / f"{name}.json").read_text("utf-8")
    except (FileNotFoundError, ModuleNotFoundError) as exc:
        raise SchemaError(f"no bundled prompt spec named {name!r}") from exc
    spec = json.loads(text)
    _validate_prompt_spec(spec, f"<builtin:{name}>")
    return spec


def _validate_prompt_spec(spec: dict, where: str) -> None:
    if not isinstance(spec.get("normal"), list) or not spec["normal"]:
        raise SchemaError(f"{where}: prompt spec needs a non-empty 'normal' list")
    abnormal = spec.get("abnormal")
    if not isinstance(abnormal, dict):
        raise SchemaError(f"{where}: prompt spec needs an 'abnormal' object")
    for key in ("binary", "enumeration", "subclasses"):
        if not isinstance(abnormal.get(key), list) or not abnormal[key]:
            raise SchemaError(f"{where}: abnormal.{key} must be a non-empty list")


def prompt_texts_for(spec: dict, strategy: Strategy) -> tuple[list[str], list[str]]:
    """Resolve which prompt strings a strategy uses (normal, abnormal)."""
    normal = list(spec["normal"])
    abnormal_spec = spec["abnormal"]
    if strategy is Strategy.TEXT_BINARY:
        abnormal = list(abnormal_spec["binary"])[:1]
    elif strategy is Strategy.TEXT_ENUMERATION:
        abnormal = list(abnormal_spec["enumeration"])[:1]
    else:
        abnormal = list(abnormal_spec["subclasses"])
    if strategy in (Strategy.TEXT_BINARY, Strategy.TEXT_ENUMERATION):
        normal = normal[:1]
    return normal, abnormal


def build_prompt_set(
    spec: dict,
    strategy: Strategy,
    prompt_embeddings: EmbeddingMatrix,
) -> PromptSet:
    """Attach embeddings to the prompt strings a strategy requires.

    Prompt embeddings are looked up by id: the manifest ids of the prompt
    matrix are the prompt strings themselves.
    """
    normal_texts, abnormal_texts = prompt_texts_for(spec, strategy)

    def rows(texts: list[str]) -> tuple[Prompt, ...]:
        out = []
        for text in texts:
            try:
                out.append(Prompt(text=text, embedding=np.asarray(prompt_embeddings.row(text), dtype=np.float64)))
            except KeyError as exc:
                raise SchemaError(f"prompt embedding missing for {text!r}") from exc
        return tuple(out)

    return PromptSet(strategy=strategy, normal=rows(normal_texts), abnormal=rows(abnormal_texts))
