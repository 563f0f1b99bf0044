"""Embedding-space metrics and split utilities.

All reductions use numpy's sequential pairwise summation on fixed operand
order, so results do not depend on worker counts or input partitioning.
"""

from __future__ import annotations

import json
import random
from typing import Mapping, Sequence

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import ComputeError


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v). Zero vectors have no direction and raise ValueError."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance undefined for zero vectors")
    return 1.0 - float(np.dot(u, v)) / (nu * nv)


def cosine_distances_to(query: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Cosine distance from one query vector to every row of a matrix."""
    query = np.asarray(query, dtype=np.float64)
    matrix = np.asarray(matrix, dtype=np.float64)
    qn = float(np.linalg.norm(query))
    row_norms = np.linalg.norm(matrix, axis=1)
    if qn == 0.0 or np.any(row_norms == 0.0):
        raise ValueError("cosine distance undefined for zero vectors")
    return 1.0 - (matrix @ query) / (row_norms * qn)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    avg = starts + (counts + 1) / 2.0
    return avg[inverse]


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve via the rank statistic (ties get half credit)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D and aligned")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    pos = int(np.sum(y == 1))
    neg = int(np.sum(y == 0))
    if pos + neg != len(y):
        raise ValueError("labels must be 0 or 1")
    if pos == 0 or neg == 0:
        raise ValueError("AUROC needs both classes present")
    ranks = _average_ranks(s)
    rank_sum_pos = float(np.sum(ranks[y == 1]))
    u = rank_sum_pos - pos * (pos + 1) / 2.0
    return u / (pos * neg)


def precision_at_k(
    query: np.ndarray,
    images: EmbeddingMatrix,
    labels: Mapping[str, object],
    positive_label: object,
    k: int,
) -> float:
    """Fraction of the k nearest images carrying the positive label.

    Neighbors are ordered by ascending cosine distance with ascending-id
    tie-break. k larger than the collection is an error.
    """
    n = len(images)
    if k < 1 or k > n:
        raise ValueError(f"k={k} out of range for {n} images")
    distances = cosine_distances_to(np.asarray(query), images.data)
    order = sorted(range(n), key=lambda i: (distances[i], images.ids[i]))
    top = order[:k]
    hits = 0
    for i in top:
        image_id = images.ids[i]
        if image_id not in labels:
            raise ComputeError(f"label missing for image {image_id!r}")
        if labels[image_id] == positive_label:
            hits += 1
    return hits / k


def mean_absolute_deviation(predictions: Sequence[float], targets: Sequence[float]) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape or p.ndim != 1 or len(p) == 0:
        raise ValueError("predictions and targets must be aligned non-empty 1-D arrays")
    return float(np.mean(np.abs(p - t)))


def kfold_split(ids: Sequence[str], k: int, seed: int) -> list[list[str]]:
    """Deterministic k-fold partition; fold sizes differ by at most one."""
    ids = list(ids)
    if k < 2 or k > len(ids):
        raise ValueError(f"k={k} out of range for {len(ids)} ids")
    if len(set(ids)) != len(ids):
        raise ValueError("ids must be unique")
    rng = random.Random(seed)
    rng.shuffle(ids)
    base, extra = divmod(len(ids), k)
    folds: list[list[str]] = []
    cursor = 0
    for fold_index in range(k):
        size = base + (1 if fold_index < extra else 0)
        folds.append(ids[cursor:cursor + size])
        cursor += size
    return folds


def save_folds(folds: Sequence[Sequence[str]], path: str) -> None:
    payload = {str(i): list(fold) for i, fold in enumerate(folds)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_folds(path: str) -> list[list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return [list(payload[str(i)]) for i in range(len(payload))]


def clip_loss_from_similarity(similarity: np.ndarray, temperature: float = 0.07) -> float:
    """Symmetric cross-entropy over a similarity matrix with diagonal targets.

    L = (rows-to-diagonal CE + columns-to-diagonal CE) / 2, natural log.
    """
    s = np.asarray(similarity, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"similarity matrix must be square, got {s.shape}")
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    n = s.shape[0]
    if n == 0:
        raise ValueError("similarity matrix is empty")
    z = s / temperature
    diag = np.diag(z)
    row_lse = _logsumexp(z, axis=1)
    col_lse = _logsumexp(z, axis=0)
    row_ce = float(np.mean(row_lse - diag))
    col_ce = float(np.mean(col_lse - diag))
    return 0.5 * (row_ce + col_ce)


def _logsumexp(z: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(z, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(z - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def clip_loss(
    image_embeddings: np.ndarray,
    text_embeddings: np.ndarray,
    temperature: float = 0.07,
) -> float:
    """Contrastive loss over row-aligned image/text embedding pairs."""
    img = np.asarray(image_embeddings, dtype=np.float64)
    txt = np.asarray(text_embeddings, dtype=np.float64)
    if img.shape != txt.shape or img.ndim != 2:
        raise ValueError("image and text embeddings must share an (n, d) shape")
    img_norms = np.linalg.norm(img, axis=1, keepdims=True)
    txt_norms = np.linalg.norm(txt, axis=1, keepdims=True)
    if np.any(img_norms == 0.0) or np.any(txt_norms == 0.0):
        raise ValueError("zero vector has no cosine similarity")
    similarity = (img / img_norms) @ (txt / txt_norms).T
    return clip_loss_from_similarity(similarity, temperature)
