"""Metric implementations checked against brute-force oracles."""

import itertools
import math

import numpy as np
import pytest

from radpipe.embeddings import EmbeddingMatrix
from radpipe.errors import ComputeError
from radpipe.metrics import (
    auroc,
    clip_loss,
    clip_loss_from_similarity,
    cosine_distance,
    cosine_distances_to,
    kfold_split,
    load_folds,
    mean_absolute_deviation,
    precision_at_k,
    save_folds,
)


def brute_force_auroc(scores, labels):
    """Pairwise Mann-Whitney statistic: ties count half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0
               for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


def test_auroc_fixture():
    assert auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75, abs=1e-15)


def test_auroc_perfect_and_inverted():
    assert auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auroc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0


def test_auroc_ties_get_half_credit():
    assert auroc([0.5, 0.5], [0, 1]) == 0.5


def test_auroc_matches_brute_force_with_heavy_ties():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(4, 60))
        scores = rng.integers(0, 5, size=n).astype(float)  # many ties
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        assert auroc(scores, labels) == pytest.approx(
            brute_force_auroc(scores, labels), abs=1e-12
        )


def test_auroc_input_validation():
    with pytest.raises(ValueError):
        auroc([0.1], [2])
    with pytest.raises(ValueError):
        auroc([0.1, 0.2], [1, 1])
    with pytest.raises(ValueError):
        auroc([np.inf, 0.2], [0, 1])


def test_cosine_distance_basics():
    assert cosine_distance([1, 0], [0, 1]) == pytest.approx(1.0)
    assert cosine_distance([1, 1], [2, 2]) == pytest.approx(0.0, abs=1e-15)
    assert cosine_distance([1, 0], [-1, 0]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        cosine_distance([0, 0], [1, 0])


def test_cosine_distances_to_matches_scalar():
    rng = np.random.default_rng(3)
    q = rng.normal(size=5)
    m = rng.normal(size=(8, 5))
    batch = cosine_distances_to(q, m)
    for i in range(8):
        assert batch[i] == pytest.approx(cosine_distance(q, m[i]), abs=1e-12)


def _image_matrix(rng, n, d=6):
    return EmbeddingMatrix(
        ids=tuple(f"i{j:04d}" for j in range(n)),
        data=rng.normal(size=(n, d)),
    )


def test_precision_at_k_exhaustive_oracle():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(5, 40))
        images = _image_matrix(rng, n)
        labels = {i: int(rng.integers(0, 2)) for i in images.ids}
        query = rng.normal(size=6)
        k = int(rng.integers(1, n + 1))
        got = precision_at_k(query, images, labels, 1, k)
        dist = cosine_distances_to(query, images.data)
        order = sorted(range(n), key=lambda j: (dist[j], images.ids[j]))
        want = sum(labels[images.ids[j]] for j in order[:k]) / k
        assert got == pytest.approx(want, abs=1e-15)


def test_precision_at_k_tie_break_is_by_id():
    data = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    images = EmbeddingMatrix(ids=("b", "a", "c"), data=data)
    labels = {"a": 1, "b": 0, "c": 0}
    # Rows "a" and "b" are equidistant; ascending id puts "a" first.
    assert precision_at_k(np.array([1.0, 0.0]), images, labels, 1, 1) == 1.0


def test_precision_at_k_validation():
    rng = np.random.default_rng(0)
    images = _image_matrix(rng, 4)
    labels = {i: 1 for i in images.ids}
    with pytest.raises(ValueError):
        precision_at_k(np.ones(6), images, labels, 1, 0)
    with pytest.raises(ValueError):
        precision_at_k(np.ones(6), images, labels, 1, 5)
    with pytest.raises(ComputeError, match="label missing"):
        precision_at_k(np.ones(6), images, {"i0000": 1}, 1, 4)


def test_mean_absolute_deviation():
    assert mean_absolute_deviation([1.0, 2.0], [2.0, 4.0]) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        mean_absolute_deviation([], [])


# -- k-fold splits ---------------------------------------------------------

def test_kfold_partition_properties():
    ids = [f"x{i}" for i in range(23)]
    folds = kfold_split(ids, 5, seed=42)
    assert len(folds) == 5
    sizes = sorted(len(f) for f in folds)
    assert max(sizes) - min(sizes) <= 1
    merged = sorted(itertools.chain.from_iterable(folds))
    assert merged == sorted(ids)


def test_kfold_is_deterministic_per_seed():
    ids = [f"x{i}" for i in range(17)]
    assert kfold_split(ids, 4, seed=9) == kfold_split(ids, 4, seed=9)
    assert kfold_split(ids, 4, seed=9) != kfold_split(ids, 4, seed=10)


def test_kfold_validation():
    with pytest.raises(ValueError):
        kfold_split(["a", "b"], 3, seed=0)
    with pytest.raises(ValueError):
        kfold_split(["a", "a", "b"], 2, seed=0)


def test_folds_roundtrip(tmp_path):
    folds = kfold_split([f"x{i}" for i in range(10)], 3, seed=1)
    path = tmp_path / "folds.json"
    save_folds(folds, str(path))
    assert load_folds(str(path)) == folds


# -- CLIP loss ---------------------------------------------------------------

def dense_softmax_clip(similarity, temperature):
    """Straightforward reference: full softmax rows and columns."""
    z = np.asarray(similarity, dtype=np.float64) / temperature
    n = z.shape[0]
    row_terms = [-math.log(math.exp(z[i, i]) / sum(math.exp(v) for v in z[i, :])) for i in range(n)]
    col_terms = [-math.log(math.exp(z[i, i]) / sum(math.exp(v) for v in z[:, i])) for i in range(n)]
    return 0.5 * (sum(row_terms) / n + sum(col_terms) / n)


def test_clip_loss_single_pair_is_zero():
    assert clip_loss_from_similarity(np.array([[3.7]])) == 0.0


def test_clip_loss_uniform_similarity_is_log_n():
    s = np.full((4, 4), 0.25)
    assert clip_loss_from_similarity(s) == pytest.approx(math.log(4), abs=1e-9)


def test_clip_loss_matches_dense_oracle():
    rng = np.random.default_rng(5)
    s = rng.normal(size=(3, 3))
    got = clip_loss_from_similarity(s, temperature=0.07)
    assert got == pytest.approx(dense_softmax_clip(s, 0.07), abs=1e-6)


def test_clip_loss_decreases_when_diagonal_strengthens():
    rng = np.random.default_rng(17)
    for _ in range(20):
        n = int(rng.integers(2, 8))
        s = rng.normal(size=(n, n))
        boosted = s + np.eye(n) * 0.5
        assert clip_loss_from_similarity(boosted) < clip_loss_from_similarity(s)


def test_clip_loss_from_embeddings_normalizes():
    rng = np.random.default_rng(2)
    img = rng.normal(size=(5, 4))
    txt = rng.normal(size=(5, 4))
    a = clip_loss(img, txt)
    b = clip_loss(img * 3.0, txt * 0.5)   # norms cancel in cosine similarity
    assert a == pytest.approx(b, abs=1e-12)


def test_clip_loss_validation():
    with pytest.raises(ValueError):
        clip_loss_from_similarity(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        clip_loss_from_similarity(np.zeros((2, 2)), temperature=0.0)
    with pytest.raises(ValueError):
        clip_loss(np.zeros((2, 2)), np.ones((2, 2)))
