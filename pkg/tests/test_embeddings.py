"""NPY + manifest embedding container round-trips and validation."""

import json

import numpy as np
import pytest

from radpipe.embeddings import EmbeddingMatrix
from radpipe.errors import SchemaError


def matrix(n=4, d=3, seed=0):
    rng = np.random.default_rng(seed)
    return EmbeddingMatrix(
        ids=tuple(f"img{i:03d}" for i in range(n)),
        data=rng.normal(size=(n, d)),
        source="unit-test",
    )


def test_constructor_validates_shape_and_ids():
    with pytest.raises(ValueError, match="2-D"):
        EmbeddingMatrix(ids=("a",), data=np.zeros(3))
    with pytest.raises(ValueError, match="ids"):
        EmbeddingMatrix(ids=("a", "b"), data=np.zeros((3, 2)))
    with pytest.raises(ValueError, match="unique"):
        EmbeddingMatrix(ids=("a", "a"), data=np.zeros((2, 2)))
    with pytest.raises(ValueError, match="finite"):
        EmbeddingMatrix(ids=("a",), data=np.array([[np.nan, 0.0]]))


def test_row_and_index_lookup():
    m = matrix()
    assert m.index_of("img002") == 2
    np.testing.assert_array_equal(m.row("img002"), m.data[2])
    with pytest.raises(KeyError):
        m.index_of("missing")


def test_subset_reorders_rows():
    m = matrix()
    sub = m.subset(["img003", "img001"])
    assert sub.ids == ("img003", "img001")
    np.testing.assert_array_equal(sub.data[0], m.data[3])
    np.testing.assert_array_equal(sub.data[1], m.data[1])


def test_roundtrip_is_exact_in_f4(tmp_path):
    m = matrix(n=5, d=7)
    npy = tmp_path / "emb.npy"
    man = tmp_path / "emb.json"
    m.save(str(npy), str(man))
    back = EmbeddingMatrix.load(str(npy), str(man))
    assert back.ids == m.ids
    assert back.data.dtype == np.dtype("<f4")
    np.testing.assert_array_equal(back.data, m.data.astype("<f4"))
    assert back.source == "unit-test"


def test_save_writes_plain_npy(tmp_path):
    m = matrix()
    npy = tmp_path / "emb.npy"
    m.save(str(npy), str(tmp_path / "emb.json"))
    arr = np.load(str(npy), allow_pickle=False)
    assert arr.shape == (4, 3)
    assert arr.dtype == np.dtype("<f4")


def test_load_rejects_dim_mismatch(tmp_path):
    m = matrix()
    npy, man = tmp_path / "e.npy", tmp_path / "e.json"
    m.save(str(npy), str(man))
    manifest = json.loads(man.read_text(encoding="utf-8"))
    manifest["dim"] = 99
    man.write_text(json.dumps(manifest), encoding="utf-8")
    with pytest.raises(SchemaError, match="dim"):
        EmbeddingMatrix.load(str(npy), str(man))


def test_load_rejects_id_count_mismatch(tmp_path):
    m = matrix()
    npy, man = tmp_path / "e.npy", tmp_path / "e.json"
    m.save(str(npy), str(man))
    manifest = json.loads(man.read_text(encoding="utf-8"))
    manifest["ids"] = manifest["ids"][:-1]
    del manifest["dim"]
    man.write_text(json.dumps(manifest), encoding="utf-8")
    with pytest.raises(SchemaError, match="ids"):
        EmbeddingMatrix.load(str(npy), str(man))


def test_load_rejects_missing_files(tmp_path):
    with pytest.raises(SchemaError):
        EmbeddingMatrix.load(str(tmp_path / "none.npy"), str(tmp_path / "none.json"))


def test_load_rejects_wrong_dtype(tmp_path):
    npy, man = tmp_path / "e.npy", tmp_path / "e.json"
    np.save(str(npy), np.zeros((2, 2), dtype=np.float64))
    man.write_text(json.dumps({"ids": ["a", "b"]}), encoding="utf-8")
    with pytest.raises(SchemaError, match="dtype"):
        EmbeddingMatrix.load(str(npy), str(man))
