"""Zero-shot strategies, prompt specs and study-level pooling."""

import numpy as np
import pytest

from radpipe.embeddings import EmbeddingMatrix
from radpipe.errors import SchemaError
from radpipe.zeroshot import (
    Prompt,
    PromptSet,
    Strategy,
    build_prompt_set,
    builtin_prompt_spec,
    load_prompt_spec,
    pool_study_scores,
    predict_abnormal,
    prompt_texts_for,
    query_anchor,
    zero_shot_scores,
)


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def images_from(rows, prefix="img"):
    rows = np.asarray(rows, dtype=np.float64)
    return EmbeddingMatrix(ids=tuple(f"{prefix}{i}" for i in range(len(rows))), data=rows)


def prompt_set(strategy, normal_rows, abnormal_rows):
    return PromptSet(
        strategy=strategy,
        normal=tuple(Prompt(f"n{i}", np.asarray(r, float)) for i, r in enumerate(normal_rows)),
        abnormal=tuple(Prompt(f"a{i}", np.asarray(r, float)) for i, r in enumerate(abnormal_rows)),
    )


def test_strategy_values_match_cli_flags():
    assert {s.value for s in Strategy} == {"text-binary", "text-enum", "latent-min", "latent-mean"}


def test_prompt_set_validation():
    with pytest.raises(ValueError, match="at least one"):
        prompt_set(Strategy.LATENT_MEAN, [], [[1.0, 0.0]])
    with pytest.raises(ValueError, match="exactly one"):
        prompt_set(Strategy.TEXT_BINARY, [[1.0, 0.0]], [[0.0, 1.0], [1.0, 1.0]])
    with pytest.raises(ValueError, match="dimension"):
        prompt_set(Strategy.LATENT_MEAN, [[1.0, 0.0]], [[1.0, 0.0, 0.0]])


def test_scores_sign_separates_classes():
    ps = prompt_set(Strategy.TEXT_BINARY, [[1.0, 0.0]], [[0.0, 1.0]])
    imgs = images_from([[0.9, 0.1], [0.1, 0.9]])
    scores = zero_shot_scores(imgs, ps)
    assert scores[0] < 0 < scores[1]
    assert list(predict_abnormal(scores)) == [False, True]


def test_dim_mismatch_is_an_error():
    ps = prompt_set(Strategy.TEXT_BINARY, [[1.0, 0.0]], [[0.0, 1.0]])
    with pytest.raises(ValueError, match="dim"):
        zero_shot_scores(images_from([[1.0, 0.0, 0.0]]), ps)


def test_latent_minimum_takes_closest_subprompt():
    # The image sits on a2; latent-min must use that distance, not a1's.
    ps = prompt_set(
        Strategy.LATENT_MINIMUM,
        [unit([1.0, 0.0])],
        [unit([0.0, 1.0]), unit([0.7, 0.7])],
    )
    imgs = images_from([unit([0.7, 0.7])])
    score = zero_shot_scores(imgs, ps)[0]
    # abnormal distance is 0 to the matching sub-prompt.
    d_normal = 1.0 - np.dot(unit([0.7, 0.7]), unit([1.0, 0.0]))
    assert score == pytest.approx(d_normal, abs=1e-12)


def test_latent_mean_uses_mean_embedding_not_mean_distance():
    a1, a2 = np.array([2.0, 0.0]), np.array([0.0, 4.0])
    ps = prompt_set(Strategy.LATENT_MEAN, [[1.0, 1.0]], [a1, a2])
    imgs = images_from([[3.0, 1.0]])
    from radpipe.metrics import cosine_distance
    anchor = (a1 + a2) / 2.0
    want = cosine_distance([3.0, 1.0], [1.0, 1.0]) - cosine_distance([3.0, 1.0], anchor)
    assert zero_shot_scores(imgs, ps)[0] == pytest.approx(want, abs=1e-12)


def test_latent_mean_singleton_equals_text_binary():
    rng = np.random.default_rng(21)
    imgs = images_from(rng.normal(size=(40, 8)))
    n, a = rng.normal(size=8), rng.normal(size=8)
    binary = prompt_set(Strategy.TEXT_BINARY, [n], [a])
    mean = prompt_set(Strategy.LATENT_MEAN, [n], [a])
    np.testing.assert_allclose(
        zero_shot_scores(imgs, binary), zero_shot_scores(imgs, mean), atol=1e-12
    )


@pytest.mark.parametrize("strategy", list(Strategy))
def test_positive_rescaling_invariance(strategy):
    rng = np.random.default_rng(33)
    imgs = rng.normal(size=(25, 6))
    normals = [rng.normal(size=6)]
    abnormals = [rng.normal(size=6), rng.normal(size=6), rng.normal(size=6)]
    if strategy in (Strategy.TEXT_BINARY, Strategy.TEXT_ENUMERATION):
        abnormals = abnormals[:1]
    base = zero_shot_scores(images_from(imgs), prompt_set(strategy, normals, abnormals))
    scaled = zero_shot_scores(
        images_from(imgs * 7.5),
        prompt_set(strategy, [n * 7.5 for n in normals], [a * 7.5 for a in abnormals]),
    )
    np.testing.assert_allclose(base, scaled, atol=1e-12)


def test_query_anchor_per_strategy():
    n, a1, a2 = np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 1.0])
    ps = prompt_set(Strategy.LATENT_MEAN, [n], [a1, a2])
    np.testing.assert_allclose(query_anchor(ps, "abnormal"), (a1 + a2) / 2.0)
    np.testing.assert_allclose(query_anchor(ps, "normal"), n)
    with pytest.raises(ValueError):
        query_anchor(ps, "weird")
    minimum = prompt_set(Strategy.LATENT_MINIMUM, [n], [a1, a2])
    with pytest.raises(SchemaError):
        query_anchor(minimum, "abnormal")


def test_pool_study_scores_means_and_sorts():
    scores = [1.0, 3.0, 10.0]
    ids = ["i1", "i2", "i3"]
    grouping = {"i1": "sB", "i2": "sB", "i3": "sA"}
    pooled = pool_study_scores(scores, ids, grouping)
    assert list(pooled) == ["sA", "sB"]
    assert pooled["sB"] == pytest.approx(2.0)
    assert pooled["sA"] == pytest.approx(10.0)


def test_pool_study_scores_requires_complete_grouping():
    with pytest.raises(SchemaError, match="missing"):
        pool_study_scores([1.0], ["img9"], {})


# -- prompt specifications --------------------------------------------------

def test_builtin_specs_parse_and_cover_all_strategies():
    for name in ("mura", "fracatlas"):
        spec = builtin_prompt_spec(name)
        for strategy in Strategy:
            normal, abnormal = prompt_texts_for(spec, strategy)
            assert len(normal) >= 1 and len(abnormal) >= 1
            if strategy in (Strategy.TEXT_BINARY, Strategy.TEXT_ENUMERATION):
                assert len(normal) == 1 and len(abnormal) == 1


def test_builtin_spec_unknown_name():
    with pytest.raises(SchemaError):
        builtin_prompt_spec("nonexistent")


def test_load_prompt_spec_validates(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text('{"normal": ["normal"], "abnormal": {"binary": ["x"]}}', encoding="utf-8")
    with pytest.raises(SchemaError, match="enumeration"):
        load_prompt_spec(str(path))


def test_build_prompt_set_looks_up_by_text(tmp_path):
    spec = {
        "dataset": "toy",
        "normal": ["normal"],
        "abnormal": {"binary": ["anormal"], "enumeration": ["a, b"], "subclasses": ["a", "b"]},
    }
    texts = ["normal", "anormal", "a, b", "a", "b"]
    emb = EmbeddingMatrix(ids=tuple(texts), data=np.eye(5))
    ps = build_prompt_set(spec, Strategy.LATENT_MEAN, emb)
    assert [p.text for p in ps.abnormal] == ["a", "b"]
    np.testing.assert_allclose(ps.abnormal[0].embedding, np.eye(5)[3])

    with pytest.raises(SchemaError, match="missing"):
        build_prompt_set(spec, Strategy.LATENT_MEAN, EmbeddingMatrix(ids=("normal",), data=np.eye(1)))
