"""Command line interface.

One binary with verb subcommands; a shared JSON config file supplies
lexicons, seeds and defaults, and individual flags override it. Exit codes:
0 success, 1 computational failure, 2 input or schema error. Diagnostics go
to standard error; results go to files or standard output. Given identical
inputs and seed, every subcommand is byte-identical across runs and thread
counts.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .config import PipelineConfig, load_config
from .core import read_documents, write_deid_documents
from .curate import (
    filter_by_ocr,
    pair_studies_with_reports,
    read_ocr_records,
    read_studies,
    scrub_metadata,
    write_studies,
)
from .deid_eval import GoldCorpus, MatchPolicy, evaluate
from .detect import detect
from .embeddings import EmbeddingMatrix
from .errors import ComputeError, SchemaError
from .lda import lda_direction
from .metrics import (
    auroc,
    clip_loss,
    kfold_split,
    mean_absolute_deviation,
    precision_at_k,
    save_folds,
)
from .probes import TrainConfig, train_probe
from .surrogate import SurrogateMap, pseudonymize_corpus
from .vit_resize import load_weight_bundle, resize_bundle, save_weight_bundle
from .zeroshot import (
    Strategy,
    build_prompt_set,
    builtin_prompt_spec,
    load_prompt_spec,
    pool_study_scores,
    query_anchor,
    zero_shot_scores,
)

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_SCHEMA = 2

STRATEGY_CHOICES = tuple(s.value for s in Strategy)
QUERY_STRATEGIES = (Strategy.TEXT_BINARY.value, Strategy.TEXT_ENUMERATION.value, Strategy.LATENT_MEAN.value)


def _err(message: str) -> None:
    print(f"radpipe: {message}", file=sys.stderr)


def _info(message: str) -> None:
    print(f"radpipe: {message}", file=sys.stderr)


def _plan(message: str) -> None:
    print(f"plan: {message}")


def _load_cfg(args: argparse.Namespace) -> PipelineConfig | None:
    if getattr(args, "config", None) is None:
        return None
    return load_config(args.config, master_seed=getattr(args, "seed", None))


def _require_cfg(args: argparse.Namespace) -> PipelineConfig:
    cfg = _load_cfg(args)
    if cfg is None:
        raise SchemaError("this subcommand requires --config")
    return cfg


def _resolve_input(flag_value: str | None, cfg: PipelineConfig | None, name: str) -> str:
    if flag_value is not None:
        if not os.path.exists(flag_value):
            raise SchemaError(f"input file does not exist: {flag_value}")
        return flag_value
    if cfg is not None and name in cfg.paths:
        return cfg.paths[name]
    raise SchemaError(f"no --{name.replace('_', '-')} given and config has no paths.{name}")


def _resolve_outdir(args: argparse.Namespace, cfg: PipelineConfig | None) -> str:
    out = getattr(args, "out_dir", None)
    if out is None and cfg is not None:
        out = cfg.output_dir
    if out is None:
        raise SchemaError("no --out-dir given and config has no output_dir")
    return out


def _default_manifest(npy_path: str) -> str:
    root, ext = os.path.splitext(npy_path)
    return f"{root}.json" if ext == ".npy" else f"{npy_path}.json"


def _load_matrix(npy_path: str, manifest_path: str | None) -> EmbeddingMatrix:
    return EmbeddingMatrix.load(npy_path, manifest_path or _default_manifest(npy_path))


def _load_json_map(path: str, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {what} {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: {what} must be a JSON object")
    return obj


def _aligned_values(matrix: EmbeddingMatrix, mapping: dict, what: str) -> list:
    values = []
    for item_id in matrix.ids:
        if item_id not in mapping:
            raise SchemaError(f"{what} missing for id {item_id!r}")
        values.append(mapping[item_id])
    return values


def _binary_labels(values: Sequence[object], what: str) -> list[int]:
    labels = []
    for v in values:
        if v not in (0, 1, 0.0, 1.0):
            raise SchemaError(f"{what} must be 0/1, got {v!r}")
        labels.append(int(v))
    return labels


def _write_json(path: str, obj: object) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def _prompt_spec(args: argparse.Namespace) -> dict:
    if getattr(args, "prompt_spec", None) is not None:
        return load_prompt_spec(args.prompt_spec)
    if getattr(args, "dataset", None) is not None:
        return builtin_prompt_spec(args.dataset)
    raise SchemaError("give --prompt-spec FILE or --dataset {mura,fracatlas}")


# --------------------------------------------------------------------------
# Subcommands.

def _cmd_deid(args: argparse.Namespace) -> int:
    cfg = _require_cfg(args)
    detector = cfg.require_detector()
    policy = cfg.require_surrogate()
    corpus_path = _resolve_input(args.corpus, cfg, "corpus")
    out_dir = _resolve_outdir(args, cfg)
    docs = read_documents(corpus_path)
    corpus_out = os.path.join(out_dir, "deid_corpus.jsonl")
    map_out = os.path.join(out_dir, "surrogate_map.json")
    audit_out = os.path.join(out_dir, "audit.jsonl")
    if args.dry_run:
        _plan(f"read corpus {corpus_path} ({len(docs)} documents)")
        _plan(f"pseudonymize with master_seed={policy.master_seed}, threads={args.threads}")
        for target in (corpus_out, map_out, audit_out):
            _plan(f"write {target}")
        return EXIT_OK
    deid_docs, surrogate_map = pseudonymize_corpus(docs, detector, policy, threads=args.threads)
    os.makedirs(out_dir, exist_ok=True)
    write_deid_documents(deid_docs, corpus_out)
    surrogate_map.to_json(map_out)
    with open(audit_out, "w", encoding="utf-8", newline="\n") as fh:
        for raw, deid in zip(docs, deid_docs):
            entry = {
                "doc_id": raw.doc_id,
                "patient_id": raw.patient_id,
                "pseudo_patient_id": deid.pseudo_patient_id,
                "replacements": len(deid.applied),
            }
            fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
    _info(f"deid: {len(deid_docs)} documents, {len(surrogate_map.patients)} patients -> {out_dir}")
    return EXIT_OK


def _cmd_eval_deid(args: argparse.Namespace) -> int:
    cfg = _require_cfg(args)
    detector = cfg.require_detector()
    corpus_path = _resolve_input(args.corpus, cfg, "corpus")
    gold_path = _resolve_input(args.gold, cfg, "gold")
    policy = MatchPolicy(args.policy) if args.policy else cfg.eval.policy
    docs = read_documents(corpus_path)
    predicted = {doc.doc_id: detect(doc, detector).spans for doc in docs}
    gold = GoldCorpus.load(gold_path)
    report = evaluate(predicted, gold, policy)
    print(report.format_table())
    if args.csv:
        report.to_csv(args.csv)
        _info(f"eval-deid: CSV written to {args.csv}")
    return EXIT_OK


def _cmd_curate(args: argparse.Namespace) -> int:
    cfg = _require_cfg(args)
    studies_path = _resolve_input(args.studies, cfg, "studies")
    reports_path = _resolve_input(args.reports, cfg, "reports")
    ocr_path = _resolve_input(args.ocr, cfg, "ocr")
    out_dir = _resolve_outdir(args, cfg)

    records = read_ocr_records(ocr_path)
    kept_ids, dropped_ids = filter_by_ocr(records, threshold=cfg.curate.ocr_threshold)

    studies = read_studies(studies_path)
    if args.map:
        raw_map = _load_json_map(args.map, "surrogate map").get("patients", {})
        id_map = {}
        for pid, entry in raw_map.items():
            pseudo = entry.get("pseudo_ids", {}).get(pid) if isinstance(entry, dict) else None
            if pseudo is None:
                raise SchemaError(f"{args.map}: no pseudo id recorded for patient {pid!r}")
            id_map[pid] = pseudo
    else:
        id_map = {s.patient_id: s.patient_id for s in studies}
    for study in studies:
        id_map.setdefault(study.study_id, study.study_id)

    reports = read_documents(reports_path)

    outputs = {
        "studies": os.path.join(out_dir, "studies_curated.jsonl"),
        "pairs": os.path.join(out_dir, "pairs.jsonl"),
        "kept": os.path.join(out_dir, "kept_images.txt"),
        "dropped": os.path.join(out_dir, "dropped_images.txt"),
        "discards": os.path.join(out_dir, "discards.json"),
    }
    if args.dry_run:
        _plan(f"ocr-filter {len(records)} images (threshold {cfg.curate.ocr_threshold}): keep {len(kept_ids)}, drop {len(dropped_ids)}")
        _plan(f"scrub {len(studies)} studies (allowlist {len(cfg.curate.metadata_allowlist)} keys)")
        _plan(f"pair against {len(reports)} reports")
        for target in outputs.values():
            _plan(f"write {target}")
        return EXIT_OK

    kept_set = set(kept_ids)
    scrubbed = []
    for study in studies:
        study = scrub_metadata(study, cfg.curate.metadata_allowlist, id_map)
        study = dataclasses.replace(
            study, image_ids=tuple(i for i in study.image_ids if i in kept_set)
        )
        scrubbed.append(study)

    report_keys = [(d.doc_id, id_map.get(d.patient_id, d.patient_id), d.date) for d in reports]
    for doc_id, _, date in report_keys:
        if date is None:
            raise SchemaError(f"report {doc_id!r} has no date; cannot pair")
    paired, discarded = pair_studies_with_reports(scrubbed, report_keys)

    os.makedirs(out_dir, exist_ok=True)
    write_studies(scrubbed, outputs["studies"])
    with open(outputs["pairs"], "w", encoding="utf-8", newline="\n") as fh:
        for pair in paired:
            fh.write(
                json.dumps(
                    {"study_id": pair.study.study_id, "report_doc_id": pair.report_doc_id},
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )
    for key, ids in (("kept", kept_ids), ("dropped", dropped_ids)):
        with open(outputs[key], "w", encoding="utf-8", newline="\n") as fh:
            for image_id in ids:
                fh.write(image_id + "\n")
    _write_json(outputs["discards"], {"discarded": discarded})
    _info(
        f"curate: {len(paired)} pairs, {len(discarded)} discards, "
        f"{len(kept_ids)}/{len(records)} images kept -> {out_dir}"
    )
    return EXIT_OK


def _strategies(args: argparse.Namespace) -> list[Strategy]:
    if args.strategy == "all":
        return list(Strategy)
    return [Strategy(args.strategy)]


def _cmd_zeroshot(args: argparse.Namespace) -> int:
    images = _load_matrix(args.images, args.images_manifest)
    prompts_matrix = _load_matrix(args.prompts, args.prompts_manifest)
    spec = _prompt_spec(args)
    labels_map = _load_json_map(args.labels, "labels file") if args.labels else None
    grouping = _load_json_map(args.grouping, "grouping file") if args.grouping else None
    if labels_map is None and args.out is None:
        raise SchemaError("give --labels for an AUROC table or --out for a score dump")

    report: dict = {"strategies": {}}
    rows = []
    for strategy in _strategies(args):
        prompt_set = build_prompt_set(spec, strategy, prompts_matrix)
        scores = zero_shot_scores(images, prompt_set)
        if grouping is not None:
            pooled = pool_study_scores(scores.tolist(), images.ids, {str(k): str(v) for k, v in grouping.items()})
            score_map = pooled
        else:
            score_map = {image_id: float(s) for image_id, s in zip(images.ids, scores)}
        entry: dict = {"scores": {k: score_map[k] for k in sorted(score_map)}}
        if labels_map is not None:
            keys = sorted(score_map)
            missing = [k for k in keys if k not in labels_map]
            if missing:
                raise SchemaError(f"label missing for id {missing[0]!r}")
            labels = _binary_labels([labels_map[k] for k in keys], "label")
            value = auroc([score_map[k] for k in keys], labels)
            entry["auroc"] = value
            entry["n"] = len(keys)
            rows.append((strategy.value, value, len(keys)))
        report["strategies"][strategy.value] = entry

    if rows:
        width = max(len(name) for name, _, _ in rows)
        print(f"{'Strategy'.ljust(width)}  {'AUROC':>8}  {'n':>6}")
        for name, value, n in rows:
            print(f"{name.ljust(width)}  {value:8.4f}  {n:6d}")
    if args.out:
        _write_json(args.out, report)
        _info(f"zeroshot: report written to {args.out}")
    return EXIT_OK


def _cmd_retrieve(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    images = _load_matrix(args.images, args.images_manifest)
    prompts_matrix = _load_matrix(args.prompts, args.prompts_manifest)
    spec = _prompt_spec(args)
    strategy = Strategy(args.strategy)
    prompt_set = build_prompt_set(spec, strategy, prompts_matrix)
    query = query_anchor(prompt_set, args.query_class)
    positive = 1 if args.query_class == "abnormal" else 0

    labels_map = _load_json_map(args.labels, "labels file")
    binary = _binary_labels(list(labels_map.values()), "label")
    labels = {str(k): v for k, v in zip(labels_map.keys(), binary)}
    ks = args.k if args.k else list((cfg.eval.k if cfg else (10, 50)))
    folds_n = args.folds if args.folds is not None else (cfg.eval.folds if cfg else 5)
    seed = args.seed if args.seed is not None else (cfg.master_seed if cfg and cfg.master_seed is not None else 0)

    folds = kfold_split(list(images.ids), folds_n, seed)
    per_k: dict[int, list[float]] = {k: [] for k in ks}
    for fold_ids in folds:
        fold_matrix = images.subset(fold_ids)
        for k in ks:
            per_k[k].append(precision_at_k(query, fold_matrix, labels, positive, k))

    report = {
        "strategy": strategy.value,
        "query_class": args.query_class,
        "folds": folds_n,
        "seed": seed,
        "k": {
            str(k): {
                "values": values,
                "mean": float(np.mean(values)),
                "std": float(np.std(values)),
            }
            for k, values in per_k.items()
        },
    }
    print(f"{'k':>4}  {'mean':>8}  {'std':>8}")
    for k in ks:
        stats = report["k"][str(k)]
        print(f"{k:4d}  {stats['mean']:8.4f}  {stats['std']:8.4f}")
    if args.out:
        _write_json(args.out, report)
        _info(f"retrieve: report written to {args.out}")
    if args.folds_out:
        save_folds(folds, args.folds_out)
        _info(f"retrieve: folds written to {args.folds_out}")
    return EXIT_OK


def _cmd_probe(args: argparse.Namespace) -> int:
    features = _load_matrix(args.features, args.features_manifest)
    targets_map = _load_json_map(args.targets, "targets file")
    values = _aligned_values(features, targets_map, "target")
    if args.kind == "classification":
        y = np.asarray(_binary_labels(values, "label"), dtype=np.float64)
    else:
        y = np.asarray([float(v) for v in values], dtype=np.float64)

    valid = None
    if args.valid_features:
        valid_matrix = _load_matrix(args.valid_features, args.valid_features_manifest)
        valid_targets_map = _load_json_map(args.valid_targets, "validation targets file") if args.valid_targets else targets_map
        vvalues = _aligned_values(valid_matrix, valid_targets_map, "validation target")
        if args.kind == "classification":
            yv = np.asarray(_binary_labels(vvalues, "validation label"), dtype=np.float64)
        else:
            yv = np.asarray([float(v) for v in vvalues], dtype=np.float64)
        valid = (valid_matrix, yv)

    config = TrainConfig(
        learning_rate=args.learning_rate,
        max_epochs=args.max_epochs,
    )
    result = train_probe(
        features.data.astype(np.float64),
        y,
        args.kind,
        config=config,
        valid_features=valid[0].data.astype(np.float64) if valid else None,
        valid_targets=valid[1] if valid else None,
    )
    eval_matrix, eval_y = (valid if valid else (features, y))
    if args.kind == "classification":
        scores = result.model.decision_values(eval_matrix.data.astype(np.float64))
        metric_name, metric = "auroc", auroc(scores.tolist(), [int(v) for v in eval_y])
    else:
        preds = result.model.predict_values(eval_matrix.data.astype(np.float64))
        metric_name, metric = "mad", mean_absolute_deviation(preds, eval_y)

    summary = {
        "kind": args.kind,
        "epochs_run": result.epochs_run,
        "best_epoch": result.best_epoch,
        "best_val_loss": result.best_loss,
        metric_name: metric,
        "evaluated_on": "validation" if valid else "training",
    }
    print(json.dumps(summary, sort_keys=True, ensure_ascii=False))
    if args.out:
        model = result.model
        _write_json(
            args.out,
            {
                "kind": model.kind,
                "weights": [float(w) for w in model.weights],
                "bias": model.bias,
                "target_shift": model.target_shift,
                "target_scale": model.target_scale,
            },
        )
        _info(f"probe: model written to {args.out}")
    return EXIT_OK


def _cmd_cliploss(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    images = _load_matrix(args.images, args.images_manifest)
    texts = _load_matrix(args.texts, args.texts_manifest)
    if set(images.ids) != set(texts.ids):
        raise SchemaError("image and text manifests must carry the same ids")
    texts = texts.subset(images.ids)
    temperature = args.temperature if args.temperature is not None else (cfg.eval.temperature if cfg else 0.07)
    value = clip_loss(images.data.astype(np.float64), texts.data.astype(np.float64), temperature)
    print(json.dumps({"clip_loss": value, "n": len(images), "temperature": temperature}, sort_keys=True))
    return EXIT_OK


def _cmd_lda(args: argparse.Namespace) -> int:
    features = _load_matrix(args.features, args.features_manifest)
    labels_map = _load_json_map(args.labels, "labels file")
    labels = _binary_labels(_aligned_values(features, labels_map, "label"), "label")
    direction, projections = lda_direction(features.data.astype(np.float64), np.asarray(labels))
    proj = np.asarray(projections)
    mask = np.asarray(labels) == 1
    summary = {
        "n": len(features),
        "dim": features.dim,
        "projection_mean_class0": float(np.mean(proj[~mask])),
        "projection_mean_class1": float(np.mean(proj[mask])),
        "auroc": auroc(proj.tolist(), labels),
    }
    print(json.dumps(summary, sort_keys=True))
    if args.out:
        _write_json(
            args.out,
            {
                "direction": [float(w) for w in direction],
                "projections": {i: float(p) for i, p in zip(features.ids, proj)},
            },
        )
        _info(f"lda: direction written to {args.out}")
    return EXIT_OK


def _parse_grid(value: str) -> tuple[int, int]:
    parts = value.lower().split("x")
    if len(parts) != 2:
        raise SchemaError(f"--grid must look like HxW, got {value!r}")
    try:
        h, w = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise SchemaError(f"--grid must look like HxW, got {value!r}") from exc
    if h < 1 or w < 1:
        raise SchemaError("--grid sizes must be at least 1")
    return h, w


def _cmd_resize_weights(args: argparse.Namespace) -> int:
    if args.grid is None and args.patch is None:
        raise SchemaError("give --grid HxW and/or --patch P")
    new_grid = _parse_grid(args.grid) if args.grid else None
    if args.patch is not None and args.patch < 1:
        raise SchemaError("--patch must be at least 1")
    bundle = load_weight_bundle(args.weights)
    if args.dry_run:
        _plan(f"load bundle {args.weights} ({len(bundle)} tensors)")
        if new_grid:
            _plan(f"resize {args.pos_name} grid to {new_grid[0]}x{new_grid[1]}")
        if args.patch is not None:
            _plan(f"resize {args.patch_name} patch to {args.patch}x{args.patch}")
        _plan(f"write {args.out}")
        return EXIT_OK
    resized = resize_bundle(
        bundle,
        new_grid=new_grid,
        new_patch=args.patch,
        pos_name=args.pos_name,
        patch_name=args.patch_name,
    )
    save_weight_bundle(args.out, resized)
    _info(f"resize-weights: {len(resized)} tensors -> {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser assembly.

def _add_matrix_flags(parser: argparse.ArgumentParser, prefix: str, required: bool = True) -> None:
    flag = prefix.replace("_", "-")
    parser.add_argument(f"--{flag}", required=required, help=f"{prefix} NPY file")
    parser.add_argument(
        f"--{flag}-manifest",
        default=None,
        help=f"{prefix} manifest (default: NPY path with .json suffix)",
    )


def _add_prompt_flags(parser: argparse.ArgumentParser) -> None:
    _add_matrix_flags(parser, "prompts")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--prompt-spec", help="prompt specification JSON")
    group.add_argument("--dataset", choices=("mura", "fracatlas"), help="bundled prompt specification")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radpipe", description=__doc__)
    parser.add_argument("--version", action="version", version=f"radpipe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deid", help="detect PHI and rewrite a corpus with surrogates")
    p.add_argument("--config", required=True)
    p.add_argument("--corpus", default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=_cmd_deid)

    p = sub.add_parser("eval-deid", help="score the detector against gold annotations")
    p.add_argument("--config", required=True)
    p.add_argument("--corpus", default=None)
    p.add_argument("--gold", default=None)
    p.add_argument("--policy", choices=("exact", "overlap"), default=None)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=_cmd_eval_deid)

    p = sub.add_parser("curate", help="scrub metadata, filter by OCR, pair studies with reports")
    p.add_argument("--config", required=True)
    p.add_argument("--studies", default=None)
    p.add_argument("--reports", default=None)
    p.add_argument("--ocr", default=None)
    p.add_argument("--map", default=None, help="surrogate map JSON for patient id scrubbing")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=_cmd_curate)

    p = sub.add_parser("zeroshot", help="zero-shot abnormality scoring and AUROC table")
    _add_matrix_flags(p, "images")
    _add_prompt_flags(p)
    p.add_argument("--strategy", choices=STRATEGY_CHOICES + ("all",), default="all")
    p.add_argument("--labels", default=None, help="JSON {id: 0|1}")
    p.add_argument("--grouping", default=None, help="JSON {image_id: study_id} for study pooling")
    p.add_argument("--out", default=None, help="write the full report as JSON")
    p.set_defaults(func=_cmd_zeroshot)

    p = sub.add_parser("retrieve", help="precision@k retrieval with k-fold mean and std")
    p.add_argument("--config", default=None)
    _add_matrix_flags(p, "images")
    _add_prompt_flags(p)
    p.add_argument("--strategy", choices=QUERY_STRATEGIES, default=Strategy.TEXT_BINARY.value)
    p.add_argument("--query-class", choices=("normal", "abnormal"), default="abnormal")
    p.add_argument("--labels", required=True, help="JSON {id: 0|1}")
    p.add_argument("--k", type=int, action="append", default=None, help="repeatable; default 10 and 50")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--folds-out", default=None, help="write fold assignments as JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_retrieve)

    p = sub.add_parser("probe", help="train and evaluate a linear probe")
    _add_matrix_flags(p, "features")
    p.add_argument("--targets", required=True, help="JSON {id: value}")
    p.add_argument("--kind", choices=("classification", "regression"), required=True)
    _add_matrix_flags(p, "valid_features", required=False)
    p.add_argument("--valid-targets", default=None)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--max-epochs", type=int, default=10_000)
    p.add_argument("--out", default=None, help="write the fitted model as JSON")
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("cliploss", help="symmetric contrastive loss of paired embeddings")
    p.add_argument("--config", default=None)
    _add_matrix_flags(p, "images")
    _add_matrix_flags(p, "texts")
    p.add_argument("--temperature", type=float, default=None)
    p.set_defaults(func=_cmd_cliploss)

    p = sub.add_parser("lda", help="Fisher discriminant direction and projections")
    _add_matrix_flags(p, "features")
    p.add_argument("--labels", required=True, help="JSON {id: 0|1}")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_lda)

    p = sub.add_parser("resize-weights", help="adapt ViT weights to a new resolution")
    p.add_argument("--weights", required=True, help="input weight-bundle directory")
    p.add_argument("--out", required=True, help="output weight-bundle directory")
    p.add_argument("--grid", default=None, help="new position grid as HxW")
    p.add_argument("--patch", type=int, default=None, help="new patch size")
    p.add_argument("--pos-name", default="pos_embed")
    p.add_argument("--patch-name", default="patch_embed.weight")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=_cmd_resize_weights)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        _err(str(exc))
        return EXIT_SCHEMA
    except ComputeError as exc:
        _err(str(exc))
        return EXIT_COMPUTE
    except (ValueError, KeyError, OSError) as exc:
        _err(str(exc))
        return EXIT_SCHEMA
    except np.linalg.LinAlgError as exc:
        _err(f"linear algebra failure: {exc}")
        return EXIT_COMPUTE
    except MemoryError as exc:
        _err(f"out of memory: {exc}")
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
