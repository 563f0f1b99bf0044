"""Dataset curation: metadata scrubbing, OCR-based filtering, report/study pairing.

Pairing follows the date-grouping convention: within one (patient, date)
group, studies and reports are paired one to one in ascending timestamp
order; groups with unequal counts are ambiguous and discarded whole.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .core import StudyRecord, iter_jsonl
from .errors import SchemaError


@dataclass(frozen=True)
class OcrRecord:
    image_id: str
    extracted_text: str


@dataclass(frozen=True)
class PairedStudy:
    study: StudyRecord
    report_doc_id: str


def read_ocr_records(path: str) -> list[OcrRecord]:
    records: list[OcrRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, obj in iter_jsonl(fh, source=path):
            try:
                records.append(OcrRecord(str(obj["image_id"]), str(obj["extracted_text"])))
            except KeyError as exc:
                raise SchemaError(f"{path}:{lineno}: missing field {exc.args[0]!r}") from exc
    return records


def read_studies(path: str) -> list[StudyRecord]:
    studies: list[StudyRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, obj in iter_jsonl(fh, source=path):
            where = f"{path}:{lineno}"
            try:
                studies.append(
                    StudyRecord(
                        study_id=str(obj["study_id"]),
                        patient_id=str(obj["patient_id"]),
                        date=_dt.date.fromisoformat(obj["date"]),
                        image_ids=tuple(str(i) for i in obj.get("image_ids", [])),
                        timestamp=None if obj.get("timestamp") is None else int(obj["timestamp"]),
                        metadata=dict(obj.get("metadata", {})),
                    )
                )
            except KeyError as exc:
                raise SchemaError(f"{where}: missing field {exc.args[0]!r}") from exc
            except ValueError as exc:
                raise SchemaError(f"{where}: {exc}") from exc
    return studies


def write_studies(studies: Iterable[StudyRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in studies:
            obj = {
                "study_id": s.study_id,
                "patient_id": s.patient_id,
                "date": s.date.isoformat(),
                "image_ids": list(s.image_ids),
                "timestamp": s.timestamp,
                "metadata": s.metadata,
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def non_whitespace_codepoints(text: str) -> int:
    return sum(1 for ch in text if not ch.isspace())


def filter_by_ocr(
    records: Sequence[OcrRecord],
    threshold: int = 35,
) -> tuple[list[str], list[str]]:
    """Partition image ids: keep when non-whitespace code points < threshold.

    Input order is preserved in both halves.
    """
    kept: list[str] = []
    dropped: list[str] = []
    for record in records:
        if non_whitespace_codepoints(record.extracted_text) < threshold:
            kept.append(record.image_id)
        else:
            dropped.append(record.image_id)
    return kept, dropped


def scrub_metadata(
    study: StudyRecord,
    allowlist: Iterable[str],
    id_map: Mapping[str, str],
) -> StudyRecord:
    """Drop all metadata keys outside the allowlist and swap ids for pseudo ids.

    Key order of the surviving metadata is preserved. Unknown patient or
    study ids are schema errors. Idempotent given an id_map closed over its
    own range (pseudo ids mapping to themselves).
    """
    allowed = set(allowlist)
    try:
        new_patient = id_map[study.patient_id]
        new_study = id_map[study.study_id]
    except KeyError as exc:
        raise SchemaError(f"identifier missing from id map: {exc.args[0]!r}") from exc
    metadata = {k: v for k, v in study.metadata.items() if k in allowed}
    return replace(
        study,
        study_id=new_study,
        patient_id=new_patient,
        metadata=metadata,
    )


@dataclass(frozen=True)
class PairItem:
    """Minimal pairing view of a study or a report."""

    item_id: str
    patient_id: str
    date: _dt.date
    timestamp: int | None = None


def _ordered(items: Sequence[PairItem]) -> list[PairItem]:
    # Stable sort: items with timestamps in ascending order first, items
    # without timestamps retain input order after them.
    return sorted(
        items,
        key=lambda it: (0, it.timestamp) if it.timestamp is not None else (1, 0),
    )


def pair_by_date(
    studies: Sequence[PairItem],
    reports: Sequence[PairItem],
) -> tuple[list[tuple[str, str]], list[str]]:
    """Pair studies with reports per (patient, date) group.

    Returns (pairs, discarded_ids): pairs are (study_id, report_id) tuples;
    groups whose study and report counts differ contribute every member to
    the discard list. Every input item lands in exactly one of the two.
    """
    groups: dict[tuple[str, _dt.date], tuple[list[PairItem], list[PairItem]]] = {}
    order: list[tuple[str, _dt.date]] = []
    for item in studies:
        key = (item.patient_id, item.date)
        if key not in groups:
            groups[key] = ([], [])
            order.append(key)
        groups[key][0].append(item)
    for item in reports:
        key = (item.patient_id, item.date)
        if key not in groups:
            groups[key] = ([], [])
            order.append(key)
        groups[key][1].append(item)
    pairs: list[tuple[str, str]] = []
    discarded: list[str] = []
    for key in order:
        group_studies, group_reports = groups[key]
        if len(group_studies) == len(group_reports) and group_studies:
            for s, r in zip(_ordered(group_studies), _ordered(group_reports)):
                pairs.append((s.item_id, r.item_id))
        else:
            discarded.extend(it.item_id for it in group_studies)
            discarded.extend(it.item_id for it in group_reports)
    return pairs, discarded


def pair_studies_with_reports(
    studies: Sequence[StudyRecord],
    reports: Sequence[tuple[str, str, _dt.date]],
) -> tuple[list[PairedStudy], list[str]]:
    """Convenience wrapper pairing StudyRecords with (doc_id, patient_id, date) reports."""
    study_items = [
        PairItem(s.study_id, s.patient_id, s.date, s.timestamp) for s in studies
    ]
    report_items = [PairItem(doc_id, pid, date) for doc_id, pid, date in reports]
    pairs, discarded = pair_by_date(study_items, report_items)
    by_id = {s.study_id: s for s in studies}
    paired = [PairedStudy(study=by_id[sid], report_doc_id=rid) for sid, rid in pairs]
    return paired, discarded
