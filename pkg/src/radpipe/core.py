"""Core value types, calendar arithmetic and code-point text handling.

All span offsets throughout the toolkit are Unicode code-point offsets into
NFC-normalized text, never byte offsets. Dates are proleptic Gregorian and
are carried as ``datetime.date`` (exact day arithmetic, years 1..9999).
"""

from __future__ import annotations

import datetime as _dt
import enum
import json
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

from .errors import SchemaError


class PhiCategory(enum.Enum):
    """The nine PHI categories, declared in report row order."""

    PATIENT_NAME = "patient_name"
    PERSON_NAME = "person_name"
    LOCATION = "location"
    INSTITUTION = "institution"
    DATE = "date"
    AGE = "age"
    ID_NUMBER = "id_number"
    PHONE_NUMBER = "phone_number"
    URL_EMAIL = "url_email"


#: Human-readable row labels used by evaluation tables, keyed by category.
CATEGORY_LABELS: dict[PhiCategory, str] = {
    PhiCategory.PATIENT_NAME: "Patient names",
    PhiCategory.PERSON_NAME: "Person names",
    PhiCategory.LOCATION: "Locations",
    PhiCategory.INSTITUTION: "Institutions",
    PhiCategory.DATE: "Dates",
    PhiCategory.AGE: "Ages",
    PhiCategory.ID_NUMBER: "ID numbers",
    PhiCategory.PHONE_NUMBER: "Phone numbers",
    PhiCategory.URL_EMAIL: "URL/e-mails",
}

#: French month names, index 0 is January.
FRENCH_MONTHS: tuple[str, ...] = (
    "janvier", "février", "mars", "avril", "mai", "juin",
    "juillet", "août", "septembre", "octobre", "novembre", "décembre",
)

#: Conventional abbreviations aligned with FRENCH_MONTHS (some months have none).
FRENCH_MONTH_ABBREVS: tuple[str, ...] = (
    "janv", "févr", "mars", "avr", "mai", "juin",
    "juil", "août", "sept", "oct", "nov", "déc",
)


def nfc(text: str) -> str:
    """Return ``text`` in Unicode NFC form."""
    return unicodedata.normalize("NFC", text)


def slice_codepoints(text: str, start: int, end: int) -> str:
    """Slice ``text`` by code-point offsets, validating the bounds.

    Raises ValueError when the offsets do not satisfy
    ``0 <= start <= end <= len(text)``.
    """
    if not (0 <= start <= end <= len(text)):
        raise ValueError(
            f"span [{start}, {end}) out of bounds for text of length {len(text)}"
        )
    return text[start:end]


def shift_date(day: _dt.date, offset_days: int) -> _dt.date:
    """Shift a date by a signed number of days (exact calendar arithmetic)."""
    try:
        return day + _dt.timedelta(days=offset_days)
    except OverflowError as exc:
        raise ValueError(f"shifted date out of representable range: {day} {offset_days:+d}") from exc


@dataclass(frozen=True)
class PhiSpan:
    """A detected or gold PHI mention: half-open code-point interval plus surface."""

    start: int
    end: int
    category: PhiCategory
    surface: str

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"invalid span bounds [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "PhiSpan") -> bool:
        return self.start < other.end and other.start < self.end

    def validate_against(self, text: str) -> None:
        """Check that the recorded surface equals the slice of ``text``."""
        got = slice_codepoints(text, self.start, self.end)
        if got != self.surface:
            raise ValueError(
                f"span surface mismatch at [{self.start}, {self.end}): "
                f"{self.surface!r} != {got!r}"
            )


@dataclass(frozen=True)
class RawDocument:
    """One clinical report as read from the input corpus."""

    doc_id: str
    patient_id: str
    date: _dt.date
    text: str
    known_patient_names: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        if not self.patient_id:
            raise ValueError("patient_id must be non-empty")


@dataclass(frozen=True)
class AppliedReplacement:
    """Audit record for one rewritten span."""

    span: PhiSpan
    replacement: str


@dataclass(frozen=True)
class DeidDocument:
    """A pseudonymized report plus the audit trail of applied replacements.

    ``applied`` spans carry offsets into the original text, so re-slicing the
    original document reproduces each original surface.
    """

    doc_id: str
    pseudo_patient_id: str
    text: str
    applied: tuple[AppliedReplacement, ...]
    date: _dt.date | None = None


@dataclass(frozen=True)
class StudyRecord:
    """One imaging study: identifiers, acquisition date and free-form metadata."""

    study_id: str
    patient_id: str
    date: _dt.date
    image_ids: tuple[str, ...] = ()
    timestamp: int | None = None
    metadata: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.study_id:
            raise ValueError("study_id must be non-empty")
        if not self.patient_id:
            raise ValueError("patient_id must be non-empty")


# --------------------------------------------------------------------------
# Line-JSON corpus serialization (UTF-8, LF, ISO-8601 dates).

def iter_jsonl(stream: TextIO, source: str = "<stream>") -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) for every non-blank line of a JSONL stream.

    Raises SchemaError naming the offending line on malformed JSON.
    """
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{source}:{lineno}: malformed JSON line: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise SchemaError(f"{source}:{lineno}: expected a JSON object")
        yield lineno, obj


def _parse_iso_date(value: object, where: str) -> _dt.date:
    if not isinstance(value, str):
        raise SchemaError(f"{where}: date must be an ISO-8601 string")
    try:
        return _dt.date.fromisoformat(value)
    except ValueError as exc:
        raise SchemaError(f"{where}: invalid ISO-8601 date {value!r}") from exc


def document_from_obj(obj: dict, where: str = "<doc>") -> RawDocument:
    """Build a RawDocument from a parsed corpus line."""
    try:
        doc_id = obj["doc_id"]
        patient_id = obj["patient_id"]
        date = _parse_iso_date(obj["date"], where)
        text = obj["text"]
    except KeyError as exc:
        raise SchemaError(f"{where}: missing field {exc.args[0]!r}") from exc
    if not isinstance(doc_id, str) or not isinstance(patient_id, str) or not isinstance(text, str):
        raise SchemaError(f"{where}: doc_id, patient_id and text must be strings")
    names_raw = obj.get("known_patient_names", [])
    names: list[tuple[str, str]] = []
    for item in names_raw:
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            raise SchemaError(f"{where}: known_patient_names entries must be [first, last] pairs")
        names.append((str(item[0]), str(item[1])))
    try:
        return RawDocument(doc_id, patient_id, date, text, tuple(names))
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def document_to_obj(doc: RawDocument) -> dict:
    return {
        "doc_id": doc.doc_id,
        "patient_id": doc.patient_id,
        "date": doc.date.isoformat(),
        "text": doc.text,
        "known_patient_names": [list(pair) for pair in doc.known_patient_names],
    }


def read_documents(path: str) -> list[RawDocument]:
    """Read a line-JSON corpus file."""
    docs: list[RawDocument] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, obj in iter_jsonl(fh, source=path):
            docs.append(document_from_obj(obj, where=f"{path}:{lineno}"))
    return docs


def write_documents(docs: Iterable[RawDocument], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(json.dumps(document_to_obj(doc), ensure_ascii=False) + "\n")


def deid_document_to_obj(doc: DeidDocument) -> dict:
    obj: dict[str, object] = {
        "doc_id": doc.doc_id,
        "patient_id": doc.pseudo_patient_id,
        "text": doc.text,
        "known_patient_names": [],
        "applied": [
            {
                "start": rep.span.start,
                "end": rep.span.end,
                "category": rep.span.category.value,
                "surface": rep.span.surface,
                "replacement": rep.replacement,
            }
            for rep in doc.applied
        ],
    }
    if doc.date is not None:
        obj["date"] = doc.date.isoformat()
    return obj


def deid_document_from_obj(obj: dict, where: str = "<deid>") -> DeidDocument:
    try:
        doc_id = obj["doc_id"]
        pseudo = obj["patient_id"]
        text = obj["text"]
        applied_raw = obj["applied"]
    except KeyError as exc:
        raise SchemaError(f"{where}: missing field {exc.args[0]!r}") from exc
    applied = []
    for item in applied_raw:
        span = PhiSpan(
            start=int(item["start"]),
            end=int(item["end"]),
            category=PhiCategory(item["category"]),
            surface=str(item["surface"]),
        )
        applied.append(AppliedReplacement(span, str(item["replacement"])))
    date = _parse_iso_date(obj["date"], where) if "date" in obj else None
    return DeidDocument(doc_id, pseudo, text, tuple(applied), date)


def write_deid_documents(docs: Iterable[DeidDocument], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(json.dumps(deid_document_to_obj(doc), ensure_ascii=False) + "\n")


def read_deid_documents(path: str) -> list[DeidDocument]:
    docs: list[DeidDocument] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, obj in iter_jsonl(fh, source=path):
            docs.append(deid_document_from_obj(obj, where=f"{path}:{lineno}"))
    return docs
