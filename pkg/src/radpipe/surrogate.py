"""Deterministic surrogate generation for detected PHI spans.

Every patient gets an independent deterministic random stream derived from
the master seed and the patient identifier, so documents can be processed
per patient in any partitioning without changing the output. Dates are
shifted by one per-patient offset (longitudinal intervals survive), names,
locations and institutions are swapped for lexicon samples, id numbers are
re-drawn digit for digit, and removal categories are deleted outright.
"""

from __future__ import annotations

import datetime as _dt
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .core import (
    FRENCH_MONTHS,
    FRENCH_MONTH_ABBREVS,
    AppliedReplacement,
    DeidDocument,
    PhiCategory,
    PhiSpan,
    RawDocument,
    shift_date,
)
from .detect import NAME_PARTICLES, AnnotatedDocument, DetectorConfig, detect
from .errors import ComputeError, SchemaError
from .lexicon import Lexicon, normalize_entry

_MASK64 = (1 << 64) - 1
_FNV_OFFSET_BASIS = 14695981039346656037
_FNV_PRIME = 1099511628211
_GOLDEN = 0x9E3779B97F4A7C15

#: Stream label for corpus-level pseudo-identifier assignment. The NUL bytes
#: keep it out of the space of plausible patient identifiers.
_ID_STREAM_LABEL = "\x00pseudo-id-assignment\x00"


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def splitmix64(x: int) -> int:
    """One SplitMix64 step applied to ``x`` (increment plus finalizer)."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Stream:
    """SplitMix64 output sequence; platform-independent and reproducible."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        out = splitmix64(self._state)
        self._state = (self._state + _GOLDEN) & _MASK64
        return out

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection sampling."""
        if n <= 0:
            raise ValueError("randrange needs a positive bound")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.randrange(hi - lo + 1)

    def choice(self, seq: Sequence):
        return seq[self.randrange(len(seq))]


def derive_patient_stream(master_seed: int, patient_id: str) -> Stream:
    """Stream seeded by splitmix64(master_seed XOR fnv1a64(patient_id))."""
    seed = splitmix64((master_seed & _MASK64) ^ fnv1a64(patient_id.encode("utf-8")))
    return Stream(seed)


# --------------------------------------------------------------------------
# Policy and map.

@dataclass(frozen=True)
class SurrogatePolicy:
    """Everything that parameterizes surrogate generation for one run."""

    master_seed: int
    male_first_names: Lexicon
    female_first_names: Lexicon
    last_names: Lexicon
    cities: Lexicon
    institutions: Lexicon
    date_shift_range: tuple[int, int] = (-1000, 1000)
    removal_categories: frozenset[PhiCategory] = frozenset(
        {PhiCategory.PHONE_NUMBER, PhiCategory.URL_EMAIL}
    )
    age_jitter: int = 0  # 0 keeps ages verbatim

    def __post_init__(self) -> None:
        lo, hi = self.date_shift_range
        if lo > hi:
            raise ValueError("date_shift_range must be (low, high) with low <= high")
        if lo == 0 and hi == 0:
            raise ValueError("date_shift_range must contain a nonzero offset")
        if self.age_jitter < 0:
            raise ValueError("age_jitter must be >= 0")

    @classmethod
    def from_json(cls, path: str, master_seed: int | None = None) -> "SurrogatePolicy":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read surrogate policy {path}: {exc}") from exc
        return cls.from_obj(raw, base=Path(path).parent, where=path, master_seed=master_seed)

    @classmethod
    def from_obj(
        cls,
        raw: dict,
        base: Path,
        where: str,
        master_seed: int | None = None,
    ) -> "SurrogatePolicy":
        """Build a policy from an already-parsed JSON object."""
        if not isinstance(raw, dict):
            raise SchemaError(f"{where}: surrogate policy must be an object")
        path = where
        lex_paths = raw.get("lexicons", {})

        def load_lex(key: str) -> Lexicon:
            if key not in lex_paths:
                raise SchemaError(f"{path}: missing lexicon path for {key!r}")
            lex_path = base / lex_paths[key]
            if not lex_path.exists():
                raise SchemaError(f"{path}: lexicon file not found: {lex_path}")
            return Lexicon.load(str(lex_path), name=key)

        seed = master_seed if master_seed is not None else raw.get("master_seed")
        if seed is None:
            raise SchemaError(f"{path}: master_seed missing and no --seed given")
        removal = raw.get("removal_categories", ["phone_number", "url_email"])
        try:
            removal_cats = frozenset(PhiCategory(v) for v in removal)
        except ValueError as exc:
            raise SchemaError(f"{path}: unknown removal category: {exc}") from exc
        shift_range = tuple(raw.get("date_shift_range", (-1000, 1000)))
        if len(shift_range) != 2:
            raise SchemaError(f"{path}: date_shift_range must be [low, high]")
        return cls(
            master_seed=int(seed),
            male_first_names=load_lex("male_first_names"),
            female_first_names=load_lex("female_first_names"),
            last_names=load_lex("last_names"),
            cities=load_lex("cities"),
            institutions=load_lex("institutions"),
            date_shift_range=(int(shift_range[0]), int(shift_range[1])),
            removal_categories=removal_cats,
            age_jitter=int(raw.get("age_jitter", 0)),
        )


@dataclass
class PatientEntry:
    date_offset_days: int
    replacements: dict[PhiCategory, dict[str, str]] = field(default_factory=dict)
    pseudo_ids: dict[str, str] = field(default_factory=dict)

    def lookup(self, category: PhiCategory, key: str) -> str | None:
        return self.replacements.get(category, {}).get(key)

    def record(self, category: PhiCategory, key: str, value: str) -> None:
        self.replacements.setdefault(category, {})[key] = value

    def used_values(self, categories: Iterable[PhiCategory]) -> set[str]:
        used: set[str] = set()
        for cat in categories:
            used.update(self.replacements.get(cat, {}).values())
        return used


class SurrogateMap:
    """Per-patient surrogate state: date offset, replacement table, pseudo ids."""

    def __init__(self) -> None:
        self.patients: dict[str, PatientEntry] = {}
        self._streams: dict[str, Stream] = {}

    def ensure_patient(self, patient_id: str, policy: SurrogatePolicy) -> PatientEntry:
        entry = self.patients.get(patient_id)
        if entry is None:
            stream = self.stream(patient_id, policy)
            lo, hi = policy.date_shift_range
            offset = stream.randint(lo, hi)
            while offset == 0:
                offset = stream.randint(lo, hi)
            entry = PatientEntry(date_offset_days=offset)
            self.patients[patient_id] = entry
        return entry

    def stream(self, patient_id: str, policy: SurrogatePolicy) -> Stream:
        stream = self._streams.get(patient_id)
        if stream is None:
            stream = derive_patient_stream(policy.master_seed, patient_id)
            self._streams[patient_id] = stream
        return stream

    def to_json(self, path: str) -> None:
        payload = {
            "patients": {
                pid: {
                    "date_offset_days": entry.date_offset_days,
                    "pseudo_ids": entry.pseudo_ids,
                    "replacements": {
                        cat.value: dict(sorted(repls.items()))
                        for cat, repls in sorted(entry.replacements.items(), key=lambda kv: kv[0].value)
                    },
                }
                for pid, entry in self.patients.items()
            }
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, path: str) -> "SurrogateMap":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read surrogate map {path}: {exc}") from exc
        out = cls()
        for pid, data in raw.get("patients", {}).items():
            entry = PatientEntry(date_offset_days=int(data["date_offset_days"]))
            entry.pseudo_ids = dict(data.get("pseudo_ids", {}))
            for cat_name, repls in data.get("replacements", {}).items():
                entry.replacements[PhiCategory(cat_name)] = dict(repls)
            out.patients[pid] = entry
        return out


def assign_pseudo_ids(
    patient_ids: Sequence[str],
    study_ids: Sequence[str],
    stream: Stream,
    max_retries: int = 8,
) -> dict[str, str]:
    """Map every original identifier to a fresh 128-bit hex identifier.

    Collisions trigger regeneration, bounded by ``max_retries`` per id.
    """
    originals = list(patient_ids) + list(study_ids)
    if len(set(originals)) != len(originals):
        raise SchemaError("duplicate identifiers passed to assign_pseudo_ids")
    used: set[str] = set()
    out: dict[str, str] = {}
    for orig in originals:
        candidate = ""
        for _ in range(max_retries + 1):
            candidate = f"{stream.next_u64():016x}{stream.next_u64():016x}"
            if candidate not in used:
                break
        else:
            raise ComputeError("pseudo-id collision retry budget exhausted")
        used.add(candidate)
        out[orig] = candidate
    return out


def corpus_id_stream(master_seed: int) -> Stream:
    """Stream used for corpus-level pseudo-identifier assignment."""
    return derive_patient_stream(master_seed, _ID_STREAM_LABEL)


# --------------------------------------------------------------------------
# Per-category replacement builders.

_NUMERIC_DATE_SURFACE = re.compile(r"(\d{1,2})([/.\-])(\d{1,2})([/.\-])(\d{4}|\d{2})\Z")
_TEXTUAL_DATE_SURFACE = re.compile(r"(\d{1,2})[ \t]+([^\W\d_]+)(\.?)[ \t]+(\d{4})\Z")
_AGE_SURFACE = re.compile(r"(\d{1,3})([ \t]+ans)\Z", re.IGNORECASE)
_INITIAL_TOKEN = re.compile(r"[^\W\d_]\.?\Z")

_FEMALE_TITLES = frozenset({"mme", "madame", "mlle"})


def _month_number(token: str) -> tuple[int, bool] | None:
    """Return (1-based month, is_abbreviated) or None for unknown tokens."""
    norm = normalize_entry(token)
    if norm in FRENCH_MONTHS:
        return FRENCH_MONTHS.index(norm) + 1, False
    if norm in FRENCH_MONTH_ABBREVS:
        return FRENCH_MONTH_ABBREVS.index(norm) + 1, True
    return None


def _pivot_two_digit_year(yy: int) -> int:
    """Two-digit years resolve against a 1930 pivot."""
    return 1900 + yy if yy >= 30 else 2000 + yy


def _date_replacement(surface: str, offset: int, entry: PatientEntry, stream: Stream) -> str:
    m = _NUMERIC_DATE_SURFACE.fullmatch(surface)
    if m is not None:
        day_s, sep1, month_s, sep2, year_s = m.groups()
        year = int(year_s) if len(year_s) == 4 else _pivot_two_digit_year(int(year_s))
        day, month = int(day_s), int(month_s)
        parsed = _try_date(year, month, day) or _try_date(year, day, month)
        if parsed is None:
            parsed = _fallback_date(surface, entry, stream)
        shifted = shift_date(parsed, offset)
        year_out = f"{shifted.year % 100:02d}" if len(year_s) == 2 else f"{shifted.year:04d}"
        return (
            f"{shifted.day:0{len(day_s)}d}{sep1}"
            f"{shifted.month:0{len(month_s)}d}{sep2}{year_out}"
        )
    m = _TEXTUAL_DATE_SURFACE.fullmatch(surface)
    if m is not None:
        day_s, month_tok, dot, year_s = m.groups()
        month_info = _month_number(month_tok)
        if month_info is None:
            parsed = _fallback_date(surface, entry, stream)
            abbreviated = bool(dot)
        else:
            month, abbreviated = month_info
            parsed = _try_date(int(year_s), month, int(day_s))
            if parsed is None:
                parsed = _fallback_date(surface, entry, stream)
        shifted = shift_date(parsed, offset)
        month_out = (
            FRENCH_MONTH_ABBREVS[shifted.month - 1] if abbreviated else FRENCH_MONTHS[shifted.month - 1]
        )
        return f"{shifted.day:0{len(day_s)}d} {month_out}{dot} {shifted.year:04d}"
    # Unrecognized surface shape: substitute a sampled date, numeric rendering.
    parsed = _fallback_date(surface, entry, stream)
    shifted = shift_date(parsed, offset)
    return f"{shifted.day:02d}/{shifted.month:02d}/{shifted.year:04d}"


def _try_date(year: int, month: int, day: int) -> _dt.date | None:
    try:
        return _dt.date(year, month, day)
    except ValueError:
        return None


def _fallback_date(surface: str, entry: PatientEntry, stream: Stream) -> _dt.date:
    """Deterministic random date for unparseable surfaces, cached per surface."""
    key = "\x00fallback\x00" + normalize_entry(surface)
    cached = entry.lookup(PhiCategory.DATE, key)
    if cached is not None:
        return _dt.date.fromisoformat(cached)
    sampled = _dt.date(1960 + stream.randrange(60), 1 + stream.randrange(12), 1 + stream.randrange(28))
    entry.record(PhiCategory.DATE, key, sampled.isoformat())
    return sampled


def _age_replacement(surface: str, policy: SurrogatePolicy, entry: PatientEntry, stream: Stream) -> str:
    if policy.age_jitter == 0:
        return surface
    key = normalize_entry(surface)
    cached = entry.lookup(PhiCategory.AGE, key)
    if cached is not None:
        return cached
    m = _AGE_SURFACE.fullmatch(surface)
    if m is None:
        return surface  # not an age shape we can rewrite; keep
    age = int(m.group(1))
    k = policy.age_jitter
    new_age = age
    for _ in range(32):
        delta = stream.randint(-k, k)
        if delta != 0 and age + delta >= 0:
            new_age = age + delta
            break
    else:
        new_age = age + 1
    rendered = f"{new_age}{m.group(2)}"
    entry.record(PhiCategory.AGE, key, rendered)
    return rendered


def _id_replacement(surface: str, entry: PatientEntry, stream: Stream) -> str:
    key = normalize_entry(surface)
    cached = entry.lookup(PhiCategory.ID_NUMBER, key)
    if cached is not None:
        return cached
    rendered = surface
    for _ in range(8):
        rendered = "".join(
            str(stream.randrange(10)) if ch.isdigit() else ch for ch in surface
        )
        if rendered != surface:
            break
    if rendered == surface:
        # Force a difference deterministically on the last digit.
        for i in range(len(rendered) - 1, -1, -1):
            if rendered[i].isdigit():
                bumped = str((int(rendered[i]) + 1) % 10)
                rendered = rendered[:i] + bumped + rendered[i + 1:]
                break
    entry.record(PhiCategory.ID_NUMBER, key, rendered)
    return rendered


def _match_case(template: str, replacement: str) -> str:
    """Render a lowercase replacement in the casing style of the template."""
    if template.isupper() and len(template) > 1:
        return replacement.upper()
    if template[:1].isupper():
        return _title_case(replacement)
    return replacement


def _title_case(text: str) -> str:
    out = []
    upper_next = True
    for ch in text:
        if upper_next and ch.isalpha():
            out.append(ch.upper())
            upper_next = False
        else:
            out.append(ch)
        if ch in " -'’":
            upper_next = True
    return "".join(out)


def _sample_distinct(
    stream: Stream,
    entries: list[str],
    used: set[str],
    original_norm: str,
) -> str:
    """Draw a lexicon entry distinct from the original and every prior value."""
    if not entries:
        raise ComputeError("replacement lexicon is empty")
    for _ in range(16):
        cand = entries[stream.randrange(len(entries))]
        if cand != original_norm and cand not in used:
            return cand
    for cand in entries:
        if cand != original_norm and cand not in used:
            return cand
    suffix = 2
    while True:
        for cand in entries:
            numbered = f"{cand}{suffix}"
            if numbered != original_norm and numbered not in used:
                return numbered
        suffix += 1


_NAME_CATEGORIES = (PhiCategory.PATIENT_NAME, PhiCategory.PERSON_NAME)


def _infer_gender(text: str, span_start: int) -> str | None:
    """Look at the token immediately before the span for a gendered title."""
    prefix = text[:span_start].rstrip()
    m = re.search(r"([\w'’.\-]+)\Z", prefix)
    if m is None:
        return None
    title = m.group(1).rstrip(".").lower()
    if title in _FEMALE_TITLES:
        return "female"
    return None


def _name_token_kind(norm: str, position: int, name_positions: list[int], doc: RawDocument) -> str:
    known_firsts = {normalize_entry(f) for f, _ in doc.known_patient_names if f}
    known_lasts = {normalize_entry(l) for _, l in doc.known_patient_names if l}
    if norm in known_firsts:
        return "first"
    if norm in known_lasts:
        return "last"
    return "first" if position != name_positions[-1] else "last"


def _name_replacement(
    span: PhiSpan,
    doc: RawDocument,
    policy: SurrogatePolicy,
    entry: PatientEntry,
    stream: Stream,
) -> str:
    """Token-structured name replacement.

    Tokens are swapped one for one: particles stay, initials become fresh
    initials, given/family names come from the policy lexicons. Per-token
    caching keeps every mention of the same name consistent for the patient.
    """
    surface = span.surface
    gender_hint = _infer_gender(doc.text, span.start)
    tokens = [(m.group(), m.start(), m.end()) for m in re.finditer(r"\S+", surface)]
    name_positions = [
        i
        for i, (tok, _, _) in enumerate(tokens)
        if tok.lower() not in NAME_PARTICLES and not _INITIAL_TOKEN.fullmatch(tok)
    ]
    used = entry.used_values(_NAME_CATEGORIES)
    pieces: list[str] = []
    cursor = 0
    for i, (tok, tok_start, tok_end) in enumerate(tokens):
        pieces.append(surface[cursor:tok_start])
        cursor = tok_end
        if tok.lower() in NAME_PARTICLES:
            pieces.append(tok)
            continue
        if _INITIAL_TOKEN.fullmatch(tok):
            key = "initial:" + tok[0].lower()
            cached = _lookup_name(entry, key)
            if cached is None:
                first = _sample_first_name(policy, stream, gender_hint, used, tok[0].lower())
                cached = first[0]
                entry.record(span.category, key, cached)
            rendered = cached.upper() + ("." if tok.endswith(".") else "")
            pieces.append(rendered)
            continue
        norm = normalize_entry(tok)
        cached = _lookup_name(entry, norm)
        if cached is None:
            kind = _name_token_kind(norm, i, name_positions, doc)
            if kind == "first":
                cached = _sample_first_name(policy, stream, gender_hint, used, norm)
            else:
                cached = _sample_distinct(stream, policy.last_names.sorted_entries(), used, norm)
            entry.record(span.category, norm, cached)
            used.add(cached)
        pieces.append(_match_case(tok, cached))
    pieces.append(surface[cursor:])
    return "".join(pieces)


def _lookup_name(entry: PatientEntry, key: str) -> str | None:
    for cat in _NAME_CATEGORIES:
        found = entry.lookup(cat, key)
        if found is not None:
            return found
    return None


def _sample_first_name(
    policy: SurrogatePolicy,
    stream: Stream,
    gender_hint: str | None,
    used: set[str],
    original_norm: str,
) -> str:
    if gender_hint == "female":
        lexicon = policy.female_first_names
    else:
        lexicon = policy.female_first_names if stream.randrange(2) == 1 else policy.male_first_names
    return _sample_distinct(stream, lexicon.sorted_entries(), used, original_norm)


def _whole_surface_replacement(
    span: PhiSpan,
    lexicon: Lexicon,
    entry: PatientEntry,
    stream: Stream,
) -> str:
    key = normalize_entry(span.surface)
    cached = entry.lookup(span.category, key)
    if cached is None:
        used = entry.used_values([span.category])
        cached = _sample_distinct(stream, lexicon.sorted_entries(), used, key)
        entry.record(span.category, key, cached)
    return _match_case(span.surface, cached)


def _replacement_for(
    span: PhiSpan,
    doc: RawDocument,
    policy: SurrogatePolicy,
    entry: PatientEntry,
    stream: Stream,
) -> str:
    cat = span.category
    if cat in policy.removal_categories:
        return ""
    if cat is PhiCategory.DATE:
        return _date_replacement(span.surface, entry.date_offset_days, entry, stream)
    if cat is PhiCategory.AGE:
        return _age_replacement(span.surface, policy, entry, stream)
    if cat is PhiCategory.ID_NUMBER:
        return _id_replacement(span.surface, entry, stream)
    if cat in _NAME_CATEGORIES:
        return _name_replacement(span, doc, policy, entry, stream)
    if cat is PhiCategory.LOCATION:
        return _whole_surface_replacement(span, policy.cities, entry, stream)
    if cat is PhiCategory.INSTITUTION:
        return _whole_surface_replacement(span, policy.institutions, entry, stream)
    raise ComputeError(f"no replacement strategy for category {cat}")


def apply_surrogates(
    annotated: AnnotatedDocument,
    policy: SurrogatePolicy,
    surrogate_map: SurrogateMap,
) -> tuple[DeidDocument, SurrogateMap]:
    """Rewrite one annotated document, updating the shared map in place."""
    doc = annotated.doc
    entry = surrogate_map.ensure_patient(doc.patient_id, policy)
    stream = surrogate_map.stream(doc.patient_id, policy)
    applied: list[AppliedReplacement] = []
    pieces: list[str] = []
    cursor = 0
    keep_age = policy.age_jitter == 0 and PhiCategory.AGE not in policy.removal_categories
    for span in annotated.spans:
        replacement = _replacement_for(span, doc, policy, entry, stream)
        if replacement == span.surface and not (span.category is PhiCategory.AGE and keep_age):
            raise ComputeError(
                f"replacement equals original surface for {span.category}: {span.surface!r}"
            )
        applied.append(AppliedReplacement(span, replacement))
        pieces.append(doc.text[cursor:span.start])
        pieces.append(replacement)
        cursor = span.end
        if replacement == "":
            # Deletion can butt two whitespace runs together; fold one char.
            before = "".join(pieces)
            if before[-1:] in (" ", "\t") and cursor < len(doc.text) and doc.text[cursor] in (" ", "\t"):
                cursor += 1
    pieces.append(doc.text[cursor:])
    new_text = "".join(pieces)
    pseudo = entry.pseudo_ids.get(doc.patient_id)
    if pseudo is None:
        pseudo = f"{stream.next_u64():016x}{stream.next_u64():016x}"
        entry.pseudo_ids[doc.patient_id] = pseudo
    deid = DeidDocument(
        doc_id=doc.doc_id,
        pseudo_patient_id=pseudo,
        text=new_text,
        applied=tuple(applied),
        date=shift_date(doc.date, entry.date_offset_days),
    )
    return deid, surrogate_map


def pseudonymize_corpus(
    docs: Sequence[RawDocument],
    detector_cfg: DetectorConfig,
    policy: SurrogatePolicy,
    threads: int = 1,
) -> tuple[list[DeidDocument], SurrogateMap]:
    """Detect and rewrite a whole corpus.

    Work is partitioned by patient and each patient's documents are handled
    sequentially in corpus order, so the output is byte-identical for any
    thread count.
    """
    surrogate_map = SurrogateMap()
    patient_order: list[str] = []
    seen: set[str] = set()
    for doc in docs:
        if doc.patient_id not in seen:
            seen.add(doc.patient_id)
            patient_order.append(doc.patient_id)
    id_map = assign_pseudo_ids(patient_order, (), corpus_id_stream(policy.master_seed))
    for pid in patient_order:
        entry = surrogate_map.ensure_patient(pid, policy)
        entry.pseudo_ids[pid] = id_map[pid]
        surrogate_map.stream(pid, policy)

    groups: dict[str, list[tuple[int, RawDocument]]] = {}
    for idx, doc in enumerate(docs):
        groups.setdefault(doc.patient_id, []).append((idx, doc))

    results: list[DeidDocument | None] = [None] * len(docs)

    def handle_patient(pid: str) -> None:
        for idx, doc in groups[pid]:
            annotated = detect(doc, detector_cfg)
            deid, _ = apply_surrogates(annotated, policy, surrogate_map)
            results[idx] = deid

    if threads <= 1:
        for pid in patient_order:
            handle_patient(pid)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(handle_patient, patient_order))

    return [r for r in results if r is not None], surrogate_map
