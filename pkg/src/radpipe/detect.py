"""Rule-based PHI detection for French clinical text.

Nine rule families produce candidate spans (patient names, other person
names, locations, institutions, dates, ages, id numbers, phone numbers,
URLs/e-mails). Candidates are then reduced to a non-overlapping set:
longest span first, category precedence breaking exact ties.

Text is defensively NFC-normalized before matching; all offsets are
code-point offsets into the normalized text.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .core import FRENCH_MONTHS, FRENCH_MONTH_ABBREVS, PhiCategory, PhiSpan, RawDocument, nfc
from .errors import SchemaError
from .lexicon import Lexicon, normalize_entry

DEFAULT_TITLE_TRIGGERS: tuple[str, ...] = (
    "Dr", "Docteur", "Pr", "Professeur", "Monsieur", "Madame", "M.", "Mme", "Mlle",
)

#: Name particles allowed between capitalized name tokens.
NAME_PARTICLES = frozenset({"de", "du", "des", "van", "le", "la"})

#: Of-phrase tokens allowed inside street and institution names.
OF_PHRASE_WORDS = frozenset({"de", "du", "des", "le", "la", "les"})

#: Tie-breaking precedence between categories, highest first.
DEFAULT_PRECEDENCE: tuple[PhiCategory, ...] = (
    PhiCategory.PATIENT_NAME,
    PhiCategory.PERSON_NAME,
    PhiCategory.ID_NUMBER,
    PhiCategory.DATE,
    PhiCategory.PHONE_NUMBER,
    PhiCategory.URL_EMAIL,
    PhiCategory.AGE,
    PhiCategory.INSTITUTION,
    PhiCategory.LOCATION,
)

_TOKEN_RE = re.compile(r"[^\W\d_][\w'’\-]*")
_EMAIL_RE = re.compile(r"[\w.+\-]+@[\w\-]+(?:\.[\w\-]+)+")
_URL_RE = re.compile(r"(?:https?://|www\.)[^\s<>\"')]+", re.IGNORECASE)
_NUMERIC_DATE_RE = re.compile(r"(?<![\d/.\-])(\d{1,2})([/.\-])(\d{1,2})([/.\-])(\d{4}|\d{2})(?!\d)")
_AGE_RE = re.compile(r"(?<!\d)\d{1,3}[ \t]+ans(?!\w)", re.IGNORECASE)
_BELGIAN_NN_RE = re.compile(r"(?<!\d)\d{2}\.\d{2}\.\d{2}-\d{3}\.\d{2}(?!\d)")
_PHONE_RE = re.compile(r"(?<!\d)(?:\+3[23]|0)(?:[ /.\-]?\d){8,10}(?!\d)")
_STREET_RE = re.compile(r"(?<!\d)\d{1,4}[ \t]*,?[ \t]+(?:rue|avenue|boulevard|chaussée|place)(?!\w)", re.IGNORECASE)
_INSTITUTION_KEYWORD_RE = re.compile(r"(?<!\w)(?:clinique|hôpital|chu|maison[ \t]+de[ \t]+repos)(?!\w)", re.IGNORECASE)
_POSTAL_BEFORE_RE = re.compile(r"(?<!\d)(\d{4,5})[ \t]+\Z")
_TRAILING_PUNCT = ".,;:!?)"


def default_months_lexicon() -> Lexicon:
    """French month names plus their conventional abbreviations."""
    return Lexicon.from_entries("months", FRENCH_MONTHS + FRENCH_MONTH_ABBREVS)


@dataclass(frozen=True)
class DetectorConfig:
    first_names: Lexicon
    last_names: Lexicon
    cities: Lexicon
    institutions: Lexicon
    months: Lexicon = dataclasses.field(default_factory=default_months_lexicon)
    min_id_digits: int = 7
    title_triggers: tuple[str, ...] = DEFAULT_TITLE_TRIGGERS
    category_precedence: tuple[PhiCategory, ...] = DEFAULT_PRECEDENCE

    def __post_init__(self) -> None:
        if self.min_id_digits < 1:
            raise ValueError("min_id_digits must be >= 1")
        if set(self.category_precedence) != set(PhiCategory):
            raise ValueError("category_precedence must be a total order over all categories")

    @classmethod
    def from_json(cls, path: str) -> "DetectorConfig":
        """Load a detector configuration; lexicon paths resolve relative to the file."""
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read detector config {path}: {exc}") from exc
        return cls.from_obj(raw, base=Path(path).parent, where=path)

    @classmethod
    def from_obj(cls, raw: dict, base: Path, where: str) -> "DetectorConfig":
        """Build a configuration from an already-parsed JSON object."""
        if not isinstance(raw, dict):
            raise SchemaError(f"{where}: detector config must be an object")
        path = where
        lex_paths = raw.get("lexicons", {})

        def load_lex(key: str) -> Lexicon:
            if key not in lex_paths:
                raise SchemaError(f"{path}: missing lexicon path for {key!r}")
            lex_path = base / lex_paths[key]
            if not lex_path.exists():
                raise SchemaError(f"{path}: lexicon file not found: {lex_path}")
            return Lexicon.load(str(lex_path), name=key)

        months = load_lex("months") if "months" in lex_paths else default_months_lexicon()
        precedence = DEFAULT_PRECEDENCE
        if "category_precedence" in raw:
            try:
                precedence = tuple(PhiCategory(v) for v in raw["category_precedence"])
            except ValueError as exc:
                raise SchemaError(f"{path}: unknown category in precedence list: {exc}") from exc
        return cls(
            first_names=load_lex("first_names"),
            last_names=load_lex("last_names"),
            cities=load_lex("cities"),
            institutions=load_lex("institutions"),
            months=months,
            min_id_digits=int(raw.get("min_id_digits", 7)),
            title_triggers=tuple(raw.get("title_triggers", DEFAULT_TITLE_TRIGGERS)),
            category_precedence=precedence,
        )


@dataclass(frozen=True)
class AnnotatedDocument:
    doc: RawDocument
    spans: tuple[PhiSpan, ...]

    def __post_init__(self) -> None:
        prev_end = -1
        for span in self.spans:
            if span.start < prev_end:
                raise ValueError("annotated spans must be sorted and non-overlapping")
            span.validate_against(self.doc.text)
            prev_end = span.end


# --------------------------------------------------------------------------
# Shared token helpers.

def _tokens(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _is_cap_token(tok: str) -> bool:
    """Capitalized non-acronym token, tolerating l'/d' elisions."""
    core = tok
    for prefix in ("l'", "d'", "L'", "D'", "l’", "d’", "L’", "D’"):
        if tok.startswith(prefix):
            core = tok[len(prefix):]
            break
    if len(core) < 2:
        return False
    return core[0].isupper() and any(c.islower() for c in core[1:])


def _soften_uppercase_lines(text: str) -> str:
    """Lowercase all-uppercase lines except each word's first letter.

    Capitalization cues (rules for names, streets, institutions) would
    otherwise be useless on shouted header lines. The transform is strictly
    one-to-one per code point so offsets are preserved.
    """
    out_lines = []
    for line in text.split("\n"):
        letters = [c for c in line if c.isalpha()]
        if letters and all(c.isupper() for c in letters):
            chars = []
            prev_alpha = False
            for ch in line:
                if ch.isalpha() and prev_alpha:
                    low = ch.lower()
                    chars.append(low if len(low) == 1 else ch)
                else:
                    chars.append(ch)
                prev_alpha = ch.isalpha()
            out_lines.append("".join(chars))
        else:
            out_lines.append(line)
    return "\n".join(out_lines)


_GAP_RE = re.compile(r"[ \t]+")


def _scan_name_sequence(
    soft: str,
    pos: int,
    max_caps: int,
    particles: frozenset[str],
) -> tuple[int, int] | None:
    """Scan forward from ``pos`` for capitalized tokens interleaved with particles.

    Returns the covered (start, end) or None when no capitalized token follows.
    Token separators are spaces or tabs only; any other character ends the scan.
    Trailing particles are not included in the span.
    """
    cursor = pos
    caps = 0
    span_start: int | None = None
    last_cap_end: int | None = None
    while caps < max_caps:
        gap = _GAP_RE.match(soft, cursor)
        if gap is None:
            break
        tok_match = _TOKEN_RE.match(soft, gap.end())
        if tok_match is None:
            break
        tok = tok_match.group()
        if tok.lower() in particles:
            if span_start is None:
                span_start = tok_match.start()
        elif _is_cap_token(tok):
            if span_start is None:
                span_start = tok_match.start()
            caps += 1
            last_cap_end = tok_match.end()
        else:
            break
        cursor = tok_match.end()
    if last_cap_end is None or span_start is None:
        return None
    return span_start, last_cap_end


def _strip_trailing_punct(text: str, start: int, end: int) -> int:
    while end > start and text[end - 1] in _TRAILING_PUNCT:
        end -= 1
    return end


def _lexicon_phrase_hits(text: str, tokens: list[tuple[str, int, int]], lexicon: Lexicon) -> list[tuple[int, int]]:
    """Match multi-word lexicon entries against the token stream."""
    hits: list[tuple[int, int]] = []
    max_words = min(lexicon.max_words, 4)
    for i in range(len(tokens)):
        for n in range(1, max_words + 1):
            if i + n > len(tokens):
                break
            if n > 1:
                gap_ok = all(
                    set(text[tokens[k][2]:tokens[k + 1][1]]) <= {" ", "\t"}
                    for k in range(i, i + n - 1)
                )
                if not gap_ok:
                    break
            phrase = normalize_entry(text[tokens[i][1]:tokens[i + n - 1][2]])
            if phrase in lexicon.entries:
                hits.append((tokens[i][1], tokens[i + n - 1][2]))
    return hits


def _mk_span(text: str, start: int, end: int, category: PhiCategory) -> PhiSpan:
    return PhiSpan(start=start, end=end, category=category, surface=text[start:end])


# --------------------------------------------------------------------------
# Rules. Each returns candidate spans; overlaps are resolved afterwards.

def _rule_patient_names(text: str, doc: RawDocument) -> list[PhiSpan]:
    """Known patient name components, plus 'Initial. Lastname' forms."""
    intervals: list[tuple[int, int]] = []
    for first, last in doc.known_patient_names:
        first = first.strip()
        last = last.strip()
        for component in (first, last):
            if len(component) < 2:
                continue
            pattern = re.compile(rf"(?<!\w){re.escape(component)}(?!\w)", re.IGNORECASE)
            intervals.extend(m.span() for m in pattern.finditer(text))
        if first and last:
            initial_form = re.compile(
                rf"(?<!\w){re.escape(first[0])}\.?[ \t]+{re.escape(last)}(?!\w)", re.IGNORECASE
            )
            intervals.extend(m.span() for m in initial_form.finditer(text))
    merged = _merge_adjacent(text, intervals)
    return [_mk_span(text, s, e, PhiCategory.PATIENT_NAME) for s, e in merged]


def _merge_adjacent(text: str, intervals: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Union overlapping intervals and intervals separated by whitespace only."""
    if not intervals:
        return []
    intervals = sorted(set(intervals))
    merged = [intervals[0]]
    for start, end in intervals[1:]:
        prev_start, prev_end = merged[-1]
        gap = text[prev_end:start]
        if start <= prev_end or (gap and set(gap) <= {" ", "\t"}):
            merged[-1] = (prev_start, max(prev_end, end))
        else:
            merged.append((start, end))
    return merged


def _title_trigger_re(triggers: tuple[str, ...]) -> re.Pattern:
    parts = []
    for trig in sorted(triggers, key=len, reverse=True):
        if trig.endswith("."):
            parts.append(re.escape(trig))
        else:
            parts.append(re.escape(trig) + r"\b\.?")
    return re.compile(r"(?<!\w)(?:" + "|".join(parts) + ")", re.IGNORECASE)


def _rule_person_names(text: str, soft: str, cfg: DetectorConfig) -> list[PhiSpan]:
    """Title-triggered names and first-name-lexicon hits followed by a capitalized token."""
    spans: list[PhiSpan] = []
    trigger_re = _title_trigger_re(cfg.title_triggers)
    for m in trigger_re.finditer(soft):
        found = _scan_name_sequence(soft, m.end(), max_caps=3, particles=NAME_PARTICLES)
        if found is not None:
            spans.append(_mk_span(text, found[0], found[1], PhiCategory.PERSON_NAME))
    for tok, start, end in _tokens(soft):
        if not _is_cap_token(tok):
            continue
        if normalize_entry(tok) not in cfg.first_names.entries:
            continue
        found = _scan_name_sequence(soft, end, max_caps=1, particles=NAME_PARTICLES)
        if found is not None:
            spans.append(_mk_span(text, start, found[1], PhiCategory.PERSON_NAME))
    return spans


def _rule_locations(text: str, soft: str, cfg: DetectorConfig) -> list[PhiSpan]:
    spans: list[PhiSpan] = []
    tokens = _tokens(text)
    city_hits = _lexicon_phrase_hits(text, tokens, cfg.cities)
    for start, end in city_hits:
        spans.append(_mk_span(text, start, end, PhiCategory.LOCATION))
        postal = _POSTAL_BEFORE_RE.search(text, 0, start)
        if postal is not None:
            spans.append(_mk_span(text, postal.start(1), end, PhiCategory.LOCATION))
    for m in _STREET_RE.finditer(soft):
        found = _scan_name_sequence(soft, m.end(), max_caps=3, particles=OF_PHRASE_WORDS)
        if found is not None:
            spans.append(_mk_span(text, m.start(), found[1], PhiCategory.LOCATION))
    return spans


def _rule_institutions(text: str, soft: str, cfg: DetectorConfig) -> list[PhiSpan]:
    spans: list[PhiSpan] = []
    tokens = _tokens(text)
    for start, end in _lexicon_phrase_hits(text, tokens, cfg.institutions):
        spans.append(_mk_span(text, start, end, PhiCategory.INSTITUTION))
    for m in _INSTITUTION_KEYWORD_RE.finditer(soft):
        found = _scan_name_sequence(soft, m.end(), max_caps=4, particles=OF_PHRASE_WORDS)
        if found is not None:
            spans.append(_mk_span(text, m.start(), found[1], PhiCategory.INSTITUTION))
    return spans


def _rule_dates(text: str, cfg: DetectorConfig) -> list[PhiSpan]:
    spans = [
        _mk_span(text, m.start(), m.end(), PhiCategory.DATE)
        for m in _NUMERIC_DATE_RE.finditer(text)
    ]
    month_alt = "|".join(re.escape(e) for e in sorted(cfg.months.entries, key=len, reverse=True))
    if month_alt:
        textual = re.compile(
            rf"(?<!\d)\d{{1,2}}[ \t]+(?:{month_alt})\.?[ \t]+\d{{4}}(?!\d)", re.IGNORECASE
        )
        spans.extend(
            _mk_span(text, m.start(), m.end(), PhiCategory.DATE) for m in textual.finditer(text)
        )
    return spans


def _rule_ages(text: str) -> list[PhiSpan]:
    return [_mk_span(text, m.start(), m.end(), PhiCategory.AGE) for m in _AGE_RE.finditer(text)]


def _rule_id_numbers(text: str, cfg: DetectorConfig) -> list[PhiSpan]:
    plain = re.compile(rf"(?<!\d)\d{{{cfg.min_id_digits},}}(?!\d)")
    spans = [_mk_span(text, m.start(), m.end(), PhiCategory.ID_NUMBER) for m in plain.finditer(text)]
    if 11 >= cfg.min_id_digits:
        spans.extend(
            _mk_span(text, m.start(), m.end(), PhiCategory.ID_NUMBER)
            for m in _BELGIAN_NN_RE.finditer(text)
        )
    return spans


def _rule_phone_numbers(text: str) -> list[PhiSpan]:
    return [_mk_span(text, m.start(), m.end(), PhiCategory.PHONE_NUMBER) for m in _PHONE_RE.finditer(text)]


def _rule_urls_emails(text: str) -> list[PhiSpan]:
    spans = []
    for m in _EMAIL_RE.finditer(text):
        end = _strip_trailing_punct(text, m.start(), m.end())
        if end > m.start():
            spans.append(_mk_span(text, m.start(), end, PhiCategory.URL_EMAIL))
    for m in _URL_RE.finditer(text):
        end = _strip_trailing_punct(text, m.start(), m.end())
        if end > m.start():
            spans.append(_mk_span(text, m.start(), end, PhiCategory.URL_EMAIL))
    return spans


# --------------------------------------------------------------------------
# Overlap resolution and entry point.

def resolve_overlaps(
    spans: list[PhiSpan],
    precedence: tuple[PhiCategory, ...] = DEFAULT_PRECEDENCE,
) -> list[PhiSpan]:
    """Reduce candidates to a non-overlapping set.

    Longest span wins; exact-length ties fall to category precedence, then
    to document order. The result is sorted by start offset.
    """
    rank = {cat: i for i, cat in enumerate(precedence)}
    unique = list({(s.start, s.end, s.category): s for s in spans}.values())
    unique.sort(key=lambda s: (-len(s), rank.get(s.category, len(rank)), s.start, s.end))
    kept: list[PhiSpan] = []
    for span in unique:
        if all(not span.overlaps(existing) for existing in kept):
            kept.append(span)
    kept.sort(key=lambda s: s.start)
    return kept


def detect(doc: RawDocument, cfg: DetectorConfig) -> AnnotatedDocument:
    """Run every rule over one document and resolve overlaps.

    When the input text is not NFC, the returned document carries the
    normalized text and all offsets refer to it.
    """
    text = nfc(doc.text)
    if text != doc.text:
        doc = dataclasses.replace(doc, text=text)
    soft = _soften_uppercase_lines(text)
    candidates: list[PhiSpan] = []
    candidates += _rule_patient_names(text, doc)
    candidates += _rule_person_names(text, soft, cfg)
    candidates += _rule_locations(text, soft, cfg)
    candidates += _rule_institutions(text, soft, cfg)
    candidates += _rule_dates(text, cfg)
    candidates += _rule_ages(text)
    candidates += _rule_id_numbers(text, cfg)
    candidates += _rule_phone_numbers(text)
    candidates += _rule_urls_emails(text)
    spans = resolve_overlaps(candidates, cfg.category_precedence)
    return AnnotatedDocument(doc=doc, spans=tuple(spans))
