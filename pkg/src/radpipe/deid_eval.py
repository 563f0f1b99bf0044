"""Precision/recall/F1 evaluation of predicted PHI spans against a gold standard.

Two matching policies: Exact (identical offsets and category) and Overlap
(at least one shared code point, same category, greedy one-to-one pairing
by descending overlap length). Zero-support categories report 1.0 with an
explicit support flag instead of dividing by zero.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import CATEGORY_LABELS, PhiCategory, PhiSpan, iter_jsonl
from .errors import SchemaError


class MatchPolicy(enum.Enum):
    EXACT = "exact"
    OVERLAP = "overlap"


@dataclass(frozen=True)
class GoldDocument:
    doc_id: str
    spans: tuple[PhiSpan, ...]


@dataclass(frozen=True)
class GoldCorpus:
    documents: tuple[GoldDocument, ...]

    def by_doc_id(self) -> dict[str, tuple[PhiSpan, ...]]:
        return {doc.doc_id: doc.spans for doc in self.documents}

    @classmethod
    def load(cls, path: str) -> "GoldCorpus":
        docs: list[GoldDocument] = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, obj in iter_jsonl(fh, source=path):
                where = f"{path}:{lineno}"
                try:
                    doc_id = obj["doc_id"]
                    spans_raw = obj["spans"]
                except KeyError as exc:
                    raise SchemaError(f"{where}: missing field {exc.args[0]!r}") from exc
                spans = []
                for item in spans_raw:
                    try:
                        spans.append(
                            PhiSpan(
                                start=int(item["start"]),
                                end=int(item["end"]),
                                category=PhiCategory(item["category"]),
                                surface=str(item.get("surface", "")),
                            )
                        )
                    except (KeyError, ValueError) as exc:
                        raise SchemaError(f"{where}: bad span: {exc}") from exc
                docs.append(GoldDocument(doc_id=doc_id, spans=tuple(spans)))
        return cls(documents=tuple(docs))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for doc in self.documents:
                obj = {
                    "doc_id": doc.doc_id,
                    "spans": [
                        {
                            "start": s.start,
                            "end": s.end,
                            "category": s.category.value,
                            "surface": s.surface,
                        }
                        for s in doc.spans
                    ],
                }
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def _overlap_length(a: PhiSpan, b: PhiSpan) -> int:
    return max(0, min(a.end, b.end) - max(a.start, b.start))


def match_spans(
    predicted: Sequence[PhiSpan],
    gold: Sequence[PhiSpan],
    policy: MatchPolicy,
) -> dict[PhiCategory, MatchCounts]:
    """Per-category tp/fp/fn counts for one document."""
    counts: dict[PhiCategory, MatchCounts] = {}
    for category in PhiCategory:
        preds = [s for s in predicted if s.category is category]
        golds = [s for s in gold if s.category is category]
        if policy is MatchPolicy.EXACT:
            gold_keys = {(s.start, s.end) for s in golds}
            pred_keys = {(s.start, s.end) for s in preds}
            tp = len(gold_keys & pred_keys)
            counts[category] = MatchCounts(tp=tp, fp=len(preds) - tp, fn=len(golds) - tp)
        else:
            # Candidate pairs sorted by descending overlap; the positional
            # tie-break is symmetric in (pred, gold) so swapping the two
            # span lists exactly swaps precision and recall.
            pairs = []
            for i, p in enumerate(preds):
                for j, g in enumerate(golds):
                    ov = _overlap_length(p, g)
                    if ov > 0:
                        endpoint_key = tuple(sorted([(p.start, p.end), (g.start, g.end)]))
                        pairs.append((-ov, endpoint_key, i, j))
            pairs.sort()
            matched_p: set[int] = set()
            matched_g: set[int] = set()
            tp = 0
            for _, _, i, j in pairs:
                if i in matched_p or j in matched_g:
                    continue
                matched_p.add(i)
                matched_g.add(j)
                tp += 1
            counts[category] = MatchCounts(tp=tp, fp=len(preds) - tp, fn=len(golds) - tp)
    return counts


@dataclass(frozen=True)
class CategoryMetrics:
    count: int  # gold span count (support)
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    zero_support: bool


@dataclass(frozen=True)
class EvalReport:
    policy: MatchPolicy
    per_category: dict[PhiCategory, CategoryMetrics]
    micro: CategoryMetrics
    macro_precision: float
    macro_recall: float
    macro_f1: float

    def format_table(self) -> str:
        header = ("Category", "Count", "Precision", "Recall", "F1-score")
        rows = [header]
        for category in PhiCategory:
            m = self.per_category[category]
            label = CATEGORY_LABELS[category]
            if m.zero_support:
                label += " *"
            rows.append(
                (label, str(m.count), f"{m.precision:.2f}", f"{m.recall:.2f}", f"{m.f1:.2f}")
            )
        rows.append(
            ("Micro average", str(self.micro.count), f"{self.micro.precision:.2f}",
             f"{self.micro.recall:.2f}", f"{self.micro.f1:.2f}")
        )
        rows.append(
            ("Macro average", "", f"{self.macro_precision:.2f}",
             f"{self.macro_recall:.2f}", f"{self.macro_f1:.2f}")
        )
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = []
        for idx, row in enumerate(rows):
            cells = [row[0].ljust(widths[0])]
            cells += [row[i].rjust(widths[i]) for i in range(1, len(row))]
            lines.append("  ".join(cells).rstrip())
            if idx == 0:
                lines.append("  ".join("-" * w for w in widths))
        if any(self.per_category[c].zero_support for c in PhiCategory):
            lines.append("* no gold spans in this category (metrics fixed at 1.00)")
        return "\n".join(lines)

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["category", "count", "tp", "fp", "fn", "precision", "recall", "f1", "zero_support"]
            )
            for category in PhiCategory:
                m = self.per_category[category]
                writer.writerow([
                    CATEGORY_LABELS[category], m.count, m.tp, m.fp, m.fn,
                    f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}",
                    int(m.zero_support),
                ])
            writer.writerow([
                "micro", self.micro.count, self.micro.tp, self.micro.fp, self.micro.fn,
                f"{self.micro.precision:.6f}", f"{self.micro.recall:.6f}", f"{self.micro.f1:.6f}", 0,
            ])
            writer.writerow([
                "macro", "", "", "", "",
                f"{self.macro_precision:.6f}", f"{self.macro_recall:.6f}", f"{self.macro_f1:.6f}", 0,
            ])


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _metrics_from_counts(counts: MatchCounts, support: int) -> CategoryMetrics:
    zero_support = support == 0
    precision = 1.0 if counts.tp + counts.fp == 0 else counts.tp / (counts.tp + counts.fp)
    recall = 1.0 if counts.tp + counts.fn == 0 else counts.tp / (counts.tp + counts.fn)
    return CategoryMetrics(
        count=support,
        tp=counts.tp,
        fp=counts.fp,
        fn=counts.fn,
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        zero_support=zero_support,
    )


def evaluate(
    predicted: Mapping[str, Sequence[PhiSpan]],
    gold: GoldCorpus,
    policy: MatchPolicy = MatchPolicy.EXACT,
) -> EvalReport:
    """Pool per-document counts over the corpus and derive all aggregates.

    Document id sets must coincide; anything else is a schema error.
    """
    gold_by_id = gold.by_doc_id()
    missing = sorted(set(gold_by_id) - set(predicted))
    extra = sorted(set(predicted) - set(gold_by_id))
    if missing or extra:
        raise SchemaError(
            f"document ids do not align: missing={missing[:5]} extra={extra[:5]}"
        )
    totals: dict[PhiCategory, MatchCounts] = {c: MatchCounts() for c in PhiCategory}
    for doc_id, gold_spans in gold_by_id.items():
        doc_counts = match_spans(list(predicted[doc_id]), list(gold_spans), policy)
        for category, counts in doc_counts.items():
            totals[category] = totals[category] + counts
    per_category = {
        category: _metrics_from_counts(counts, support=counts.tp + counts.fn)
        for category, counts in totals.items()
    }
    pooled = MatchCounts()
    for counts in totals.values():
        pooled = pooled + counts
    micro = _metrics_from_counts(pooled, support=pooled.tp + pooled.fn)
    n = len(PhiCategory)
    macro_p = sum(per_category[c].precision for c in PhiCategory) / n
    macro_r = sum(per_category[c].recall for c in PhiCategory) / n
    macro_f = sum(per_category[c].f1 for c in PhiCategory) / n
    return EvalReport(
        policy=policy,
        per_category=per_category,
        micro=micro,
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f,
    )
