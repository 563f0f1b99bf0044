"""Lexicons: normalized string sets with optional integer weights.

File format: UTF-8, one entry per line, optionally followed by a TAB and an
integer weight. Entries are normalized to NFC, lowercased, and internal
whitespace is collapsed to single spaces.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Iterable

from .errors import SchemaError


def normalize_entry(text: str) -> str:
    """Normalization applied to every lexicon entry and every lookup key."""
    collapsed = " ".join(unicodedata.normalize("NFC", text).split())
    return collapsed.lower()


@dataclass(frozen=True)
class Lexicon:
    name: str
    entries: frozenset[str]
    weights: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for entry in self.entries:
            if entry != normalize_entry(entry):
                raise ValueError(f"lexicon {self.name!r}: entry {entry!r} is not normalized")

    def __contains__(self, text: str) -> bool:
        return normalize_entry(text) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def max_words(self) -> int:
        """Longest entry measured in whitespace-separated words."""
        return max((entry.count(" ") + 1 for entry in self.entries), default=0)

    def sorted_entries(self) -> list[str]:
        return sorted(self.entries)

    @classmethod
    def from_entries(cls, name: str, entries: Iterable[str]) -> "Lexicon":
        return cls(name=name, entries=frozenset(normalize_entry(e) for e in entries if e.strip()))

    @classmethod
    def load(cls, path: str, name: str | None = None) -> "Lexicon":
        entries: set[str] = set()
        weights: dict[str, int] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                term, _, weight_part = line.partition("\t")
                entry = normalize_entry(term)
                if not entry:
                    continue
                entries.add(entry)
                if weight_part:
                    try:
                        weights[entry] = int(weight_part.strip())
                    except ValueError as exc:
                        raise SchemaError(
                            f"{path}:{lineno}: weight must be an integer, got {weight_part!r}"
                        ) from exc
        return cls(name=name or path, entries=frozenset(entries), weights=weights)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for entry in self.sorted_entries():
                if entry in self.weights:
                    fh.write(f"{entry}\t{self.weights[entry]}\n")
                else:
                    fh.write(entry + "\n")
