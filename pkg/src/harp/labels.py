"""Label consolidation: dictionary IO, ranked suggestions, review decisions.

Suggestions are scored with normalized Levenshtein distance over
normalized text, with an exact name/alias hit pinned to 1.0. Nothing is
ever auto-accepted: every raw label needs a human decision before a
dataset can be finalized.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from datetime import datetime, timezone

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from importlib import resources

from .core import LabelDictionary, LabelEntry, normalize_label_text
from .errors import AlreadyDecidedError, EmptyDictionaryError, UnknownCanonicalError

MAPPING_STATUSES = ("pending", "accepted", "rejected", "manual")
DECISION_ACTIONS = ("accept", "reject", "manual")


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance, two-row dynamic programming."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def similarity(a: str, b: str) -> float:
    """Normalized string similarity in [0, 1]; inputs should be pre-normalized."""
    if a == b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))


@dataclass(frozen=True)
class SuggestionScore:
    score: float
    basis: str  # exact_alias | string_similarity

    def __post_init__(self) -> None:
        if self.basis == "exact_alias" and self.score != 1.0:
            raise ValueError("exact_alias implies score 1.0")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


Suggestion = tuple[str, SuggestionScore]


def suggest(raw_label: str, dictionary: LabelDictionary, k: int = 3) -> list[Suggestion]:
    """Top-k canonical labels ranked by similarity to a raw label.

    Each canonical scores the max similarity over its name and aliases;
    an exact hit scores 1.0 with basis ``exact_alias``. Ties break
    lexicographically, so identical inputs always rank identically.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(dictionary) == 0:
        raise EmptyDictionaryError("label dictionary has no entries")
    raw = normalize_label_text(raw_label)
    scored: list[Suggestion] = []
    for canonical in dictionary.labels():
        best = 0.0
        exact = False
        for candidate in dictionary.candidates(canonical):
            if candidate == raw:
                exact = True
                break
            best = max(best, similarity(raw, candidate))
        if exact:
            scored.append((canonical, SuggestionScore(1.0, "exact_alias")))
        else:
            scored.append((canonical, SuggestionScore(best, "string_similarity")))
    scored.sort(key=lambda item: (-item[1].score, item[0]))
    return scored[:k]


@dataclass(frozen=True)
class LabelMapping:
    """One (dataset, raw label) → canonical label decision with review status."""

    mapping_id: str
    dataset_id: str
    raw_label: str  # normalized
    suggestions: tuple[Suggestion, ...]
    status: str = "pending"
    canonical_label: str | None = None
    decided_by: str = ""
    decided_at: str = ""

    def is_pending(self) -> bool:
        return self.status == "pending"

    def to_json(self) -> dict:
        return {
            "mapping_id": self.mapping_id,
            "dataset_id": self.dataset_id,
            "raw_label": self.raw_label,
            "suggestions": [
                {"canonical_label": c, "score": s.score, "basis": s.basis} for c, s in self.suggestions
            ],
            "status": self.status,
            "canonical_label": self.canonical_label,
            "decided_by": self.decided_by,
            "decided_at": self.decided_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "LabelMapping":
        return cls(
            mapping_id=data["mapping_id"],
            dataset_id=data["dataset_id"],
            raw_label=data["raw_label"],
            suggestions=tuple(
                (row["canonical_label"], SuggestionScore(row["score"], row["basis"]))
                for row in data["suggestions"]
            ),
            status=data["status"],
            canonical_label=data.get("canonical_label"),
            decided_by=data.get("decided_by", ""),
            decided_at=data.get("decided_at", ""),
        )


def decide_mapping(
    mapping: LabelMapping,
    action: str,
    canonical: str | None,
    who: str,
    dictionary: LabelDictionary,
) -> LabelMapping:
    """Apply one review decision; decisions are immutable once made.

    Repeating an identical decision returns the stored mapping unchanged;
    a conflicting repeat raises AlreadyDecidedError.
    """
    if action not in DECISION_ACTIONS:
        raise ValueError(f"action must be one of {DECISION_ACTIONS}, got {action!r}")
    target = normalize_label_text(canonical) if canonical else None
    if action in ("accept", "manual"):
        if not target:
            raise UnknownCanonicalError(f"{action} requires a canonical label")
        if target not in dictionary:
            raise UnknownCanonicalError(f"{target!r} is not in the label dictionary")
    else:
        target = None

    status_for_action = {"accept": "accepted", "reject": "rejected", "manual": "manual"}
    if not mapping.is_pending():
        if mapping.status == status_for_action[action] and mapping.canonical_label == target:
            return mapping
        raise AlreadyDecidedError(
            f"mapping {mapping.mapping_id} already decided: {mapping.status}"
            + (f" → {mapping.canonical_label}" if mapping.canonical_label else ""),
            {"status": mapping.status, "canonical_label": mapping.canonical_label},
        )

    return replace(
        mapping,
        status=status_for_action[action],
        canonical_label=target,
        decided_by=who,
        decided_at=datetime.now(timezone.utc).isoformat(),
    )


def load_dictionary_text(text: str) -> LabelDictionary:
    """Parse the TOML dictionary format: one table per canonical label."""
    doc = tomllib.loads(text)
    dictionary = LabelDictionary()
    for name, row in doc.items():
        if not isinstance(row, dict):
            raise ValueError(f"dictionary entry {name!r} must be a table")
        dictionary.add(
            name,
            LabelEntry(
                description=str(row.get("description", "")),
                kind=str(row.get("kind", "state")),
                aliases=tuple(str(a) for a in row.get("aliases", ())),
            ),
        )
    return dictionary


def load_dictionary_file(path) -> LabelDictionary:
    with open(path, encoding="utf-8") as fh:
        return load_dictionary_text(fh.read())


def seed_dictionary() -> LabelDictionary:
    """The dictionary shipped with the package: common ADLs plus falls."""
    text = resources.files("harp.data").joinpath("dictionary.toml").read_text(encoding="utf-8")
    return load_dictionary_text(text)
