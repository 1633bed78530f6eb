"""Canonical in-memory model shared by every other module.

Pure data, no I/O. Recordings are numpy-backed and treated as immutable
after construction; they are safe to share between concurrent tasks.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass, field

import numpy as np

CANONICAL_RATE_HZ = 50.0
CANONICAL_UNIT = "m_per_s2"
STANDARD_GRAVITY = 9.80665  # m/s² per g

SENSOR_KINDS = ("accelerometer", "gyroscope")
UNIT_KINDS = ("m_per_s2", "g", "milli_g", "raw_counts")
LABEL_KINDS = ("state", "transition", "fall")

# (start_index, end_index_exclusive, label)
Span = tuple[int, int, str]

_SEPARATOR_RUNS = re.compile(r"[\s_\-]+")


def normalize_label_text(s: str) -> str:
    """Lowercase, trim, and collapse whitespace/hyphen/underscore runs to "_"."""
    return _SEPARATOR_RUNS.sub("_", s.strip().lower()).strip("_")


_CROCKFORD32 = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def new_ulid() -> str:
    """26-char sortable unique id: 48-bit ms timestamp + 80 random bits."""
    value = ((time.time_ns() // 1_000_000) << 80) | int.from_bytes(os.urandom(10), "big")
    chars = []
    for _ in range(26):
        chars.append(_CROCKFORD32[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


@dataclass(frozen=True)
class SignalUnit:
    """Declared measurement unit of a raw signal.

    ``raw_counts`` carries its per-count scale expressed in g; the other
    kinds take no scale.
    """

    kind: str
    counts_scale: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in UNIT_KINDS:
            raise ValueError(f"unknown unit kind {self.kind!r}")
        if self.kind == "raw_counts":
            if self.counts_scale is None or not self.counts_scale > 0:
                raise ValueError("raw_counts needs a positive g-per-count scale")
        elif self.counts_scale is not None:
            raise ValueError(f"unit {self.kind!r} takes no scale")

    @classmethod
    def parse(cls, text: str) -> "SignalUnit":
        """Parse ``"m_per_s2" | "g" | "milli_g" | "raw_counts:<scale>"``."""
        if text.startswith("raw_counts:"):
            return cls("raw_counts", float(text.split(":", 1)[1]))
        return cls(text)

    def __str__(self) -> str:
        if self.kind == "raw_counts":
            return f"raw_counts:{self.counts_scale!r}"
        return self.kind


def _as_samples(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or (arr.size and arr.shape[1] != 3):
        raise ValueError(f"samples must be an (n, 3) array, got shape {arr.shape}")
    return arr


@dataclass(eq=False)
class RawRecording:
    """One foreign sensor trace exactly as parsed, before any alignment.

    Either ``declared_rate_hz`` or per-sample ``timestamps`` (seconds) is
    set, never both. Labels are raw dataset strings, untranslated.
    """

    dataset_id: str
    source_path: str
    subject_id: str
    sensor_kind: str
    declared_unit: SignalUnit
    includes_gravity: bool
    samples: np.ndarray
    declared_rate_hz: float | None = None
    timestamps: np.ndarray | None = None
    raw_label_spans: list[Span] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.samples = _as_samples(self.samples)
        if self.timestamps is not None:
            self.timestamps = np.asarray(self.timestamps, dtype=np.float64).ravel()

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class Violation:
    """One invariant breach found in a recording; data, not an exception."""

    field: str
    message: str
    index: int | None = None

    def __str__(self) -> str:
        where = "" if self.index is None else f" [index {self.index}]"
        return f"{self.field}: {self.message}{where}"


def validate_raw(rec: RawRecording) -> list[Violation]:
    """Check every RawRecording invariant; empty list means valid."""
    out: list[Violation] = []
    n = len(rec.samples)
    if n == 0:
        out.append(Violation("samples", "empty"))
    else:
        finite = np.isfinite(rec.samples).all(axis=1)
        for i in np.flatnonzero(~finite):
            out.append(Violation("samples", "non-finite component", int(i)))

    if rec.sensor_kind not in SENSOR_KINDS:
        out.append(Violation("sensor_kind", f"unknown kind {rec.sensor_kind!r}"))

    has_rate = rec.declared_rate_hz is not None
    has_ts = rec.timestamps is not None
    if has_rate == has_ts:
        out.append(Violation("declared_rate_hz", "exactly one of rate or timestamps required"))
    if has_rate and not rec.declared_rate_hz > 0:
        out.append(Violation("declared_rate_hz", "must be positive"))
    if has_ts:
        ts = rec.timestamps
        if len(ts) != n:
            out.append(Violation("timestamps", f"length {len(ts)} != {n} samples"))
        if not np.isfinite(ts).all():
            out.append(Violation("timestamps", "non-finite value"))
        else:
            for i in np.flatnonzero(np.diff(ts) <= 0):
                out.append(Violation("timestamps", "not strictly increasing", int(i) + 1))

    for i, (start, end, label) in enumerate(rec.raw_label_spans):
        if not (0 <= start < end <= n):
            out.append(Violation("raw_label_spans", f"span ({start}, {end}) out of bounds for {n} samples", i))
        if not label:
            out.append(Violation("raw_label_spans", "empty label", i))
    return out


def _check_spans(spans: list[Span], n: int) -> None:
    prev_end = 0
    for i, (start, end, label) in enumerate(spans):
        if not (0 <= start < end <= n):
            raise ValueError(f"span {i} ({start}, {end}) out of bounds for {n} samples")
        if start < prev_end:
            raise ValueError(f"span {i} overlaps previous span or is out of order")
        if not label:
            raise ValueError(f"span {i} has an empty label")
        prev_end = end


@dataclass(eq=False)
class CanonicalRecording:
    """A trace on the platform grid: 50 Hz, m/s², t=0 start.

    Label spans are sorted and non-overlapping. While a recording is
    staged they may still carry raw dataset strings; the store enforces
    dictionary membership at finalization.
    """

    recording_id: str
    dataset_id: str
    subject_id: str
    sensor_kind: str
    includes_gravity: bool
    samples: np.ndarray
    label_spans: list[Span] = field(default_factory=list)
    rate_hz: float = CANONICAL_RATE_HZ

    def __post_init__(self) -> None:
        self.samples = _as_samples(self.samples)
        if self.rate_hz != CANONICAL_RATE_HZ:
            raise ValueError(f"canonical rate is {CANONICAL_RATE_HZ} Hz, got {self.rate_hz}")
        self.label_spans = [(int(s), int(e), str(l)) for s, e, l in self.label_spans]
        self.label_spans.sort(key=lambda sp: (sp[0], sp[1]))
        _check_spans(self.label_spans, len(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.rate_hz

    def labels_present(self) -> set[str]:
        return {label for _, _, label in self.label_spans}

    def __eq__(self, other) -> bool:
        if not isinstance(other, CanonicalRecording):
            return NotImplemented
        return (
            self.recording_id == other.recording_id
            and self.dataset_id == other.dataset_id
            and self.subject_id == other.subject_id
            and self.sensor_kind == other.sensor_kind
            and self.includes_gravity == other.includes_gravity
            and self.rate_hz == other.rate_hz
            and self.label_spans == other.label_spans
            and self.samples.shape == other.samples.shape
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True)
class LabelEntry:
    """Dictionary row for one canonical label."""

    description: str
    kind: str  # state | transition | fall
    aliases: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in LABEL_KINDS:
            raise ValueError(f"unknown label kind {self.kind!r}")


class LabelDictionary:
    """Canonical label vocabulary with case-insensitive alias lookup.

    Canonical names and aliases are normalized on entry; an alias may
    appear under at most one canonical label.
    """

    def __init__(self, entries: dict[str, LabelEntry] | None = None):
        self._entries: dict[str, LabelEntry] = {}
        self._alias_owner: dict[str, str] = {}
        for name, entry in (entries or {}).items():
            self.add(name, entry)

    def add(self, canonical: str, entry: LabelEntry) -> str:
        name = normalize_label_text(canonical)
        if not name:
            raise ValueError("canonical label must be non-empty")
        if name in self._entries:
            raise ValueError(f"canonical label {name!r} already present")
        aliases = tuple(dict.fromkeys(normalize_label_text(a) for a in entry.aliases))
        for alias in aliases:
            owner = self._alias_owner.get(alias)
            if owner is not None and owner != name:
                raise ValueError(f"alias {alias!r} already belongs to {owner!r}")
            if alias in self._entries and alias != name:
                raise ValueError(f"alias {alias!r} collides with canonical label {alias!r}")
        self._entries[name] = LabelEntry(entry.description, entry.kind, aliases)
        for alias in aliases:
            self._alias_owner[alias] = name
        return name

    def __contains__(self, canonical: str) -> bool:
        return normalize_label_text(canonical) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def labels(self) -> list[str]:
        return sorted(self._entries)

    def entry(self, canonical: str) -> LabelEntry:
        return self._entries[normalize_label_text(canonical)]

    def candidates(self, canonical: str) -> tuple[str, ...]:
        """The canonical name plus its aliases, all normalized."""
        name = normalize_label_text(canonical)
        return (name,) + self._entries[name].aliases

    def resolve_exact(self, raw: str) -> str | None:
        """Canonical label whose name or alias equals the normalized raw string."""
        text = normalize_label_text(raw)
        if text in self._entries:
            return text
        return self._alias_owner.get(text)

    def as_dict(self) -> dict[str, dict]:
        return {
            name: {"description": e.description, "kind": e.kind, "aliases": list(e.aliases)}
            for name, e in sorted(self._entries.items())
        }

    @classmethod
    def from_dict(cls, data: dict[str, dict]) -> "LabelDictionary":
        return cls(
            {
                name: LabelEntry(
                    description=str(row.get("description", "")),
                    kind=str(row.get("kind", "state")),
                    aliases=tuple(row.get("aliases", ())),
                )
                for name, row in data.items()
            }
        )


@dataclass(eq=False)
class Window:
    """Fixed-length slice of a canonical recording used as one classification unit."""

    recording_id: str
    start_index: int
    label: str
    data: np.ndarray  # (length, 3)

    def __post_init__(self) -> None:
        self.data = _as_samples(self.data)

    @property
    def length(self) -> int:
        return len(self.data)
