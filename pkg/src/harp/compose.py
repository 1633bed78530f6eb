"""Answer requests for sets of labeled signals and cut them into windows.

Everything here is read-only over the store; queries can run with
unlimited concurrency.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import CANONICAL_RATE_HZ, CanonicalRecording, Window
from .errors import InvalidFilterError, UnknownLabelError
from .store import CatalogEntry, Store

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QueryFilter:
    """Conjunction of criteria; a label matches if the recording has at
    least one span carrying any of the requested canonical labels."""

    labels: frozenset[str] | None = None
    dataset_ids: frozenset[str] | None = None
    subject_ids: frozenset[str] | None = None
    sensor_kind: str | None = None
    min_duration_s: float | None = None
    include_unlabeled: bool = False
    select_all: bool = False

    def is_empty(self) -> bool:
        return not any(
            (self.labels, self.dataset_ids, self.subject_ids, self.sensor_kind, self.min_duration_s)
        )


def query(store: Store, f: QueryFilter) -> list[CatalogEntry]:
    """Catalog entries matching every set criterion, ordered by recording_id."""
    if f.is_empty() and not f.select_all:
        raise InvalidFilterError("set at least one criterion or pass select_all")
    if f.labels:
        unknown = sorted(label for label in f.labels if label not in store.dictionary)
        if unknown:
            raise UnknownLabelError(f"label(s) not in dictionary: {', '.join(unknown)}", {"labels": unknown})

    out = []
    for entry in store.entries():
        present = entry.labels_present()
        if not present and not f.include_unlabeled:
            continue
        if f.labels is not None and not (present & f.labels):
            continue
        if f.dataset_ids is not None and entry.dataset_id not in f.dataset_ids:
            continue
        if f.subject_ids is not None and entry.subject_id not in f.subject_ids:
            continue
        if f.sensor_kind is not None and entry.sensor_kind != f.sensor_kind:
            continue
        if f.min_duration_s is not None and entry.duration_s < f.min_duration_s:
            continue
        out.append(entry)
    out.sort(key=lambda e: e.recording_id)
    return out


@dataclass(frozen=True)
class WindowingSpec:
    """Sliding-window geometry over the canonical 50 Hz grid."""

    window_s: float = 2.0
    overlap_fraction: float = 0.5
    majority_threshold: float = 0.5  # label must cover strictly more than this fraction

    def __post_init__(self) -> None:
        if not self.window_s > 0:
            raise ValueError("window_s must be positive")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError("overlap_fraction must be in [0, 1)")
        if not 0.5 <= self.majority_threshold <= 1.0:
            raise ValueError("majority_threshold must be in [0.5, 1]")
        if self.window_samples < 2:
            raise ValueError("window must span at least 2 samples at 50 Hz")

    @property
    def window_samples(self) -> int:
        return round(self.window_s * CANONICAL_RATE_HZ)

    @property
    def stride(self) -> int:
        return max(1, round(self.window_samples * (1.0 - self.overlap_fraction)))


def window_starts(n_samples: int, spec: WindowingSpec) -> list[int]:
    """Start indices 0, stride, 2·stride … while a full window still fits."""
    win = spec.window_samples
    if n_samples < win:
        return []
    return list(range(0, n_samples - win + 1, spec.stride))


def _majority_label(spans, start: int, win: int, threshold: float) -> str | None:
    coverage: dict[str, int] = {}
    for s, e, label in spans:
        overlap = min(e, start + win) - max(s, start)
        if overlap > 0:
            coverage[label] = coverage.get(label, 0) + overlap
    for label, count in coverage.items():
        if threshold >= 1.0:
            if count == win:
                return label
        elif count > win * threshold:
            return label
    return None


def windows_of(rec: CanonicalRecording, spec: WindowingSpec) -> list[Window]:
    """Cut a recording into labeled windows; windows with no strict-majority
    label are discarded."""
    win = spec.window_samples
    out = []
    dropped = 0
    for start in window_starts(len(rec.samples), spec):
        label = _majority_label(rec.label_spans, start, win, spec.majority_threshold)
        if label is None:
            dropped += 1
            continue
        out.append(Window(rec.recording_id, start, label, rec.samples[start:start + win].copy()))
    if dropped:
        log.info("discarded %d window(s) without a majority label in %s", dropped, rec.recording_id)
    return out


def windows(store: Store, recording_id: str, spec: WindowingSpec) -> list[Window]:
    return windows_of(store.read_recording(recording_id), spec)


def _csv_float(value: float) -> str:
    return repr(float(value))


def recording_to_csv(rec: CanonicalRecording) -> str:
    """CSV text: header t,x,y,z,label; t to 6 decimals, values shortest
    round-trip, label of the span covering each row (blank when none)."""
    labels = [""] * len(rec.samples)
    for s, e, label in rec.label_spans:
        for i in range(s, e):
            labels[i] = label
    lines = ["t,x,y,z,label"]
    for k, row in enumerate(rec.samples):
        t = k / rec.rate_hz
        lines.append(f"{t:.6f},{_csv_float(row[0])},{_csv_float(row[1])},{_csv_float(row[2])},{labels[k]}")
    return "\n".join(lines) + "\n"


def export(store: Store, entries: list[CatalogEntry], fmt: str, dest: str | Path) -> list[str]:
    """Write the selected recordings to ``dest``; returns relative paths written.

    ``csv`` writes one file per recording. ``uds`` writes verbatim segment
    copies plus a catalog excerpt, which makes the destination a readable
    store root.
    """
    if fmt not in ("csv", "uds"):
        raise ValueError(f"format must be csv or uds, got {fmt!r}")
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    if fmt == "csv":
        for entry in entries:
            rec = store.read_recording(entry.recording_id)
            rel = f"{entry.recording_id}.csv"
            (dest / rel).write_text(recording_to_csv(rec), encoding="utf-8")
            written.append(rel)
        return written

    (dest / "segments").mkdir(exist_ok=True)
    with open(dest / "catalog.jsonl", "w", encoding="utf-8") as catalog:
        import json

        for entry in entries:
            data = (store.root / entry.segment_path).read_bytes()
            (dest / entry.segment_path).write_bytes(data)
            catalog.write(json.dumps(entry.to_json()) + "\n")
            written.append(entry.segment_path)
    written.append("catalog.jsonl")
    return written
