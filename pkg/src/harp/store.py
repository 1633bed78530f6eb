"""Unified store: bit-exact segment files plus a JSON-Lines catalog.

Layout under the store root:

    catalog.jsonl            one line per finalized recording
    segments/<id>.uds        binary segment files
    staging/<dataset>/       segments + entries.json awaiting label review
    drivers/<driver_id>.toml registered dataset drivers
    mappings/<dataset>.json  label mapping decisions
    jobs/<job_id>.json       import job states
    models/<model_id>.json   trained model registry
    dictionary.json          current canonical label dictionary

Single-writer, multi-reader: every mutation funnels through one lock;
segment files are immutable once written, so reads need no coordination.
Segment writes are temp-file + rename, and nothing enters the catalog
before label finalization.
"""

from __future__ import annotations

import json
import os
import struct
import threading
import zlib
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .core import CanonicalRecording, LabelDictionary, LabelEntry, Span, new_ulid
from .drivers import DriverManifest, parse_manifest
from .errors import (
    CorruptSegmentError,
    DatasetAlreadyImportedError,
    DriverExistsError,
    DriverNotFoundError,
    DuplicateIdError,
    DuplicateLabelError,
    JobNotFoundError,
    MappingNotFoundError,
    RecordingNotFoundError,
    StoreLockedError,
    UnknownLabelError,
)
from .labels import LabelMapping, decide_mapping, seed_dictionary

SEGMENT_MAGIC = b"UDS1"
SEGMENT_VERSION = 1
_HEADER = struct.Struct("<4sHIdBd")  # magic, version, n_samples, rate_hz, flags, t0
SEGMENT_HEADER_BYTES = _HEADER.size  # 27
SEGMENT_CRC_BYTES = 4


def segment_size(n_samples: int) -> int:
    """Closed-form byte length of a segment holding n samples."""
    return SEGMENT_HEADER_BYTES + 24 * n_samples + SEGMENT_CRC_BYTES


def encode_segment(samples: np.ndarray, rate_hz: float, includes_gravity: bool) -> bytes:
    """Serialize samples to the segment wire format (little-endian, crc32 trailer)."""
    samples = np.ascontiguousarray(samples, dtype="<f8")
    flags = 0x01 if includes_gravity else 0x00
    header = _HEADER.pack(SEGMENT_MAGIC, SEGMENT_VERSION, len(samples), rate_hz, flags, 0.0)
    body = header + samples.tobytes(order="C")
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def decode_segment(data: bytes) -> tuple[np.ndarray, float, bool]:
    """Decode a segment, verifying the CRC before any data is returned."""
    if len(data) < SEGMENT_HEADER_BYTES + SEGMENT_CRC_BYTES:
        raise CorruptSegmentError(f"segment truncated at {len(data)} bytes")
    (stored_crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CorruptSegmentError("crc32 mismatch")
    magic, version, n_samples, rate_hz, flags, _t0 = _HEADER.unpack(data[:SEGMENT_HEADER_BYTES])
    if magic != SEGMENT_MAGIC:
        raise CorruptSegmentError(f"bad magic {magic!r}")
    if version != SEGMENT_VERSION:
        raise CorruptSegmentError(f"unsupported version {version}")
    if len(data) != segment_size(n_samples):
        raise CorruptSegmentError(f"length {len(data)} != expected {segment_size(n_samples)}")
    samples = np.frombuffer(data[SEGMENT_HEADER_BYTES:-4], dtype="<f8").reshape(n_samples, 3)
    return np.array(samples, dtype=np.float64), rate_hz, bool(flags & 0x01)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _spans_to_json(spans) -> list:
    return [[int(s), int(e), str(l)] for s, e, l in spans]


def _spans_from_json(rows) -> list[Span]:
    return [(int(s), int(e), str(l)) for s, e, l in rows]


@dataclass(frozen=True)
class CatalogEntry:
    """Searchable metadata for one stored recording."""

    recording_id: str
    dataset_id: str
    subject_id: str
    sensor_kind: str
    rate_hz: float
    includes_gravity: bool
    n_samples: int
    label_spans: tuple[Span, ...]
    segment_path: str  # relative to the store root
    crc32: int
    created_at: str

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.rate_hz

    def labels_present(self) -> set[str]:
        return {label for _, _, label in self.label_spans}

    def to_json(self) -> dict:
        return {
            "recording_id": self.recording_id,
            "dataset_id": self.dataset_id,
            "subject_id": self.subject_id,
            "sensor_kind": self.sensor_kind,
            "rate_hz": self.rate_hz,
            "includes_gravity": self.includes_gravity,
            "n_samples": self.n_samples,
            "label_spans": _spans_to_json(self.label_spans),
            "segment_path": self.segment_path,
            "crc32": self.crc32,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CatalogEntry":
        return cls(
            recording_id=data["recording_id"],
            dataset_id=data["dataset_id"],
            subject_id=data["subject_id"],
            sensor_kind=data["sensor_kind"],
            rate_hz=float(data["rate_hz"]),
            includes_gravity=bool(data["includes_gravity"]),
            n_samples=int(data["n_samples"]),
            label_spans=tuple(_spans_from_json(data["label_spans"])),
            segment_path=data["segment_path"],
            crc32=int(data["crc32"]),
            created_at=data["created_at"],
        )


JOB_STATES = ("staged", "awaiting_labels", "finalizing", "complete", "failed")


@dataclass
class ImportJob:
    """State of one dataset integration run; survives process restarts."""

    job_id: str
    driver_id: str
    dataset_id: str
    root_path: str
    policy: str = "keep_gravity"
    state: str = "staged"
    counts: dict = field(default_factory=lambda: {"discovered": 0, "parsed": 0, "aligned": 0, "stored": 0})
    file_errors: list = field(default_factory=list)
    reason: str = ""
    created_at: str = field(default_factory=_now)

    def advance(self, state: str) -> None:
        # States only move forward; "failed" is reachable from any live state.
        order = {name: i for i, name in enumerate(JOB_STATES)}
        if state not in order:
            raise ValueError(f"unknown job state {state!r}")
        if self.state in ("complete", "failed"):
            raise ValueError(f"job {self.job_id} already terminal ({self.state})")
        if state != "failed" and order[state] < order[self.state]:
            raise ValueError(f"job state cannot move {self.state} → {state}")
        self.state = state

    def to_json(self) -> dict:
        return {
            "job_id": self.job_id,
            "driver_id": self.driver_id,
            "dataset_id": self.dataset_id,
            "root_path": self.root_path,
            "policy": self.policy,
            "state": self.state,
            "counts": dict(self.counts),
            "file_errors": list(self.file_errors),
            "reason": self.reason,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ImportJob":
        return cls(**data)


@dataclass(frozen=True)
class StagedRecording:
    """A canonical recording parked in staging, spans possibly still raw."""

    recording_id: str
    dataset_id: str
    subject_id: str
    sensor_kind: str
    includes_gravity: bool
    n_samples: int
    spans: tuple[Span, ...]
    spans_canonical: bool = False

    def to_json(self) -> dict:
        return {
            "recording_id": self.recording_id,
            "dataset_id": self.dataset_id,
            "subject_id": self.subject_id,
            "sensor_kind": self.sensor_kind,
            "includes_gravity": self.includes_gravity,
            "n_samples": self.n_samples,
            "spans": _spans_to_json(self.spans),
            "spans_canonical": self.spans_canonical,
        }

    @classmethod
    def from_json(cls, data: dict) -> "StagedRecording":
        data = dict(data)
        data["spans"] = tuple(_spans_from_json(data["spans"]))
        return cls(**data)


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _atomic_write_json(path: Path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2).encode("utf-8"))


class Store:
    """Persistence root for recordings, drivers, mappings, jobs, and models."""

    def __init__(self, root: str | Path, dictionary: LabelDictionary | None = None):
        self.root = Path(root)
        for sub in ("segments", "staging", "drivers", "mappings", "jobs", "models"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._lock_fh = None

        dict_path = self.root / "dictionary.json"
        if dict_path.exists():
            with open(dict_path, encoding="utf-8") as fh:
                self._dictionary = LabelDictionary.from_dict(json.load(fh))
        else:
            self._dictionary = dictionary if dictionary is not None else seed_dictionary()
            self._save_dictionary()

        self._catalog: list[CatalogEntry] = []
        self._by_id: dict[str, CatalogEntry] = {}
        catalog_path = self.root / "catalog.jsonl"
        if catalog_path.exists():
            with open(catalog_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        entry = CatalogEntry.from_json(json.loads(line))
                        self._catalog.append(entry)
                        self._by_id[entry.recording_id] = entry

    # -- process-level claim ---------------------------------------------

    def acquire_process_lock(self) -> None:
        """Take the exclusive on-disk claim a serving process must hold."""
        import fcntl

        fh = open(self.root / ".lock", "w")
        try:
            fcntl.flock(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            fh.close()
            raise StoreLockedError(f"store {self.root} is locked by another process")
        self._lock_fh = fh

    def release_process_lock(self) -> None:
        if self._lock_fh is not None:
            self._lock_fh.close()
            self._lock_fh = None

    # -- dictionary --------------------------------------------------------

    @property
    def dictionary(self) -> LabelDictionary:
        return self._dictionary

    def _save_dictionary(self) -> None:
        _atomic_write_json(self.root / "dictionary.json", self._dictionary.as_dict())

    def add_label(self, canonical: str, entry: LabelEntry) -> str:
        with self._lock:
            if canonical in self._dictionary:
                raise DuplicateLabelError(f"canonical label {canonical!r} already in dictionary")
            name = self._dictionary.add(canonical, entry)
            self._save_dictionary()
            return name

    # -- drivers -----------------------------------------------------------

    def register_driver(self, manifest_text: str) -> DriverManifest:
        manifest = parse_manifest(manifest_text)
        with self._lock:
            path = self.root / "drivers" / f"{manifest.driver_id}.toml"
            if path.exists():
                raise DriverExistsError(f"driver {manifest.driver_id!r} already registered")
            _atomic_write(path, manifest_text.encode("utf-8"))
        return manifest

    def get_driver(self, driver_id: str) -> DriverManifest:
        path = self.root / "drivers" / f"{driver_id}.toml"
        if not path.exists():
            raise DriverNotFoundError(f"driver {driver_id!r} is not registered")
        return parse_manifest(path.read_text(encoding="utf-8"))

    def list_drivers(self) -> list[DriverManifest]:
        out = []
        for path in sorted((self.root / "drivers").glob("*.toml")):
            out.append(parse_manifest(path.read_text(encoding="utf-8")))
        return out

    # -- catalog + segments -------------------------------------------------

    def append_recording(self, rec: CanonicalRecording) -> CatalogEntry:
        """Persist a finalized recording: segment write is atomic, entry durable."""
        for label in rec.labels_present():
            if label not in self._dictionary:
                raise UnknownLabelError(f"label {label!r} not in dictionary; consolidate before storing")
        with self._lock:
            if rec.recording_id in self._by_id:
                raise DuplicateIdError(f"recording {rec.recording_id!r} already stored")
            data = encode_segment(rec.samples, rec.rate_hz, rec.includes_gravity)
            crc = zlib.crc32(data[:-4]) & 0xFFFFFFFF
            rel = f"segments/{rec.recording_id}.uds"
            _atomic_write(self.root / rel, data)
            entry = CatalogEntry(
                recording_id=rec.recording_id,
                dataset_id=rec.dataset_id,
                subject_id=rec.subject_id,
                sensor_kind=rec.sensor_kind,
                rate_hz=rec.rate_hz,
                includes_gravity=rec.includes_gravity,
                n_samples=len(rec.samples),
                label_spans=tuple(rec.label_spans),
                segment_path=rel,
                crc32=crc,
                created_at=_now(),
            )
            with open(self.root / "catalog.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry.to_json()) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._catalog.append(entry)
            self._by_id[entry.recording_id] = entry
            return entry

    def get_entry(self, recording_id: str) -> CatalogEntry:
        entry = self._by_id.get(recording_id)
        if entry is None:
            raise RecordingNotFoundError(f"recording {recording_id!r} not in catalog")
        return entry

    def entries(self) -> list[CatalogEntry]:
        return list(self._catalog)

    def read_recording(self, recording_id: str) -> CanonicalRecording:
        entry = self.get_entry(recording_id)
        data = (self.root / entry.segment_path).read_bytes()
        samples, rate_hz, includes_gravity = decode_segment(data)
        if (zlib.crc32(data[:-4]) & 0xFFFFFFFF) != entry.crc32:
            raise CorruptSegmentError(f"segment crc does not match catalog entry for {recording_id}")
        return CanonicalRecording(
            recording_id=entry.recording_id,
            dataset_id=entry.dataset_id,
            subject_id=entry.subject_id,
            sensor_kind=entry.sensor_kind,
            includes_gravity=includes_gravity,
            samples=samples,
            label_spans=list(entry.label_spans),
            rate_hz=rate_hz,
        )

    def has_dataset(self, dataset_id: str) -> bool:
        return any(e.dataset_id == dataset_id for e in self._catalog)

    # -- staging -------------------------------------------------------------

    def _staging_dir(self, dataset_id: str) -> Path:
        return self.root / "staging" / dataset_id

    def reset_staging(self, dataset_id: str) -> None:
        with self._lock:
            d = self._staging_dir(dataset_id)
            if d.exists():
                for p in d.iterdir():
                    p.unlink()
            else:
                d.mkdir(parents=True)

    def stage_recording(self, rec: CanonicalRecording) -> StagedRecording:
        with self._lock:
            d = self._staging_dir(rec.dataset_id)
            d.mkdir(parents=True, exist_ok=True)
            data = encode_segment(rec.samples, rec.rate_hz, rec.includes_gravity)
            _atomic_write(d / f"{rec.recording_id}.uds", data)
            staged = StagedRecording(
                recording_id=rec.recording_id,
                dataset_id=rec.dataset_id,
                subject_id=rec.subject_id,
                sensor_kind=rec.sensor_kind,
                includes_gravity=rec.includes_gravity,
                n_samples=len(rec.samples),
                spans=tuple(rec.label_spans),
            )
            rows = [s.to_json() for s in self.staged_recordings(rec.dataset_id)] + [staged.to_json()]
            _atomic_write_json(d / "entries.json", rows)
            return staged

    def staged_recordings(self, dataset_id: str) -> list[StagedRecording]:
        path = self._staging_dir(dataset_id) / "entries.json"
        if not path.exists():
            return []
        with open(path, encoding="utf-8") as fh:
            return [StagedRecording.from_json(row) for row in json.load(fh)]

    def rewrite_staged(self, dataset_id: str, staged: list[StagedRecording]) -> None:
        with self._lock:
            d = self._staging_dir(dataset_id)
            d.mkdir(parents=True, exist_ok=True)
            _atomic_write_json(d / "entries.json", [s.to_json() for s in staged])

    def read_staged_samples(self, dataset_id: str, recording_id: str):
        data = (self._staging_dir(dataset_id) / f"{recording_id}.uds").read_bytes()
        return decode_segment(data)

    def clear_staging(self, dataset_id: str) -> None:
        with self._lock:
            d = self._staging_dir(dataset_id)
            if d.exists():
                for p in d.iterdir():
                    p.unlink()
                d.rmdir()

    def staged_datasets(self) -> list[str]:
        return sorted(p.name for p in (self.root / "staging").iterdir() if p.is_dir())

    # -- import jobs ----------------------------------------------------------

    def create_job(self, driver_id: str, dataset_id: str, root_path: str, policy: str = "keep_gravity") -> ImportJob:
        with self._lock:
            self.get_driver(driver_id)  # DriverNotFoundError if missing
            if self.has_dataset(dataset_id):
                raise DatasetAlreadyImportedError(f"dataset {dataset_id!r} already in the catalog")
            for other in self.list_jobs():
                if other.dataset_id == dataset_id and other.state not in ("failed",):
                    raise DatasetAlreadyImportedError(
                        f"dataset {dataset_id!r} already has job {other.job_id} ({other.state})"
                    )
            job = ImportJob(job_id=new_ulid(), driver_id=driver_id, dataset_id=dataset_id,
                            root_path=str(root_path), policy=policy)
            self.save_job(job)
            return job

    def save_job(self, job: ImportJob) -> None:
        with self._lock:
            _atomic_write_json(self.root / "jobs" / f"{job.job_id}.json", job.to_json())

    def get_job(self, job_id: str) -> ImportJob:
        path = self.root / "jobs" / f"{job_id}.json"
        if not path.exists():
            raise JobNotFoundError(f"import job {job_id!r} not found")
        with open(path, encoding="utf-8") as fh:
            return ImportJob.from_json(json.load(fh))

    def list_jobs(self) -> list[ImportJob]:
        out = []
        for path in sorted((self.root / "jobs").glob("*.json")):
            with open(path, encoding="utf-8") as fh:
                out.append(ImportJob.from_json(json.load(fh)))
        return out

    # -- label mappings ---------------------------------------------------------

    def _mappings_path(self, dataset_id: str) -> Path:
        return self.root / "mappings" / f"{dataset_id}.json"

    def mappings_for(self, dataset_id: str) -> dict[str, LabelMapping]:
        path = self._mappings_path(dataset_id)
        if not path.exists():
            return {}
        with open(path, encoding="utf-8") as fh:
            rows = json.load(fh)
        out = {}
        for row in rows:
            m = LabelMapping.from_json(row)
            out[m.mapping_id] = m
        return out

    def _save_mappings(self, dataset_id: str, mappings: dict[str, LabelMapping]) -> None:
        rows = [m.to_json() for m in sorted(mappings.values(), key=lambda m: m.raw_label)]
        _atomic_write_json(self._mappings_path(dataset_id), rows)

    def upsert_mapping(self, mapping: LabelMapping) -> LabelMapping:
        with self._lock:
            mappings = self.mappings_for(mapping.dataset_id)
            for existing in mappings.values():
                if existing.raw_label == mapping.raw_label:
                    return existing
            mappings[mapping.mapping_id] = mapping
            self._save_mappings(mapping.dataset_id, mappings)
            return mapping

    def list_mappings(self, dataset_id: str | None = None, status: str | None = None) -> list[LabelMapping]:
        datasets = [dataset_id] if dataset_id else sorted(
            p.stem for p in (self.root / "mappings").glob("*.json")
        )
        out: list[LabelMapping] = []
        for ds in datasets:
            out.extend(self.mappings_for(ds).values())
        if status is not None:
            out = [m for m in out if m.status == status]
        out.sort(key=lambda m: (m.dataset_id, m.raw_label))
        return out

    def get_mapping(self, mapping_id: str) -> LabelMapping:
        for path in (self.root / "mappings").glob("*.json"):
            mappings = self.mappings_for(path.stem)
            if mapping_id in mappings:
                return mappings[mapping_id]
        raise MappingNotFoundError(f"mapping {mapping_id!r} not found")

    def decide(self, mapping_id: str, action: str, canonical: str | None, who: str) -> LabelMapping:
        with self._lock:
            mapping = self.get_mapping(mapping_id)
            decided = decide_mapping(mapping, action, canonical, who, self._dictionary)
            if decided is not mapping:
                mappings = self.mappings_for(mapping.dataset_id)
                mappings[mapping_id] = decided
                self._save_mappings(mapping.dataset_id, mappings)
            return decided

    # -- trained models -----------------------------------------------------------

    def save_model(self, model_id: str, payload: dict) -> None:
        with self._lock:
            _atomic_write_json(self.root / "models" / f"{model_id}.json", payload)

    def load_model(self, model_id: str) -> dict:
        path = self.root / "models" / f"{model_id}.json"
        if not path.exists():
            from .errors import UnknownModelError

            raise UnknownModelError(f"model {model_id!r} not registered")
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def list_models(self) -> list[dict]:
        out = []
        for path in sorted((self.root / "models").glob("*.json")):
            with open(path, encoding="utf-8") as fh:
                out.append(json.load(fh))
        return out
