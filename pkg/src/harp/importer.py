"""Dataset intake workflow: discover → parse → align → stage → finalize.

A run stages everything it can, records per-file failures on the job,
and parks at ``awaiting_labels`` until every raw label in the dataset
has a review decision. ``apply_mappings`` then rewrites the staged spans
to canonical labels (rejected labels drop their spans) and moves the
recordings into the catalog.
"""

from __future__ import annotations

import logging
from dataclasses import replace

from .align import align
from .core import CanonicalRecording, new_ulid, normalize_label_text
from .drivers import discover, parse_recording
from .errors import (
    DriverNotFoundError,
    HarpError,
    LabelSourceError,
    NothingStagedError,
    PendingMappingsError,
)
from .labels import LabelMapping, suggest
from .store import ImportJob, StagedRecording, Store

log = logging.getLogger(__name__)

SUGGESTIONS_PER_MAPPING = 3


def run_import(store: Store, job_id: str) -> ImportJob:
    """Drive an import job as far as label decisions allow.

    Returns the job parked at ``awaiting_labels`` when raw labels still
    need review, otherwise runs through to ``complete``. Re-invoking a
    parked job retries finalization, so the workflow is restart-safe.
    """
    job = store.get_job(job_id)
    if job.state in ("complete", "failed"):
        return job
    manifest = store.get_driver(job.driver_id)  # raises DriverNotFoundError

    try:
        if job.state == "staged":
            _stage_dataset(store, job, manifest)
            if job.state == "failed":
                return job
        if job.state in ("awaiting_labels", "finalizing") and not _pending_raw_labels(store, job.dataset_id):
            apply_mappings(store, job.dataset_id)
            return store.get_job(job_id)
    except DriverNotFoundError:
        raise
    except HarpError as exc:
        job = store.get_job(job_id)
        job.reason = f"{exc.code}: {exc.message}"
        job.advance("failed")
        store.save_job(job)
    return store.get_job(job_id)


def _stage_dataset(store: Store, job: ImportJob, manifest) -> None:
    store.reset_staging(job.dataset_id)
    sources = discover(job.root_path, manifest)
    job.counts["discovered"] = len(sources)
    store.save_job(job)

    for src in sources:
        try:
            raw = parse_recording(src, manifest, job.dataset_id)
            raw.raw_label_spans = _normalized_spans(raw.raw_label_spans, src.rel_path)
        except HarpError as exc:
            job.file_errors.append({"path": src.rel_path, "error": f"{exc.code}: {exc.message}"})
            continue
        job.counts["parsed"] += 1
        try:
            canonical = align(raw, policy=job.policy)
        except HarpError as exc:
            job.file_errors.append({"path": src.rel_path, "error": f"{exc.code}: {exc.message}"})
            continue
        job.counts["aligned"] += 1
        store.stage_recording(canonical)

    store.save_job(job)
    staged = store.staged_recordings(job.dataset_id)
    if not staged:
        job.reason = "no recordings survived parsing and alignment"
        job.advance("failed")
        store.save_job(job)
        return

    raw_labels = {label for s in staged for _, _, label in s.spans}
    existing = {m.raw_label for m in store.mappings_for(job.dataset_id).values()}
    for raw_label in sorted(raw_labels - existing):
        store.upsert_mapping(
            LabelMapping(
                mapping_id=new_ulid(),
                dataset_id=job.dataset_id,
                raw_label=raw_label,
                suggestions=tuple(suggest(raw_label, store.dictionary, k=SUGGESTIONS_PER_MAPPING)),
            )
        )
    job.advance("awaiting_labels")
    store.save_job(job)


def _normalized_spans(spans, rel_path):
    out = []
    for start, end, label in spans:
        norm = normalize_label_text(label)
        if not norm:
            raise LabelSourceError(rel_path, f"label {label!r} normalizes to an empty string")
        out.append((start, end, norm))
    return out


def _pending_raw_labels(store: Store, dataset_id: str) -> list[str]:
    mappings = {m.raw_label: m for m in store.mappings_for(dataset_id).values()}
    pending = set()
    for staged in store.staged_recordings(dataset_id):
        if staged.spans_canonical:
            continue
        for _, _, raw_label in staged.spans:
            mapping = mappings.get(raw_label)
            if mapping is None or mapping.is_pending():
                pending.add(raw_label)
    return sorted(pending)


def apply_mappings(store: Store, dataset_id: str) -> int:
    """Rewrite staged spans to canonical labels, then finalize the dataset.

    Returns the number of relabeled spans; spans of rejected raw labels
    are dropped and not counted. Fails with PendingMappingsError while
    any raw label still awaits a decision.
    """
    staged = store.staged_recordings(dataset_id)
    if not staged:
        raise NothingStagedError(f"dataset {dataset_id!r} has nothing staged")

    pending = _pending_raw_labels(store, dataset_id)
    if pending:
        raise PendingMappingsError(pending)

    mappings = {m.raw_label: m for m in store.mappings_for(dataset_id).values()}
    count = 0
    rewritten: list[StagedRecording] = []
    for rec in staged:
        if rec.spans_canonical:
            rewritten.append(rec)
            continue
        new_spans = []
        for start, end, raw_label in rec.spans:
            mapping = mappings[raw_label]
            if mapping.status in ("accepted", "manual"):
                new_spans.append((start, end, mapping.canonical_label))
                count += 1
            else:
                log.info("dropping span (%d, %d) of rejected label %r in %s", start, end, raw_label, rec.recording_id)
        rewritten.append(replace(rec, spans=tuple(new_spans), spans_canonical=True))
    store.rewrite_staged(dataset_id, rewritten)
    _finalize(store, dataset_id)
    return count


def _finalize(store: Store, dataset_id: str) -> None:
    job = None
    for candidate in store.list_jobs():
        if candidate.dataset_id == dataset_id and candidate.state in ("awaiting_labels", "finalizing"):
            job = candidate
            break
    if job is not None and job.state == "awaiting_labels":
        job.advance("finalizing")
        store.save_job(job)

    stored_ids = {e.recording_id for e in store.entries()}
    for staged in store.staged_recordings(dataset_id):
        if staged.recording_id in stored_ids:
            continue  # resuming after a partial finalize
        samples, rate_hz, includes_gravity = store.read_staged_samples(dataset_id, staged.recording_id)
        rec = CanonicalRecording(
            recording_id=staged.recording_id,
            dataset_id=staged.dataset_id,
            subject_id=staged.subject_id,
            sensor_kind=staged.sensor_kind,
            includes_gravity=includes_gravity,
            samples=samples,
            label_spans=list(staged.spans),
            rate_hz=rate_hz,
        )
        store.append_recording(rec)
        if job is not None:
            job.counts["stored"] += 1
            store.save_job(job)
    store.clear_staging(dataset_id)
    if job is not None:
        job.advance("complete")
        store.save_job(job)
