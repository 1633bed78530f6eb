"""Exception hierarchy shared across the platform.

Every error carries a stable machine ``code`` so the HTTP layer can map
exceptions to API error bodies without string matching.
"""

from __future__ import annotations


class HarpError(Exception):
    """Base class; subclasses pin a machine code and HTTP status."""

    code = "internal"
    http_status = 500

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}


# -- driver-kit ---------------------------------------------------------

class ManifestSyntaxError(HarpError):
    code = "manifest_syntax"
    http_status = 400

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message, {"line": line} if line is not None else {})
        self.line = line


class ManifestSchemaError(HarpError):
    code = "manifest_schema"
    http_status = 400

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}", {"field": field, "reason": reason})
        self.field = field
        self.reason = reason


class DiscoveryIoError(HarpError):
    code = "dataset_root_unreadable"
    http_status = 400


class RecordingParseError(HarpError):
    code = "recording_parse"
    http_status = 422

    def __init__(self, path: str, line: int | None, reason: str):
        where = f"{path}" if line is None else f"{path}:{line}"
        super().__init__(f"{where}: {reason}", {"path": path, "line": line, "reason": reason})
        self.path = path
        self.line = line
        self.reason = reason


class LabelSourceError(HarpError):
    code = "label_source"
    http_status = 422

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}", {"path": path, "reason": reason})
        self.path = path
        self.reason = reason


# -- aligner ------------------------------------------------------------

class TooShortError(HarpError):
    code = "too_short"
    http_status = 422


class NonMonotonicTimestampsError(HarpError):
    code = "timestamps_not_monotonic"
    http_status = 422


# -- label consolidation -------------------------------------------------

class EmptyDictionaryError(HarpError):
    code = "dictionary_empty"
    http_status = 409


class DuplicateLabelError(HarpError):
    code = "label_duplicate"
    http_status = 409


class MappingNotFoundError(HarpError):
    code = "mapping_not_found"
    http_status = 404


class AlreadyDecidedError(HarpError):
    code = "mapping_already_decided"
    http_status = 409


class UnknownCanonicalError(HarpError):
    code = "unknown_canonical"
    http_status = 422


class PendingMappingsError(HarpError):
    code = "pending_mappings"
    http_status = 409

    def __init__(self, raw_labels: list[str]):
        super().__init__(
            f"{len(raw_labels)} raw label(s) still pending: {', '.join(sorted(raw_labels))}",
            {"raw_labels": sorted(raw_labels)},
        )
        self.raw_labels = sorted(raw_labels)


class NothingStagedError(HarpError):
    code = "nothing_staged"
    http_status = 404


# -- unified store -------------------------------------------------------

class DuplicateIdError(HarpError):
    code = "recording_duplicate"
    http_status = 409


class RecordingNotFoundError(HarpError):
    code = "recording_not_found"
    http_status = 404


class CorruptSegmentError(HarpError):
    code = "corrupt_segment"
    http_status = 500


class StoreIoError(HarpError):
    code = "store_io"
    http_status = 500


class StoreLockedError(HarpError):
    code = "store_locked"
    http_status = 409


class DriverNotFoundError(HarpError):
    code = "driver_not_found"
    http_status = 404


class DriverExistsError(HarpError):
    code = "driver_duplicate"
    http_status = 409


class DatasetAlreadyImportedError(HarpError):
    code = "dataset_already_imported"
    http_status = 409


class JobNotFoundError(HarpError):
    code = "job_not_found"
    http_status = 404


# -- composer ------------------------------------------------------------

class UnknownLabelError(HarpError):
    code = "unknown_label"
    http_status = 422


class InvalidFilterError(HarpError):
    code = "invalid_filter"
    http_status = 422


# -- classifier ----------------------------------------------------------

class EmptyTrainingSetError(HarpError):
    code = "empty_training_set"
    http_status = 422


class ClassWithNoFramesError(HarpError):
    code = "class_without_frames"
    http_status = 422


class FeatureSpecMismatchError(HarpError):
    code = "feature_spec_mismatch"
    http_status = 409


class UnknownModelError(HarpError):
    code = "model_not_found"
    http_status = 404


class ModelNotReadyError(HarpError):
    code = "model_not_ready"
    http_status = 409
