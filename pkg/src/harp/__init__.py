"""harp: collect, unify, store, and serve labeled inertial signals."""

from .align import AxisMap, GravityFilterParams, align, convert_units, resample, separate_gravity
from .classify import (
    FEATURE_NAMES,
    TrainedModel,
    classify_raw,
    deserialize,
    evaluate,
    extract_features,
    predict,
    serialize,
    train,
)
from .compose import QueryFilter, WindowingSpec, export, query, windows
from .core import (
    CANONICAL_RATE_HZ,
    STANDARD_GRAVITY,
    CanonicalRecording,
    LabelDictionary,
    LabelEntry,
    RawRecording,
    SignalUnit,
    Violation,
    Window,
    normalize_label_text,
    validate_raw,
)
from .drivers import DriverManifest, RecordingSource, discover, parse_manifest, parse_recording
from .importer import apply_mappings, run_import
from .labels import LabelMapping, levenshtein, seed_dictionary, similarity, suggest
from .store import CatalogEntry, ImportJob, Store, decode_segment, encode_segment

__version__ = "0.1.0"

__all__ = [
    "AxisMap",
    "CANONICAL_RATE_HZ",
    "CatalogEntry",
    "CanonicalRecording",
    "DriverManifest",
    "FEATURE_NAMES",
    "GravityFilterParams",
    "ImportJob",
    "LabelDictionary",
    "LabelEntry",
    "LabelMapping",
    "QueryFilter",
    "RawRecording",
    "RecordingSource",
    "STANDARD_GRAVITY",
    "SignalUnit",
    "Store",
    "TrainedModel",
    "Violation",
    "Window",
    "WindowingSpec",
    "align",
    "apply_mappings",
    "classify_raw",
    "convert_units",
    "decode_segment",
    "deserialize",
    "discover",
    "encode_segment",
    "evaluate",
    "export",
    "extract_features",
    "levenshtein",
    "normalize_label_text",
    "parse_manifest",
    "parse_recording",
    "predict",
    "query",
    "resample",
    "run_import",
    "seed_dictionary",
    "separate_gravity",
    "serialize",
    "similarity",
    "suggest",
    "train",
    "validate_raw",
    "windows",
]
