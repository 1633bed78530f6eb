"""Baseline activity-recognition models: features, training, inference.

Models are deliberately simple (nearest centroid and kNN over 23
hand-built window statistics): the platform contract is about building,
registering, and serving models, and these exercise the whole path at
desk scale. The wire format is versioned JSON; floats survive a
round-trip bit-exactly because both sides use shortest round-trip
decimal encoding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .compose import QueryFilter, WindowingSpec, query, windows_of
from .core import Window, new_ulid
from .errors import (
    ClassWithNoFramesError,
    EmptyTrainingSetError,
    FeatureSpecMismatchError,
    TooShortError,
)
from .store import Store

FEATURE_SPEC_VERSION = 1
_AXIS_STATS = ("mean", "std", "min", "max", "median", "energy")
FEATURE_NAMES = tuple(f"{axis}_{stat}" for axis in "xyz" for stat in _AXIS_STATS) + (
    "corr_xy",
    "corr_yz",
    "corr_xz",
    "mag_mean",
    "mag_std",
)
N_FEATURES = len(FEATURE_NAMES)  # 23

MODEL_KINDS = ("nearest_centroid", "knn")
MODEL_FORMAT = "har-model"
MODEL_FORMAT_VERSION = 1

new_model_id = new_ulid


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        return 0.0  # correlation undefined on a constant axis
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))


def extract_features(w: Window | np.ndarray) -> np.ndarray:
    """The 23 window statistics in fixed order; see FEATURE_NAMES."""
    data = w.data if isinstance(w, Window) else np.asarray(w, dtype=np.float64)
    if len(data) < 2:
        raise TooShortError("feature extraction needs a window of at least 2 samples")
    out = np.empty(N_FEATURES)
    for i in range(3):
        col = data[:, i]
        base = i * len(_AXIS_STATS)
        out[base + 0] = col.mean()
        out[base + 1] = col.std()
        out[base + 2] = col.min()
        out[base + 3] = col.max()
        out[base + 4] = np.median(col)
        out[base + 5] = np.mean(col**2)
    x, y, z = data[:, 0], data[:, 1], data[:, 2]
    out[18] = _pearson(x, y)
    out[19] = _pearson(y, z)
    out[20] = _pearson(x, z)
    mag = np.sqrt((data**2).sum(axis=1))
    out[21] = mag.mean()
    out[22] = mag.std()
    return out


@dataclass(eq=False)
class TrainedModel:
    """Feature standardization plus classifier parameters, serializable."""

    model_id: str
    kind: str
    feature_spec_version: int
    labels: tuple[str, ...]
    mean: np.ndarray  # (23,)
    std: np.ndarray  # (23,), zero-variance features recorded with std 1
    zero_variance: tuple[int, ...]
    centroids: np.ndarray | None = None  # (n_classes, 23), nearest_centroid
    train_vectors: np.ndarray | None = None  # (n, 23) standardized, knn
    train_labels: tuple[str, ...] | None = None
    k: int | None = None
    metadata: dict = field(default_factory=dict)

    def standardize(self, v: np.ndarray) -> np.ndarray:
        return (np.asarray(v, dtype=np.float64) - self.mean) / self.std

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrainedModel):
            return NotImplemented

        def arr_eq(a, b):
            return (a is None) == (b is None) and (a is None or np.array_equal(a, b))

        return (
            self.model_id == other.model_id
            and self.kind == other.kind
            and self.feature_spec_version == other.feature_spec_version
            and self.labels == other.labels
            and arr_eq(self.mean, other.mean)
            and arr_eq(self.std, other.std)
            and self.zero_variance == other.zero_variance
            and arr_eq(self.centroids, other.centroids)
            and arr_eq(self.train_vectors, other.train_vectors)
            and self.train_labels == other.train_labels
            and self.k == other.k
            and self.metadata == other.metadata
        )


def train(
    frames: list[tuple[np.ndarray, str]],
    kind: str = "nearest_centroid",
    k: int = 5,
    metadata: dict | None = None,
    model_id: str | None = None,
) -> TrainedModel:
    """Fit standardization and classifier parameters on labeled feature vectors."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"kind must be one of {MODEL_KINDS}, got {kind!r}")
    if not frames:
        raise EmptyTrainingSetError("no training frames")
    if kind == "knn" and k < 1:
        raise ValueError("k must be >= 1")

    X = np.array([np.asarray(v, dtype=np.float64) for v, _ in frames])
    if X.shape[1] != N_FEATURES:
        raise FeatureSpecMismatchError(f"expected {N_FEATURES} features, got {X.shape[1]}")
    y = [label for _, label in frames]
    labels = tuple(sorted(set(y)))

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    zero_variance = tuple(int(i) for i in np.flatnonzero(std == 0.0))
    std = std.copy()
    std[list(zero_variance)] = 1.0  # keep the feature index space stable
    Xs = (X - mean) / std

    meta = dict(metadata or {})
    meta.setdefault("created_at", datetime.now(timezone.utc).isoformat())
    meta["n_frames"] = len(frames)
    if len(labels) == 1:
        meta["single_class"] = True

    model = TrainedModel(
        model_id=model_id or new_ulid(),
        kind=kind,
        feature_spec_version=FEATURE_SPEC_VERSION,
        labels=labels,
        mean=mean,
        std=std,
        zero_variance=zero_variance,
        metadata=meta,
    )
    if kind == "nearest_centroid":
        model.centroids = np.array([Xs[np.array(y) == label].mean(axis=0) for label in labels])
    else:
        model.train_vectors = Xs
        model.train_labels = tuple(y)
        model.k = k
    return model


def predict(model: TrainedModel, v: np.ndarray) -> tuple[str, float]:
    """Label plus confidence for one feature vector.

    Nearest centroid: closest class centroid, ties to the
    lexicographically smaller label, softmax confidence over distances.
    kNN: majority vote among the k nearest, ties by smaller mean
    distance then label order, confidence = votes / k.
    """
    if getattr(v, "shape", (N_FEATURES,)) != (N_FEATURES,):
        v = np.asarray(v, dtype=np.float64)
    if model.feature_spec_version != FEATURE_SPEC_VERSION:
        raise FeatureSpecMismatchError(
            f"model speaks feature spec v{model.feature_spec_version}, runtime is v{FEATURE_SPEC_VERSION}"
        )
    vs = model.standardize(v)

    if model.kind == "nearest_centroid":
        dists = np.linalg.norm(model.centroids - vs, axis=1)
        best = int(np.argmin(dists))  # labels sorted, argmin takes the first: lexicographic tie-break
        weights = np.exp(-(dists - dists.min()))
        return model.labels[best], float(weights[best] / weights.sum())

    dists = np.linalg.norm(model.train_vectors - vs, axis=1)
    k_eff = min(model.k, len(dists))
    nearest = np.argsort(dists, kind="stable")[:k_eff]
    votes: dict[str, int] = {}
    dist_sum: dict[str, float] = {}
    for idx in nearest:
        label = model.train_labels[idx]
        votes[label] = votes.get(label, 0) + 1
        dist_sum[label] = dist_sum.get(label, 0.0) + float(dists[idx])
    top = max(votes.values())
    tied = [label for label, n in votes.items() if n == top]
    tied.sort(key=lambda label: (dist_sum[label] / votes[label], label))
    return tied[0], top / k_eff


@dataclass
class EvalReport:
    """Holdout metrics; confusion rows are true labels, columns predictions."""

    accuracy: float
    labels: tuple[str, ...]
    confusion: np.ndarray
    per_class: dict[str, dict]
    total: int

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
            "per_class": self.per_class,
            "total": self.total,
        }


def evaluate(model: TrainedModel, frames: list[tuple[np.ndarray, str]]) -> EvalReport:
    if not frames:
        raise EmptyTrainingSetError("no evaluation frames")
    true_labels = [label for _, label in frames]
    order = tuple(sorted(set(true_labels) | set(model.labels)))
    index = {label: i for i, label in enumerate(order)}
    confusion = np.zeros((len(order), len(order)), dtype=int)
    for v, truth in frames:
        predicted, _ = predict(model, v)
        confusion[index[truth], index[predicted]] += 1
    total = len(frames)
    accuracy = float(np.trace(confusion)) / total
    per_class = {}
    for label in order:
        i = index[label]
        tp = int(confusion[i, i])
        row = int(confusion[i].sum())
        col = int(confusion[:, i].sum())
        per_class[label] = {
            "precision": tp / col if col else 0.0,
            "recall": tp / row if row else 0.0,
            "support": row,
        }
    return EvalReport(accuracy, order, confusion, per_class, total)


def serialize(model: TrainedModel) -> bytes:
    """Versioned JSON; floats printed shortest round-trip, so exact."""
    params: dict = {}
    if model.kind == "nearest_centroid":
        params["centroids"] = model.centroids.tolist()
    else:
        params["train_vectors"] = model.train_vectors.tolist()
        params["train_labels"] = list(model.train_labels)
        params["k"] = model.k
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "model_id": model.model_id,
        "kind": model.kind,
        "feature_spec_version": model.feature_spec_version,
        "labels": list(model.labels),
        "standardization": {
            "mean": model.mean.tolist(),
            "std": model.std.tolist(),
            "zero_variance": list(model.zero_variance),
        },
        "params": params,
        "metadata": model.metadata,
    }
    return json.dumps(doc, indent=2).encode("utf-8")


def deserialize(data: bytes | str | dict) -> TrainedModel:
    doc = data if isinstance(data, dict) else json.loads(data)
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"not a {MODEL_FORMAT} v{MODEL_FORMAT_VERSION} document")
    if doc["kind"] not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {doc['kind']!r}")
    std = doc["standardization"]
    params = doc["params"]
    model = TrainedModel(
        model_id=doc["model_id"],
        kind=doc["kind"],
        feature_spec_version=int(doc["feature_spec_version"]),
        labels=tuple(doc["labels"]),
        mean=np.array(std["mean"], dtype=np.float64),
        std=np.array(std["std"], dtype=np.float64),
        zero_variance=tuple(int(i) for i in std["zero_variance"]),
        metadata=dict(doc.get("metadata", {})),
    )
    if model.kind == "nearest_centroid":
        model.centroids = np.array(params["centroids"], dtype=np.float64)
    else:
        model.train_vectors = np.array(params["train_vectors"], dtype=np.float64)
        model.train_labels = tuple(params["train_labels"])
        model.k = int(params["k"])
    return model


def register(store: Store, model: TrainedModel) -> str:
    """Persist a model in the registry; registered models are immutable."""
    payload = json.loads(serialize(model))
    payload["status"] = "ready"
    store.save_model(model.model_id, payload)
    return model.model_id


def load_registered(store: Store, model_id: str) -> TrainedModel:
    return deserialize(store.load_model(model_id))


def classify_raw(
    model: TrainedModel, samples: np.ndarray, spec: WindowingSpec | None = None
) -> list[tuple[float, str, float]]:
    """Window a 50 Hz stream and predict per window: (start_s, label, confidence)."""
    from .compose import window_starts

    spec = spec or WindowingSpec()
    samples = np.asarray(samples, dtype=np.float64)
    win = spec.window_samples
    if len(samples) < win:
        raise TooShortError(f"{len(samples)} samples < one {win}-sample window")
    out = []
    for start in window_starts(len(samples), spec):
        label, confidence = predict(model, extract_features(samples[start:start + win]))
        out.append((start / 50.0, label, confidence))
    return out


def train_from_store(
    store: Store,
    flt: QueryFilter,
    spec: WindowingSpec,
    kind: str = "nearest_centroid",
    k: int = 5,
    model_id: str | None = None,
) -> TrainedModel:
    """Query recordings, window them, and fit a model on the frames.

    When the filter names labels, only windows carrying those labels are
    used, and each requested label must contribute at least one frame.
    """
    entries = query(store, flt)
    frames: list[tuple[np.ndarray, str]] = []
    for entry in entries:
        rec = store.read_recording(entry.recording_id)
        for w in windows_of(rec, spec):
            if flt.labels is not None and w.label not in flt.labels:
                continue
            frames.append((extract_features(w), w.label))
    if not frames:
        raise EmptyTrainingSetError("the query produced no labeled frames")
    if flt.labels is not None:
        seen = {label for _, label in frames}
        missing = sorted(flt.labels - seen)
        if missing:
            raise ClassWithNoFramesError(f"no frames for label(s): {', '.join(missing)}", {"labels": missing})
    metadata = {
        "dataset_ids": sorted({e.dataset_id for e in entries}),
        "window_s": spec.window_s,
        "overlap_fraction": spec.overlap_fraction,
        "labels_requested": sorted(flt.labels) if flt.labels is not None else None,
    }
    return train(frames, kind=kind, k=k, metadata=metadata, model_id=model_id)
