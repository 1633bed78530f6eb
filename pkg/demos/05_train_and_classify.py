"""From stored recordings to a registered model to online classification.

Integrates the two labeled fixture datasets that share the
gravity-included convention, trains both baseline model kinds, compares
them on a holdout, and classifies a fresh synthetic stream.

Run from the repo root:  python demos/05_train_and_classify.py
"""

import json
import math
import tempfile
from pathlib import Path

import numpy as np

from harp import QueryFilter, Store, WindowingSpec, apply_mappings, run_import
from harp.classify import (
    classify_raw,
    deserialize,
    evaluate,
    extract_features,
    load_registered,
    register,
    serialize,
    train_from_store,
)
from harp.compose import windows_of

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
DECISIONS = json.loads((FIXTURES / "decisions.json").read_text())

with tempfile.TemporaryDirectory() as tmp:
    store = Store(Path(tmp) / "store")
    store.register_driver((FIXTURES / "manifests" / "twosplit_txt.toml").read_text())
    job = store.create_job("twosplit-txt", "gym", str(FIXTURES / "datasets" / "twosplit_txt"))
    run_import(store, job.job_id)
    for m in store.list_mappings("gym", status="pending"):
        action, canonical = DECISIONS["twosplit-txt"][m.raw_label]
        store.decide(m.mapping_id, action, canonical, "demo")
    apply_mappings(store, "gym")
    print(f"store holds {len(store.entries())} canonical recordings")

    flt = QueryFilter(labels=frozenset({"walking", "running", "sitting"}))
    spec = WindowingSpec(window_s=2.0, overlap_fraction=0.5)

    for kind in ("nearest_centroid", "knn"):
        model = train_from_store(store, flt, spec, kind=kind, k=5)
        frames = []
        for entry in store.entries():
            rec = store.read_recording(entry.recording_id)
            frames += [(extract_features(w), w.label) for w in windows_of(rec, spec)]
        report = evaluate(model, frames)
        print(f"\n{kind}: {model.metadata['n_frames']} training frames, "
              f"training-set accuracy {report.accuracy:.3f}")
        for label, stats in report.per_class.items():
            print(f"    {label:<10} precision={stats['precision']:.2f} recall={stats['recall']:.2f}")

    # registry round trip: serialize -> register -> load -> identical
    model = train_from_store(store, flt, spec)
    model_id = register(store, model)
    assert load_registered(store, model_id) == model == deserialize(serialize(model))
    print(f"\nregistered model {model_id} (json, floats shortest round-trip)")

    # a fresh 10 s stream, classified window by window
    rng = np.random.default_rng(7)
    t = np.arange(500) / 50.0
    stream = np.stack([
        0.2 * 9.80665 * np.sin(2 * math.pi * 1.0 * t) + rng.normal(0, 0.2, 500),
        rng.normal(0, 0.2, 500),
        9.80665 + rng.normal(0, 0.2, 500),
    ], axis=1)
    print("\nclassifying a held-out walking-like stream:")
    for t_start, label, confidence in classify_raw(model, stream, spec)[:6]:
        print(f"    t={t_start:4.1f}s  {label:<10} confidence={confidence:.3f}")
