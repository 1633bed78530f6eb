"""Acceptance suite: one test per platform exit criterion, at its stated
tolerance. Run with ``pytest tests/test_acceptance.py -v -s`` to get one
printed pass line per criterion."""

import json
import math
import os
import random
import socket
import subprocess
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from harp.align import resample, separate_gravity
from harp.classify import (
    N_FEATURES,
    deserialize,
    evaluate,
    extract_features,
    predict,
    serialize,
    train,
)
from harp.core import CanonicalRecording, SignalUnit, new_ulid
from harp.errors import CorruptSegmentError, PendingMappingsError
from harp.importer import apply_mappings, run_import
from harp.labels import seed_dictionary, similarity, suggest
from harp.store import Store, decode_segment, encode_segment, segment_size

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
DECISIONS = json.loads((FIXTURES / "decisions.json").read_text())

FIXTURE_SETS = [
    ("twosplit-txt", "twosplit_txt"),
    ("twentydirs-csv", "twentydirs_csv"),
    ("logger-counts", "logger_counts"),
]


def integrate_fixtures(store: Store, dataset_prefix: str = "ds") -> dict[str, str]:
    """Drive all three fixture datasets through import + review + apply."""
    dataset_ids = {}
    for driver_id, tree in FIXTURE_SETS:
        manifest_text = (FIXTURES / "manifests" / f"{tree}.toml").read_text()
        store.register_driver(manifest_text)
        dataset_id = f"{dataset_prefix}-{tree}"
        dataset_ids[driver_id] = dataset_id
        job = store.create_job(driver_id, dataset_id, str(FIXTURES / "datasets" / tree))
        job = run_import(store, job.job_id)
        assert job.state == "awaiting_labels", job.reason
        table = DECISIONS[driver_id]
        for mapping in store.list_mappings(dataset_id, status="pending"):
            action, canonical = table[mapping.raw_label]
            store.decide(mapping.mapping_id, action, canonical, "acceptance")
        apply_mappings(store, dataset_id)
        assert store.get_job(job.job_id).state == "complete"
    return dataset_ids


def test_c1_heterogeneous_integration(tmp_path):
    """Three clashing fixture layouts integrate via manifests only."""
    started = time.monotonic()
    store = Store(tmp_path / "store")
    integrate_fixtures(store)

    entries = store.entries()
    assert len(entries) == 9 + 40 + 3
    assert all(e.rate_hz == 50.0 for e in entries)
    for entry in entries:
        for label in entry.labels_present():
            assert label in store.dictionary, f"{label!r} escaped consolidation"

    # unit conversion sanity through the whole pipeline: both
    # gravity-carrying fixtures land near 9.8 m/s² on z
    twosplit = [e for e in entries if e.dataset_id.endswith("twosplit_txt")]
    logger = [e for e in entries if e.dataset_id.endswith("logger_counts")]
    z_a = store.read_recording(twosplit[0].recording_id).samples[:, 2].mean()
    z_c = store.read_recording(logger[0].recording_id).samples[:, 2].mean()
    assert 9.5 < z_a < 10.1  # was ~1.0 g at 100 Hz
    assert 9.4 < z_c < 10.2  # was ~256 counts at 0.0039 g/count

    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    print(f"\nACCEPTANCE heterogeneous-integration: PASS ({len(entries)} recordings in {elapsed:.1f}s)")


def test_c2_aligner_numeric_suite():
    rng = np.random.default_rng(2)

    # unit conversion exact to 1e-12 relative
    counts = rng.uniform(-512, 512, (300, 3))
    converted = counts * 0.0039 * 9.80665  # desk oracle, elementwise
    from harp.align import convert_units

    got = convert_units(counts, SignalUnit("raw_counts", 0.0039))
    np.testing.assert_allclose(got, converted, rtol=1e-12)
    np.testing.assert_allclose(
        convert_units(np.array([[1.0, 0, 0]]), SignalUnit("g"))[0, 0], 9.80665, rtol=1e-12
    )

    # resample identity bitwise at equal rates
    data = rng.standard_normal((331, 3))
    assert np.array_equal(resample(data, 50.0, 50.0), data)

    # 2 Hz sine, 100 → 50 Hz, error < 2e-3 against the analytic oracle
    t_in = np.arange(201) / 100.0
    sine = np.stack([np.sin(2 * math.pi * 2 * t_in)] * 3, axis=1)
    out = resample(sine, 100.0, 50.0)
    t_out = np.arange(len(out)) / 50.0
    assert np.max(np.abs(out[:, 0] - np.sin(2 * math.pi * 2 * t_out))) < 2e-3

    # gravity reconstruction identity exact (bitwise) on gravity-scale data
    for samples in (
        np.tile([0.0, 0.0, 9.80665], (600, 1)),
        np.zeros((200, 3)),
        rng.uniform(6.5, 9.9, (500, 3)),
    ):
        gravity, linear = separate_gravity(samples, 50.0)
        assert np.array_equal(gravity + linear, samples)

    # 10 Hz sine leakage into the gravity estimate < 0.05 after 10 s
    t = np.arange(600) / 50.0
    wobble = np.zeros((600, 3))
    wobble[:, 0] = np.sin(2 * math.pi * 10 * t)
    wobble[:, 2] = 9.80665
    gravity, _ = separate_gravity(wobble, 50.0)
    settled = t >= 10.0
    assert np.max(np.abs(gravity[settled, 0])) < 0.05
    assert np.max(np.abs(gravity[settled, 2] - 9.80665)) < 0.05
    print("\nACCEPTANCE aligner-numeric-suite: PASS")


def _lev_oracle(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


def test_c3_consolidation_suite(tmp_path):
    dictionary = seed_dictionary()

    # exact-alias suggestions rank first with score 1.0
    for raw, expected in (("jogging", "running"), ("WALK", "walking"), ("sit to stand", "stand_up")):
        ranked = suggest(raw, dictionary, k=3)
        assert ranked[0][0] == expected
        assert ranked[0][1].score == 1.0
        assert ranked[0][1].basis == "exact_alias"

    # similarity matches the brute-force oracle on 1000 random pairs
    rng = random.Random(99)
    alphabet = "abcdefghijklmnop_"
    for _ in range(1000):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 14)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 14)))
        expected = 1.0 if a == b else 1 - _lev_oracle(a, b) / max(len(a), len(b))
        assert similarity(a, b) == pytest.approx(expected)

    # apply refuses while anything is pending; afterwards the store scan
    # finds no out-of-dictionary label
    store = Store(tmp_path / "store")
    root = tmp_path / "data"
    for activity in ("walk", "jog"):
        d = root / activity
        d.mkdir(parents=True)
        (d / "p1_t1.csv").write_text("\n".join(f"0.1,0.2,9.8,{activity}" for _ in range(120)) + "\n")
    store.register_driver(
        (FIXTURES / "manifests" / "twentydirs_csv.toml").read_text().replace("twentydirs-csv", "mini-rows")
        .replace("header_rows = 1", "header_rows = 0")
    )
    job = store.create_job("mini-rows", "ds-mini", str(root))
    run_import(store, job.job_id)
    pending = store.list_mappings("ds-mini", status="pending")
    assert len(pending) == 2
    store.decide(pending[0].mapping_id, "accept", "walking", "t")
    with pytest.raises(PendingMappingsError):
        apply_mappings(store, "ds-mini")
    store.decide(pending[1].mapping_id, "accept", "running", "t")
    apply_mappings(store, "ds-mini")
    for entry in store.entries():
        for label in entry.labels_present():
            assert label in store.dictionary
    print("\nACCEPTANCE consolidation-suite: PASS")


def test_c4_store_suite(tmp_path):
    rng = np.random.default_rng(4)

    # encode/decode round-trip equality on 500 randomized recordings
    for _ in range(500):
        n = int(rng.integers(1, 120))
        samples = rng.uniform(-80, 80, (n, 3))
        gravity = bool(rng.integers(0, 2))
        decoded, rate, grav = decode_segment(encode_segment(samples, 50.0, gravity))
        assert np.array_equal(decoded, samples)
        assert rate == 50.0 and grav == gravity

    # a sampled set of 100 single-byte corruptions all trigger CorruptSegment
    blob = encode_segment(rng.uniform(-50, 50, (64, 3)), 50.0, True)
    positions = rng.choice(len(blob), size=100, replace=False)
    for pos in positions:
        corrupted = bytearray(blob)
        corrupted[pos] ^= 0xA5
        with pytest.raises(CorruptSegmentError):
            decode_segment(bytes(corrupted))

    # byte length matches the closed form: header 27 + 24·n + 4
    for n in (1, 3, 17, 250):
        data = encode_segment(np.zeros((n, 3)), 50.0, False)
        assert len(data) == 27 + 24 * n + 4 == segment_size(n)

    # the same guarantees hold through the filesystem
    store = Store(tmp_path / "store")
    rec = CanonicalRecording(new_ulid(), "ds", "s", "accelerometer", True,
                             rng.uniform(-30, 30, (100, 3)), [(0, 100, "walking")])
    store.append_recording(rec)
    assert store.read_recording(rec.recording_id) == rec
    print("\nACCEPTANCE store-suite: PASS")


def make_corpus(rng, per_class=120, n=100, rate=50.0):
    """The 3-class synthetic corpus: noise σ=0.2 rides on the stated
    component (the activity sine; for sitting, the whole gravity vector),
    the remaining axes are ideal."""
    frames = []
    specs = {"walking": (1.0, 2.0), "running": (3.0, 6.0)}
    t = np.arange(n) / rate
    for label, (freq, amp) in specs.items():
        for _ in range(per_class):
            phase = rng.uniform(0, 2 * math.pi)
            x = amp * np.sin(2 * math.pi * freq * t + phase) + rng.normal(0, 0.2, n)
            data = np.stack([x, np.zeros(n), np.full(n, 9.80665)], axis=1)
            frames.append((extract_features(data), label))
    for _ in range(per_class):
        data = np.tile([0.0, 0.0, 9.80665], (n, 1)) + rng.normal(0, 0.2, (n, 3))
        frames.append((extract_features(data), "sitting"))
    return frames


def exhaustive_holdout_accuracy(model, frames):
    """Independent evaluation: plain loops, no calls into predict()."""
    hits = 0
    for v, truth in frames:
        vs = (np.asarray(v) - model.mean) / model.std
        if model.kind == "nearest_centroid":
            best_label, best_d = None, float("inf")
            for i, label in enumerate(model.labels):
                d = math.sqrt(sum((vs[j] - model.centroids[i][j]) ** 2 for j in range(N_FEATURES)))
                if d < best_d or (d == best_d and label < best_label):
                    best_label, best_d = label, d
        else:
            dists = sorted(
                (math.sqrt(sum((vs[j] - tv[j]) ** 2 for j in range(N_FEATURES))), lbl)
                for tv, lbl in zip(model.train_vectors, model.train_labels)
            )[: model.k]
            votes = {}
            for d, lbl in dists:
                votes.setdefault(lbl, []).append(d)
            top = max(len(v) for v in votes.values())
            tied = sorted(
                (sum(ds) / len(ds), lbl) for lbl, ds in votes.items() if len(ds) == top
            )
            best_label = tied[0][1]
        hits += best_label == truth
    return hits / len(frames)


def test_c5_classifier_suite():
    rng = np.random.default_rng(5)
    frames = make_corpus(rng)
    order = rng.permutation(len(frames))
    cut = int(0.7 * len(frames))
    train_frames = [frames[i] for i in order[:cut]]
    test_frames = [frames[i] for i in order[cut:]]

    for kind in ("nearest_centroid", "knn"):
        model = train(train_frames, kind=kind, k=5)
        oracle_acc = exhaustive_holdout_accuracy(model, test_frames)
        report = evaluate(model, test_frames)
        assert report.accuracy == pytest.approx(oracle_acc)
        assert report.accuracy >= 0.95, f"{kind} holdout accuracy {report.accuracy:.3f}"

        again = deserialize(serialize(model))
        assert again == model

    # predict matches the brute-force nearest-class oracle on 1000 cases
    model = train(train_frames, kind="nearest_centroid")
    for _ in range(1000):
        v = rng.normal(0, 5, N_FEATURES)
        got, confidence = predict(model, v)
        vs = (v - model.mean) / model.std
        best_label, best_d = None, float("inf")
        for i, label in enumerate(model.labels):
            d = math.sqrt(sum((vs[j] - model.centroids[i][j]) ** 2 for j in range(N_FEATURES)))
            if d < best_d or (d == best_d and label < best_label):
                best_label, best_d = label, d
        assert got == best_label
        assert 0 < confidence <= 1
    print("\nACCEPTANCE classifier-suite: PASS")


# -- criterion 6: end-to-end scripted session over the CLI -------------------


def census_running_recordings() -> int:
    """Count fixture recordings that must carry a running span after
    consolidation; independent file-level scan, no driver code."""
    count = 0
    for path in (FIXTURES / "datasets" / "twosplit_txt").rglob("*.txt"):
        raw = path.name.split("_")[0].lower()
        action, canonical = DECISIONS["twosplit-txt"][raw]
        count += action in ("accept", "manual") and canonical == "running"
    for activity_dir in (FIXTURES / "datasets" / "twentydirs_csv").iterdir():
        for path in activity_dir.glob("*.csv"):
            raws = set()
            for line in path.read_text().splitlines()[1:]:
                raws.add(line.rsplit(",", 1)[1].strip().lower())
            canon = {
                DECISIONS["twentydirs-csv"][raw][1]
                for raw in raws
                if DECISIONS["twentydirs-csv"][raw][0] in ("accept", "manual")
            }
            count += "running" in canon
    for sidecar in (FIXTURES / "datasets" / "logger_counts" / "labels").glob("*.csv"):
        raws = {line.rsplit(",", 1)[1].strip().lower() for line in sidecar.read_text().splitlines()[1:]}
        canon = {
            DECISIONS["logger-counts"][raw][1]
            for raw in raws
            if DECISIONS["logger-counts"][raw][0] in ("accept", "manual")
        }
        count += "running" in canon
    return count


@pytest.fixture
def live_server(tmp_path):
    port = _free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "harp.cli", "serve", "--store", str(tmp_path / "store"),
         "--bind", f"127.0.0.1:{port}"],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
        env={**os.environ, "PYTHONUNBUFFERED": "1"},
    )
    base = f"http://127.0.0.1:{port}"
    try:
        _wait_ready(base)
        yield base
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _wait_ready(base: str, timeout_s: float = 20.0) -> None:
    import httpx

    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        try:
            if httpx.get(base + "/", timeout=1.0).status_code == 200:
                return
        except httpx.HTTPError:
            time.sleep(0.1)
    raise RuntimeError("service did not come up")


def test_c6_end_to_end_cli_session(live_server, tmp_path):
    from harp.cli import main as cli_main

    runner = CliRunner()

    def cli(*args, expect_ok=True):
        result = runner.invoke(cli_main, ["--api", live_server, *map(str, args)])
        if expect_ok:
            assert result.exit_code == 0, result.output
        return result

    # drivers add
    for _, tree in FIXTURE_SETS:
        cli("drivers", "add", FIXTURES / "manifests" / f"{tree}.toml")
    listed = json.loads(cli("drivers", "list").output)
    assert {d["driver_id"] for d in listed} == {d for d, _ in FIXTURE_SETS}

    # import start → parked awaiting labels
    for driver_id, tree in FIXTURE_SETS:
        job = json.loads(cli(
            "import", "start", "--driver", driver_id, "--dataset", f"e2e-{tree}",
            "--root", FIXTURES / "datasets" / tree,
        ).output)
        assert job["state"] == "awaiting_labels"

        # decide every pending mapping per the review script
        pending = json.loads(cli("labels", "pending", "--dataset", f"e2e-{tree}").output)
        table = DECISIONS[driver_id]
        for mapping in pending:
            action, canonical = table[mapping["raw_label"]]
            args = ["labels", "decide", mapping["mapping_id"], action]
            if canonical:
                args += ["--canonical", canonical]
            cli(*args)

        applied = json.loads(cli("labels", "apply", "--dataset", f"e2e-{tree}").output)
        assert applied["relabeled_spans"] > 0
        final = json.loads(cli("import", "status", job["job_id"], "--wait").output)
        assert final["state"] == "complete"

    # query label=running returns exactly the fixture census
    running = json.loads(cli("query", "--label", "running").output)
    assert len(running) == census_running_recordings() == 5

    # train on three classes, on the dataset whose gravity convention
    # matches the stream we'll classify
    trained = json.loads(cli(
        "train", "--label", "running", "--label", "walking", "--label", "sitting",
        "--dataset", "e2e-twosplit_txt",
        "--kind", "nearest_centroid", "--wait",
    ).output)
    assert trained["status"] == "ready"
    model_id = trained["model_id"]

    # classify a held-out synthetic walking stream
    rng = np.random.default_rng(66)
    t = np.arange(500) / 50.0
    stream = np.stack([
        2.0 * np.sin(2 * math.pi * 1.0 * t) + rng.normal(0, 0.2, 500),
        rng.normal(0, 0.2, 500),
        9.80665 + rng.normal(0, 0.2, 500),
    ], axis=1)
    stream_csv = tmp_path / "stream.csv"
    stream_csv.write_text("\n".join(f"{x:.6f},{y:.6f},{z:.6f}" for x, y, z in stream) + "\n")
    results = json.loads(cli("classify", "--model", model_id, "--input", stream_csv).output)
    assert len(results) == (500 - 100) // 50 + 1  # every window labeled
    assert all(r["label"] for r in results)
    assert all(0 < r["confidence"] <= 1 for r in results)
    assert all(r["label"] == "walking" for r in results)

    # model is downloadable
    payload = json.loads(cli("models", "download", model_id).output)
    assert payload["format"] == "har-model"
    print("\nACCEPTANCE end-to-end-cli-session: PASS")
