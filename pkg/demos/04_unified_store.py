"""Anatomy of the storage layer: segment files, catalog, corruption.

Run from the repo root:  python demos/04_unified_store.py
"""

import tempfile
from pathlib import Path

import numpy as np

from harp import CanonicalRecording, Store, decode_segment, encode_segment
from harp.errors import CorruptSegmentError, DuplicateIdError
from harp.store import segment_size

# -- the wire format ------------------------------------------------------------

samples = np.random.default_rng(0).uniform(-20, 20, (3, 3))
blob = encode_segment(samples, 50.0, includes_gravity=True)
print(f"3-sample segment = {len(blob)} bytes "
      f"(magic 4 + version 2 + count 4 + rate 8 + flags 1 + t0 8 + payload 72 + crc 4)")
assert len(blob) == segment_size(3) == 103
print("magic:", blob[:4], " little-endian f64 payload, crc32 trailer")

decoded, rate, gravity = decode_segment(blob)
print("decode(encode(x)) == x:", np.array_equal(decoded, samples))

# every single-byte corruption is caught before data escapes
corrupt = bytearray(blob)
corrupt[40] ^= 0x01
try:
    decode_segment(bytes(corrupt))
except CorruptSegmentError as exc:
    print("single flipped bit ->", exc)

# -- the store on disk -------------------------------------------------------------

with tempfile.TemporaryDirectory() as tmp:
    store = Store(Path(tmp) / "store")
    rec = CanonicalRecording("01DEMO", "demo-ds", "s1", "accelerometer", True,
                             np.random.default_rng(1).uniform(-15, 15, (500, 3)),
                             [(0, 250, "walking"), (250, 500, "running")])
    entry = store.append_recording(rec)
    print(f"\nappended {entry.recording_id}: {entry.n_samples} samples, "
          f"crc32=0x{entry.crc32:08x}, {entry.segment_path}")

    again = Store(store.root)  # reopen: the catalog is the durable index
    print("survives reopen, value-identical:", again.read_recording("01DEMO") == rec)

    try:
        store.append_recording(rec)
    except DuplicateIdError as exc:
        print("append same id twice ->", exc)

    print("\nstore layout:")
    for p in sorted(store.root.rglob("*")):
        if p.is_file():
            print(f"    {p.relative_to(store.root)}  ({p.stat().st_size} bytes)")
