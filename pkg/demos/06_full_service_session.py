"""The whole platform over HTTP: the session a client would script.

Starts a live service on a scratch store, then speaks only the REST API:
register drivers, import all three fixture datasets, work the label
queue, query, train, download the model, classify a stream, shut down.

Run from the repo root:  python demos/06_full_service_session.py
"""

import json
import math
import socket
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import httpx
import numpy as np

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
DECISIONS = json.loads((FIXTURES / "decisions.json").read_text())
TREES = {"twosplit-txt": "twosplit_txt", "twentydirs-csv": "twentydirs_csv", "logger-counts": "logger_counts"}

with socket.socket() as s:
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]

with tempfile.TemporaryDirectory() as tmp:
    server = subprocess.Popen(
        [sys.executable, "-m", "harp.cli", "serve", "--store", f"{tmp}/store",
         "--bind", f"127.0.0.1:{port}"],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
    )
    api = httpx.Client(base_url=f"http://127.0.0.1:{port}", timeout=30.0)
    try:
        for _ in range(100):
            try:
                api.get("/")
                break
            except httpx.HTTPError:
                time.sleep(0.1)
        print(f"service up on 127.0.0.1:{port}")

        for driver_id, tree in TREES.items():
            manifest = (FIXTURES / "manifests" / f"{tree}.toml").read_text()
            api.post("/drivers", content=manifest, headers={"content-type": "application/toml"})
            job = api.post("/imports", json={
                "driver_id": driver_id, "dataset_id": tree,
                "root": str(FIXTURES / "datasets" / tree),
            }).json()
            while True:
                state = api.get(f"/imports/{job['job_id']}").json()
                if state["state"] != "staged":
                    break
                time.sleep(0.1)
            pending = api.get("/labels/mappings", params={"dataset_id": tree, "status": "pending"}).json()
            for mapping in pending:
                action, canonical = DECISIONS[driver_id][mapping["raw_label"]]
                api.post(f"/labels/mappings/{mapping['mapping_id']}/decision",
                         json={"action": action, "canonical": canonical, "who": "demo"})
            applied = api.post("/labels/apply", json={"dataset_id": tree}).json()
            final = api.get(f"/imports/{job['job_id']}").json()
            print(f"  {driver_id:<16} {final['counts']['stored']:>2} recordings stored, "
                  f"{applied['relabeled_spans']} spans relabeled, {len(pending)} labels reviewed")

        running = api.get("/data/query", params={"label": "running"}).json()
        print(f"\nquery label=running -> {len(running)} recordings across "
              f"{sorted({e['dataset_id'] for e in running})}")

        model = api.post("/models/train", json={
            "filter": {"labels": ["walking", "running", "sitting"], "dataset_ids": ["twosplit_txt"]},
            "kind": "nearest_centroid",
        }).json()
        model_id = model["model_id"]
        while api.get("/models").json()[0]["status"] == "building":
            time.sleep(0.1)
        payload = api.get(f"/models/{model_id}/download").json()
        print(f"trained + downloaded model {model_id} ({payload['kind']}, labels {payload['labels']})")

        rng = np.random.default_rng(3)
        t = np.arange(400) / 50.0
        stream = np.stack([
            5.9 * np.sin(2 * math.pi * 3.0 * t) + rng.normal(0, 0.2, 400),
            rng.normal(0, 0.2, 400),
            9.80665 + rng.normal(0, 0.2, 400),
        ], axis=1)
        results = api.post("/classify", json={
            "model_id": model_id, "rate_hz": 50.0, "samples": stream.tolist(),
        }).json()
        print("classify a running-like stream:",
              [(r["label"], round(r["confidence"], 2)) for r in results[:4]], "…")
    finally:
        server.terminate()
        server.wait(timeout=10)
        print("service stopped")
