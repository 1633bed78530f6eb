"""The human-in-the-loop label consolidation workflow, end to end.

Imports the twenty-directory fixture into a scratch store, shows the
ranked suggestions a reviewer would see, scripts the decisions (accept /
manual / reject), applies them, and proves the store ends up speaking
only dictionary labels.

Run from the repo root:  python demos/03_label_review.py
"""

import json
import tempfile
from pathlib import Path

from harp import Store, apply_mappings, run_import, suggest
from harp.labels import seed_dictionary

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
DECISIONS = json.loads((FIXTURES / "decisions.json").read_text())["twentydirs-csv"]

# -- what a suggestion looks like --------------------------------------------

dictionary = seed_dictionary()
print("A raw label can be ambiguous; the reviewer sees both readings ranked:\n")
for canonical, score in suggest("sitting down", dictionary, k=3):
    print(f"    {canonical:<18} score={score.score:.4f}  ({score.basis})")

# -- the full review loop over a real import ----------------------------------

with tempfile.TemporaryDirectory() as tmp:
    store = Store(Path(tmp) / "store")
    store.register_driver((FIXTURES / "manifests" / "twentydirs_csv.toml").read_text())
    job = store.create_job("twentydirs-csv", "demo-ds", str(FIXTURES / "datasets" / "twentydirs_csv"))
    job = run_import(store, job.job_id)
    pending = store.list_mappings("demo-ds", status="pending")
    print(f"\nimport parked at {job.state!r} with {len(pending)} raw labels to review")

    for mapping in pending:
        action, canonical = DECISIONS[mapping.raw_label]
        top = mapping.suggestions[0]
        print(f"    {mapping.raw_label:<22} top suggestion {top[0]:<18} "
              f"{top[1].score:.3f} -> reviewer says {action}"
              + (f" ({canonical})" if canonical else ""))
        store.decide(mapping.mapping_id, action, canonical, who="demo-reviewer")

    relabeled = apply_mappings(store, "demo-ds")
    job = store.get_job(job.job_id)
    print(f"\napplied: {relabeled} spans rewritten, job state {job.state!r}")

    stored_labels = sorted({l for e in store.entries() for l in e.labels_present()})
    outside = [l for l in stored_labels if l not in store.dictionary]
    print(f"labels now in the store: {stored_labels}")
    print(f"labels outside the dictionary: {outside or 'none'}")
    unlabeled = [e.recording_id for e in store.entries() if not e.label_spans]
    print(f"recordings left unlabeled by rejections: {len(unlabeled)}")
