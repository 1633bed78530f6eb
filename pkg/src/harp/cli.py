"""Companion command line: every API endpoint as a subcommand, plus serve.

All commands talk HTTP to a running service (--api / HARP_API_URL) and
print the JSON response, so sessions are scriptable end to end:

    harp serve --store ./store --bind 127.0.0.1:8787 &
    harp drivers add fixtures/manifests/twosplit_txt.toml
    harp import start --driver twosplit-txt --dataset ds1 --root fixtures/datasets/twosplit_txt
    harp labels pending --dataset ds1
    harp labels decide <mapping_id> accept --canonical walking
    harp labels apply --dataset ds1
    harp query --label running
    harp train --label running --label walking --kind nearest_centroid --wait
    harp classify --model <model_id> --input stream.csv
"""

from __future__ import annotations

import json
import sys
import time

import click
import httpx

OK = (200, 201, 202)


class Client:
    def __init__(self, base_url: str, token: str | None):
        headers = {"authorization": f"Bearer {token}"} if token else {}
        self.http = httpx.Client(base_url=base_url, headers=headers, timeout=60.0)

    def call(self, method: str, path: str, **kw):
        try:
            response = self.http.request(method, path, **kw)
        except httpx.HTTPError as exc:
            raise click.ClickException(f"cannot reach the API: {exc}")
        if response.status_code not in OK:
            try:
                body = response.json()
            except ValueError:
                body = {"status": response.status_code, "message": response.text}
            click.echo(json.dumps(body, indent=2), err=True)
            sys.exit(1)
        return response


def emit(data) -> None:
    click.echo(json.dumps(data, indent=2))


@click.group()
@click.option("--api", envvar="HARP_API_URL", default="http://127.0.0.1:8000", show_default=True,
              help="Base URL of the running service.")
@click.option("--token", envvar="HAR_API_TOKEN", default=None, help="Bearer token, if the service has one.")
@click.pass_context
def main(ctx, api, token):
    """Work a harp service from the shell."""
    ctx.obj = Client(api, token)


# -- drivers --------------------------------------------------------------

@main.group()
def drivers():
    """Register or inspect dataset drivers."""


@drivers.command("add")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def drivers_add(client, manifest):
    with open(manifest, encoding="utf-8") as fh:
        text = fh.read()
    emit(client.call("POST", "/drivers", content=text, headers={"content-type": "application/toml"}).json())


@drivers.command("list")
@click.pass_obj
def drivers_list(client):
    emit(client.call("GET", "/drivers").json())


# -- imports --------------------------------------------------------------

@main.group(name="import")
def import_group():
    """Start and watch dataset integrations."""


@import_group.command("start")
@click.option("--driver", required=True)
@click.option("--dataset", required=True)
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--policy", type=click.Choice(["keep_gravity", "strip_gravity"]), default="keep_gravity")
@click.option("--wait/--no-wait", default=True, help="Poll until the job parks or finishes.")
@click.pass_obj
def import_start(client, driver, dataset, root, policy, wait):
    body = {"driver_id": driver, "dataset_id": dataset, "root": root, "policy": policy}
    job = client.call("POST", "/imports", json=body).json()
    if wait:
        job = _poll_job(client, job["job_id"], until=("awaiting_labels", "complete", "failed"))
    emit(job)


@import_group.command("status")
@click.argument("job_id")
@click.option("--wait/--no-wait", default=False, help="Poll until the job reaches a terminal state.")
@click.pass_obj
def import_status(client, job_id, wait):
    if wait:
        emit(_poll_job(client, job_id, until=("complete", "failed")))
    else:
        emit(client.call("GET", f"/imports/{job_id}").json())


def _poll_job(client, job_id, until, timeout_s=120.0):
    deadline = time.monotonic() + timeout_s
    while True:
        job = client.call("GET", f"/imports/{job_id}").json()
        if job["state"] in until or time.monotonic() > deadline:
            return job
        time.sleep(0.2)


# -- labels ----------------------------------------------------------------

@main.group()
def labels():
    """Review-label workflow: pending queue, decisions, apply."""


@labels.command("pending")
@click.option("--dataset", default=None)
@click.pass_obj
def labels_pending(client, dataset):
    params = {"status": "pending"}
    if dataset:
        params["dataset_id"] = dataset
    emit(client.call("GET", "/labels/mappings", params=params).json())


@labels.command("decide")
@click.argument("mapping_id")
@click.argument("action", type=click.Choice(["accept", "reject", "manual"]))
@click.option("--canonical", default=None)
@click.option("--who", default="cli")
@click.pass_obj
def labels_decide(client, mapping_id, action, canonical, who):
    body = {"action": action, "canonical": canonical, "who": who}
    emit(client.call("POST", f"/labels/mappings/{mapping_id}/decision", json=body).json())


@labels.command("apply")
@click.option("--dataset", required=True)
@click.pass_obj
def labels_apply(client, dataset):
    emit(client.call("POST", "/labels/apply", json={"dataset_id": dataset}).json())


@labels.command("dictionary")
@click.pass_obj
def labels_dictionary(client):
    emit(client.call("GET", "/labels/dictionary").json())


@labels.command("define")
@click.argument("name")
@click.option("--kind", type=click.Choice(["state", "transition", "fall"]), default="state")
@click.option("--description", default="")
@click.option("--alias", "aliases", multiple=True)
@click.pass_obj
def labels_define(client, name, kind, description, aliases):
    body = {"name": name, "kind": kind, "description": description, "aliases": list(aliases)}
    emit(client.call("POST", "/labels/dictionary", json=body).json())


# -- data --------------------------------------------------------------------

@main.command()
@click.option("--label", "labels_", multiple=True)
@click.option("--dataset", "datasets", multiple=True)
@click.option("--subject", "subjects", multiple=True)
@click.option("--sensor-kind", default=None)
@click.option("--min-duration", type=float, default=None)
@click.option("--include-unlabeled", is_flag=True)
@click.option("--all", "select_all", is_flag=True, help="Select everything (no criteria).")
@click.option("--limit", type=int, default=None)
@click.option("--offset", type=int, default=0)
@click.pass_obj
def query(client, labels_, datasets, subjects, sensor_kind, min_duration, include_unlabeled,
          select_all, limit, offset):
    """List catalog entries matching the filter."""
    params = [("label", l) for l in labels_]
    params += [("dataset", d) for d in datasets]
    params += [("subject", s) for s in subjects]
    if sensor_kind:
        params.append(("sensor_kind", sensor_kind))
    if min_duration is not None:
        params.append(("min_duration_s", min_duration))
    if include_unlabeled:
        params.append(("include_unlabeled", "true"))
    if select_all:
        params.append(("select_all", "true"))
    if limit is not None:
        params.append(("limit", limit))
    if offset:
        params.append(("offset", offset))
    emit(client.call("GET", "/data/query", params=params).json())


@main.command()
@click.argument("recording_id")
@click.option("--format", "fmt", type=click.Choice(["csv", "uds"]), default="csv")
@click.option("--output", type=click.Path(dir_okay=False), default=None,
              help="File to write; stdout for csv when omitted.")
@click.pass_obj
def export(client, recording_id, fmt, output):
    """Download one recording as csv text or a binary uds segment."""
    response = client.call("GET", f"/data/recordings/{recording_id}", params={"format": fmt})
    if fmt == "csv" and output is None:
        click.echo(response.text, nl=False)
        return
    if output is None:
        raise click.ClickException("--output is required for uds exports")
    with open(output, "wb") as fh:
        fh.write(response.content)
    emit({"written": output, "bytes": len(response.content)})


# -- models ---------------------------------------------------------------------

@main.command()
@click.option("--label", "labels_", multiple=True)
@click.option("--dataset", "datasets", multiple=True)
@click.option("--all", "select_all", is_flag=True)
@click.option("--kind", type=click.Choice(["nearest_centroid", "knn"]), default="nearest_centroid")
@click.option("--k", type=int, default=5)
@click.option("--window-s", type=float, default=2.0)
@click.option("--overlap", type=float, default=0.5)
@click.option("--wait/--no-wait", default=True, help="Poll the registry until the model is ready.")
@click.pass_obj
def train(client, labels_, datasets, select_all, kind, k, window_s, overlap, wait):
    """Train a model on the recordings selected by the filter."""
    body = {
        "filter": {
            "labels": list(labels_) or None,
            "dataset_ids": list(datasets) or None,
            "select_all": select_all,
        },
        "windowing": {"window_s": window_s, "overlap_fraction": overlap},
        "kind": kind,
        "k": k,
    }
    out = client.call("POST", "/models/train", json=body).json()
    if wait:
        deadline = time.monotonic() + 120.0
        while time.monotonic() < deadline:
            models = {m["model_id"]: m for m in client.call("GET", "/models").json()}
            status = models.get(out["model_id"], {}).get("status")
            if status and status != "building":
                out = models[out["model_id"]]
                break
            time.sleep(0.2)
    emit(out)


@main.group()
def models():
    """Model registry."""


@models.command("list")
@click.pass_obj
def models_list(client):
    emit(client.call("GET", "/models").json())


@models.command("download")
@click.argument("model_id")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def models_download(client, model_id, output):
    payload = client.call("GET", f"/models/{model_id}/download").json()
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
        emit({"written": output})
    else:
        emit(payload)


def _read_samples_csv(path: str) -> list[list[float]]:
    with open(path, encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if lines and any(c.isalpha() for c in lines[0].split(",")[0]):
        lines = lines[1:]  # header row
    rows = []
    for line in lines:
        fields = line.split(",")
        cols = (0, 1, 2) if len(fields) == 3 else (1, 2, 3)  # txyz[,label] or xyz
        rows.append([float(fields[i]) for i in cols])
    return rows


@main.command()
@click.option("--model", "model_id", required=True)
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="CSV of samples: x,y,z rows, or t,x,y,z[,label] with header.")
@click.option("--rate", type=float, default=50.0, show_default=True)
@click.option("--window-s", type=float, default=2.0)
@click.option("--overlap", type=float, default=0.5)
@click.pass_obj
def classify(client, model_id, input_path, rate, window_s, overlap):
    """Classify a raw stream window by window."""
    body = {
        "model_id": model_id,
        "rate_hz": rate,
        "samples": _read_samples_csv(input_path),
        "windowing": {"window_s": window_s, "overlap_fraction": overlap},
    }
    emit(client.call("POST", "/classify", json=body).json())


# -- server -----------------------------------------------------------------------

@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(file_okay=False))
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@click.option("--dictionary", "dictionary_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="TOML label dictionary used to seed a fresh store.")
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False), default=None,
              help="Static directory to serve at /ui (the review frontend bundle).")
def serve(store_dir, bind, dictionary_path, ui_dir):
    """Run the HTTP service over a store directory."""
    import uvicorn

    from .api import create_app
    from .errors import StoreLockedError
    from .labels import load_dictionary_file
    from .store import Store

    dictionary = load_dictionary_file(dictionary_path) if dictionary_path else None
    store = Store(store_dir, dictionary)
    try:
        store.acquire_process_lock()
    except StoreLockedError as exc:
        raise click.ClickException(str(exc))
    host, _, port = bind.rpartition(":")
    app = create_app(store, ui_dir=ui_dir)
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    except OSError as exc:
        raise click.ClickException(f"cannot bind {bind}: {exc}")
    finally:
        store.release_process_lock()


if __name__ == "__main__":
    main()
