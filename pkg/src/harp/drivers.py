"""Declarative dataset drivers: manifest parsing, file discovery, row parsing.

A driver is a TOML manifest describing one foreign dataset's directory
layout and file syntax. On-boarding a dataset is a data upload, never a
code change: the manifest language covers delimited and fixed-width text
tables, dot or comma decimals, fixed or timestamp-derived rates, and
three ways of sourcing labels (a path capture, a per-row column, or a
sidecar span file).

All functions here are pure with respect to their inputs plus a
read-only filesystem; they are safe to call in parallel.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import RawRecording, SignalUnit, Span, validate_raw
from .errors import (
    DiscoveryIoError,
    LabelSourceError,
    ManifestSchemaError,
    ManifestSyntaxError,
    RecordingParseError,
)

COLUMN_ROLES = ("timestamp", "x", "y", "z", "label", "ignore")
LABEL_SOURCE_KINDS = ("path_capture", "per_row_column", "sidecar_file")

_CAPTURE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass(frozen=True)
class FileSyntax:
    """How one data file is tokenized into columns."""

    kind: str  # delimited | fixed_width
    header_rows: int
    decimal_separator: str  # dot | comma
    column_roles: tuple[str, ...]
    delimiter: str | None = None
    column_widths: tuple[int, ...] | None = None


@dataclass(frozen=True)
class LabelSource:
    """Where raw labels come from for a recording."""

    kind: str
    sidecar_glob: str | None = None
    sidecar_delimiter: str = ","
    sidecar_header_rows: int = 0


@dataclass(frozen=True)
class DriverManifest:
    driver_id: str
    layout: str
    unit: SignalUnit
    includes_gravity: bool
    file_syntax: FileSyntax
    rate_hz: float | None  # None means rate comes from the timestamp column
    label_source: LabelSource | None
    sensor_kind: str = "accelerometer"

    @property
    def layout_groups(self) -> tuple[str, ...]:
        return tuple(_CAPTURE.findall(self.layout))


@dataclass(frozen=True)
class RecordingSource:
    """One discovered data file with its layout captures filled."""

    file_path: Path  # absolute
    rel_path: str  # posix-style, relative to the dataset root
    captured: dict[str, str] = field(default_factory=dict)


def _syntax_error_line(exc: Exception) -> int | None:
    m = re.search(r"at line (\d+)", str(exc))
    return int(m.group(1)) if m else None


def _require(table: dict, key: str, types, where: str):
    if key not in table:
        raise ManifestSchemaError(where or key, f"missing key {key!r}")
    value = table[key]
    if not isinstance(value, types):
        raise ManifestSchemaError(f"{where}.{key}" if where else key, f"wrong type for {key!r}")
    return value


def _parse_file_syntax(table: dict) -> FileSyntax:
    kind = _require(table, "kind", str, "file_syntax")
    if kind not in ("delimited", "fixed_width"):
        raise ManifestSchemaError("file_syntax.kind", f"unknown kind {kind!r}")
    header_rows = _require(table, "header_rows", int, "file_syntax")
    if header_rows < 0:
        raise ManifestSchemaError("file_syntax.header_rows", "must be >= 0")
    decimal = _require(table, "decimal_separator", str, "file_syntax")
    if decimal not in ("dot", "comma"):
        raise ManifestSchemaError("file_syntax.decimal_separator", f"must be dot or comma, got {decimal!r}")
    roles_raw = _require(table, "column_roles", list, "file_syntax")
    roles = tuple(str(r) for r in roles_raw)
    for role in roles:
        if role not in COLUMN_ROLES:
            raise ManifestSchemaError("file_syntax.column_roles", f"unknown role {role!r}")
    for axis in ("x", "y", "z"):
        count = roles.count(axis)
        if count == 0:
            raise ManifestSchemaError("column_roles", f"missing {axis}")
        if count > 1:
            raise ManifestSchemaError("column_roles", f"duplicate {axis} role")
    for unique_role in ("timestamp", "label"):
        if roles.count(unique_role) > 1:
            raise ManifestSchemaError("column_roles", f"duplicate {unique_role} role")

    delimiter = None
    widths = None
    if kind == "delimited":
        delimiter = _require(table, "delimiter", str, "file_syntax")
        if len(delimiter) != 1:
            raise ManifestSchemaError("file_syntax.delimiter", "must be a single character")
    else:
        widths_raw = _require(table, "column_widths", list, "file_syntax")
        widths = tuple(int(w) for w in widths_raw)
        if len(widths) != len(roles):
            raise ManifestSchemaError("file_syntax.column_widths", "one width per column role required")
        if any(w <= 0 for w in widths):
            raise ManifestSchemaError("file_syntax.column_widths", "widths must be positive")

    extra = set(table) - {"kind", "header_rows", "decimal_separator", "column_roles", "delimiter", "column_widths"}
    if extra:
        raise ManifestSchemaError("file_syntax", f"unknown key(s): {', '.join(sorted(extra))}")
    return FileSyntax(kind, header_rows, decimal, roles, delimiter, widths)


def _parse_label_source(table: dict | None) -> LabelSource | None:
    if table is None:
        return None
    kind = _require(table, "kind", str, "label_source")
    if kind not in LABEL_SOURCE_KINDS:
        raise ManifestSchemaError("label_source.kind", f"unknown kind {kind!r}")
    if kind == "sidecar_file":
        glob = _require(table, "glob", str, "label_source")
        delimiter = str(table.get("delimiter", ","))
        if len(delimiter) != 1:
            raise ManifestSchemaError("label_source.delimiter", "must be a single character")
        header_rows = int(table.get("header_rows", 0))
        extra = set(table) - {"kind", "glob", "delimiter", "header_rows"}
        if extra:
            raise ManifestSchemaError("label_source", f"unknown key(s): {', '.join(sorted(extra))}")
        return LabelSource(kind, glob, delimiter, header_rows)
    extra = set(table) - {"kind"}
    if extra:
        raise ManifestSchemaError("label_source", f"unknown key(s): {', '.join(sorted(extra))}")
    return LabelSource(kind)


def parse_manifest(text: str) -> DriverManifest:
    """Parse and validate a TOML driver manifest."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ManifestSyntaxError(str(exc), _syntax_error_line(exc)) from exc

    known = {"driver_id", "layout", "unit", "rate", "includes_gravity", "sensor_kind", "file_syntax", "label_source"}
    extra = set(doc) - known
    if extra:
        raise ManifestSchemaError("manifest", f"unknown key(s): {', '.join(sorted(extra))}")

    driver_id = _require(doc, "driver_id", str, "")
    if not driver_id.strip():
        raise ManifestSchemaError("driver_id", "must be non-empty")

    layout = _require(doc, "layout", str, "")
    if not layout.strip():
        raise ManifestSchemaError("layout", "must be non-empty")
    if "**" in layout:
        raise ManifestSchemaError("layout", "captures match single path components; '**' is not supported")
    if re.search(r"[{}]", _CAPTURE.sub("", layout)):
        raise ManifestSchemaError("layout", "unbalanced or malformed capture braces")
    groups = _CAPTURE.findall(layout)
    if len(groups) != len(set(groups)):
        raise ManifestSchemaError("layout", "duplicate capture group")

    unit_text = _require(doc, "unit", str, "")
    try:
        unit = SignalUnit.parse(unit_text)
    except (ValueError, IndexError) as exc:
        raise ManifestSchemaError("unit", str(exc)) from exc

    rate_text = _require(doc, "rate", str, "")
    if rate_text == "from_timestamp_column":
        rate_hz = None
    elif rate_text.startswith("fixed:"):
        try:
            rate_hz = float(rate_text.split(":", 1)[1])
        except ValueError as exc:
            raise ManifestSchemaError("rate", f"bad fixed rate {rate_text!r}") from exc
        if not rate_hz > 0:
            raise ManifestSchemaError("rate", "fixed rate must be positive")
    else:
        raise ManifestSchemaError("rate", f"expected 'fixed:<hz>' or 'from_timestamp_column', got {rate_text!r}")

    includes_gravity = _require(doc, "includes_gravity", bool, "")

    sensor_kind = str(doc.get("sensor_kind", "accelerometer"))
    if sensor_kind not in ("accelerometer", "gyroscope"):
        raise ManifestSchemaError("sensor_kind", f"unknown kind {sensor_kind!r}")

    syntax = _parse_file_syntax(_require(doc, "file_syntax", dict, ""))
    label_source = _parse_label_source(doc.get("label_source"))

    if rate_hz is None and "timestamp" not in syntax.column_roles:
        raise ManifestSchemaError("rate", "from_timestamp_column requires a timestamp column role")
    if label_source is not None and label_source.kind == "per_row_column" and "label" not in syntax.column_roles:
        raise ManifestSchemaError("label_source", "per_row_column requires a label column role")
    if label_source is not None and label_source.kind == "path_capture" and "activity" not in groups:
        raise ManifestSchemaError("label_source", "path_capture requires an {activity} capture in layout")
    if "label" in syntax.column_roles and (label_source is None or label_source.kind != "per_row_column"):
        raise ManifestSchemaError("column_roles", "a label column requires label_source per_row_column")

    return DriverManifest(
        driver_id=driver_id,
        layout=layout,
        unit=unit,
        includes_gravity=includes_gravity,
        file_syntax=syntax,
        rate_hz=rate_hz,
        label_source=label_source,
        sensor_kind=sensor_kind,
    )


def _layout_regex(layout: str) -> re.Pattern:
    pattern = []
    pos = 0
    for m in _CAPTURE.finditer(layout):
        pattern.append(re.escape(layout[pos:m.start()]))
        pattern.append(f"(?P<{m.group(1)}>[^/]+)")
        pos = m.end()
    pattern.append(re.escape(layout[pos:]))
    return re.compile("".join(pattern) + r"\Z")


def discover(root: Path | str, manifest: DriverManifest) -> list[RecordingSource]:
    """Enumerate every file under ``root`` matching the manifest layout.

    Results are sorted lexicographically by relative path, so repeated
    runs over the same tree are deterministic.
    """
    root = Path(root)
    if not root.is_dir():
        raise DiscoveryIoError(f"dataset root {root} is not a readable directory")
    regex = _layout_regex(manifest.layout)
    sources = []
    try:
        paths = [p for p in root.rglob("*") if p.is_file()]
    except OSError as exc:
        raise DiscoveryIoError(f"cannot walk {root}: {exc}") from exc
    for path in paths:
        rel = path.relative_to(root).as_posix()
        m = regex.match(rel)
        if m:
            sources.append(RecordingSource(path.resolve(), rel, dict(m.groupdict())))
    sources.sort(key=lambda s: s.rel_path)
    return sources


def _split_line(line: str, syntax: FileSyntax) -> list[str]:
    if syntax.kind == "fixed_width":
        fields, pos = [], 0
        for width in syntax.column_widths:
            fields.append(line[pos:pos + width].strip())
            pos += width
        return fields
    # A single-space delimiter tolerates runs of whitespace, which is how
    # whitespace-separated txt datasets are laid out in practice.
    if syntax.delimiter == " ":
        return line.split()
    return [f.strip() for f in line.split(syntax.delimiter)]


def _parse_float(text: str, decimal_separator: str) -> float:
    if decimal_separator == "comma":
        text = text.replace(",", ".")
    return float(text)


def _coalesce_spans(row_labels: list[str]) -> list[Span]:
    """Merge adjacent rows with equal labels into (start, end, label) spans."""
    spans: list[Span] = []
    for i, label in enumerate(row_labels):
        if spans and spans[-1][2] == label and spans[-1][1] == i:
            spans[-1] = (spans[-1][0], i + 1, label)
        else:
            spans.append((i, i + 1, label))
    return spans


def _read_sidecar(src: RecordingSource, manifest: DriverManifest, dataset_root: Path) -> list[Span]:
    ls = manifest.label_source
    rel = ls.sidecar_glob
    for name, value in src.captured.items():
        rel = rel.replace("{" + name + "}", value)
    sidecar = dataset_root / rel
    if not sidecar.is_file():
        raise LabelSourceError(src.rel_path, f"sidecar file {rel} not found")
    spans: list[Span] = []
    with open(sidecar, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line_no <= ls.sidecar_header_rows or not line.strip():
                continue
            fields = [f.strip() for f in line.split(ls.sidecar_delimiter)]
            if len(fields) != 3:
                raise LabelSourceError(str(sidecar), f"line {line_no}: expected start,end,label")
            try:
                start, end = int(fields[0]), int(fields[1])
            except ValueError as exc:
                raise LabelSourceError(str(sidecar), f"line {line_no}: bad span bounds") from exc
            if not fields[2]:
                raise LabelSourceError(str(sidecar), f"line {line_no}: empty label")
            spans.append((start, end, fields[2]))
    return spans


def parse_recording(src: RecordingSource, manifest: DriverManifest, dataset_id: str) -> RawRecording:
    """Parse one discovered file into a validated RawRecording."""
    syntax = manifest.file_syntax
    roles = syntax.column_roles
    n_cols = len(roles)
    xyz_idx = [roles.index(a) for a in ("x", "y", "z")]
    ts_idx = roles.index("timestamp") if "timestamp" in roles else None
    label_idx = roles.index("label") if "label" in roles else None
    per_row = manifest.label_source is not None and manifest.label_source.kind == "per_row_column"

    rows: list[tuple[float, float, float]] = []
    times: list[float] = []
    row_labels: list[str] = []
    try:
        with open(src.file_path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise RecordingParseError(src.rel_path, None, str(exc)) from exc

    for line_no, line in enumerate(lines, start=1):
        if line_no <= syntax.header_rows or not line.strip():
            continue
        fields = _split_line(line.rstrip("\n"), syntax)
        if len(fields) != n_cols:
            raise RecordingParseError(src.rel_path, line_no, f"expected {n_cols} fields, got {len(fields)}")
        try:
            rows.append(tuple(_parse_float(fields[i], syntax.decimal_separator) for i in xyz_idx))
            if ts_idx is not None:
                times.append(_parse_float(fields[ts_idx], syntax.decimal_separator))
        except ValueError as exc:
            raise RecordingParseError(src.rel_path, line_no, f"unparseable number: {exc}") from exc
        if per_row:
            raw = fields[label_idx]
            if not raw:
                raise LabelSourceError(src.rel_path, f"line {line_no}: empty label")
            row_labels.append(raw)

    if not rows:
        raise RecordingParseError(src.rel_path, None, "no data rows")

    spans: list[Span] = []
    ls = manifest.label_source
    if ls is not None:
        if ls.kind == "path_capture":
            spans = [(0, len(rows), src.captured["activity"])]
        elif ls.kind == "per_row_column":
            spans = _coalesce_spans(row_labels)
        else:
            dataset_root = _infer_root(src)
            spans = _read_sidecar(src, manifest, dataset_root)

    use_timestamps = manifest.rate_hz is None
    rec = RawRecording(
        dataset_id=dataset_id,
        source_path=src.rel_path,
        subject_id=src.captured.get("subject", ""),
        sensor_kind=manifest.sensor_kind,
        declared_unit=manifest.unit,
        includes_gravity=manifest.includes_gravity,
        samples=np.array(rows, dtype=np.float64),
        declared_rate_hz=None if use_timestamps else manifest.rate_hz,
        timestamps=np.array(times, dtype=np.float64) if use_timestamps else None,
        raw_label_spans=spans,
    )
    violations = validate_raw(rec)
    if violations:
        raise RecordingParseError(src.rel_path, None, "; ".join(str(v) for v in violations))
    return rec


def _infer_root(src: RecordingSource) -> Path:
    # rel_path has a fixed depth, so the dataset root is that many levels up.
    depth = src.rel_path.count("/") + 1
    root = src.file_path
    for _ in range(depth):
        root = root.parent
    return root
