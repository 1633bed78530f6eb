"""Transform raw recordings onto the platform grid: 50 Hz, m/s², t=0.

The pipeline is unit conversion → axis remap → linear-interpolation
resampling → optional gravity separation. Resampling assumes activity
energy sits well below the 25 Hz Nyquist limit, so no anti-alias
prefilter is applied; the band-limit assumption is asserted on synthetic
sines in the test suite. Gravity separation is a first-order exponential
low-pass (default cutoff 0.3 Hz) initialized at the first sample, so a
constant input produces zero startup transient.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CANONICAL_RATE_HZ,
    STANDARD_GRAVITY,
    CanonicalRecording,
    RawRecording,
    SignalUnit,
    Span,
    new_ulid,
)
from .errors import NonMonotonicTimestampsError, TooShortError

log = logging.getLogger(__name__)

POLICIES = ("keep_gravity", "strip_gravity")

_UNIT_FACTOR = {"g": STANDARD_GRAVITY, "milli_g": STANDARD_GRAVITY * 1e-3}


def convert_units(samples: np.ndarray, unit: SignalUnit) -> np.ndarray:
    """Scale samples into m/s²: one exact multiply per element."""
    samples = np.asarray(samples, dtype=np.float64)
    if unit.kind == "m_per_s2":
        return samples.copy()
    if unit.kind == "raw_counts":
        factor = unit.counts_scale * STANDARD_GRAVITY
    else:
        factor = _UNIT_FACTOR[unit.kind]
    return samples * factor


@dataclass(frozen=True)
class AxisMap:
    """Signed permutation of the three axes.

    ``mapping`` gives, for each output axis (x, y, z), the source axis it
    reads, optionally negated: ``("x", "-z", "y")`` means out.x = in.x,
    out.y = -in.z, out.z = in.y.
    """

    mapping: tuple[str, str, str] = ("x", "y", "z")

    def __post_init__(self) -> None:
        sources = []
        for expr in self.mapping:
            axis = expr.lstrip("-")
            if axis not in ("x", "y", "z") or expr.count("-") > 1 or not expr.startswith(("-", axis)):
                raise ValueError(f"bad axis expression {expr!r}")
            sources.append(axis)
        if sorted(sources) != ["x", "y", "z"]:
            raise ValueError(f"axis map must be a bijection, got {self.mapping}")

    def matrix(self) -> np.ndarray:
        m = np.zeros((3, 3))
        for out_i, expr in enumerate(self.mapping):
            sign = -1.0 if expr.startswith("-") else 1.0
            src_i = "xyz".index(expr.lstrip("-"))
            m[out_i, src_i] = sign
        return m

    def apply(self, samples: np.ndarray) -> np.ndarray:
        samples = np.asarray(samples, dtype=np.float64)
        out = np.empty_like(samples)
        for out_i, expr in enumerate(self.mapping):
            src = samples[:, "xyz".index(expr.lstrip("-"))]
            out[:, out_i] = -src if expr.startswith("-") else src
        return out


IDENTITY_AXES = AxisMap()


def _timeline(n: int, source) -> np.ndarray:
    """Sample times in seconds rebased to start at 0."""
    if np.isscalar(source):
        rate = float(source)
        if not rate > 0:
            raise ValueError("source rate must be positive")
        return np.arange(n) / rate
    ts = np.asarray(source, dtype=np.float64).ravel()
    if len(ts) != n:
        raise ValueError(f"{len(ts)} timestamps for {n} samples")
    if np.any(np.diff(ts) <= 0):
        raise NonMonotonicTimestampsError("timestamps must be strictly increasing")
    return ts - ts[0]


def _output_grid_size(duration: float, target_hz: float) -> int:
    # Epsilon guards the floor against duration*target landing just below
    # an integer from float rounding.
    return int(math.floor(duration * target_hz + 1e-9)) + 1


def resample(samples: np.ndarray, source, target_hz: float) -> np.ndarray:
    """Linear interpolation onto the uniform grid t_k = k / target_hz.

    ``source`` is either a rate in Hz or a strictly increasing timestamp
    array. The output covers k = 0 .. floor(duration * target_hz).
    """
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) < 2:
        raise TooShortError(f"resampling needs at least 2 samples, got {len(samples)}")
    if np.isscalar(source) and float(source) == target_hz:
        return samples.copy()
    t = _timeline(len(samples), source)
    grid = np.arange(_output_grid_size(t[-1], target_hz)) / target_hz
    out = np.empty((len(grid), samples.shape[1]), dtype=np.float64)
    for axis in range(samples.shape[1]):
        out[:, axis] = np.interp(grid, t, samples[:, axis])
    return out


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def remap_spans(spans: list[Span], source, n_in: int, target_hz: float, n_out: int) -> list[Span]:
    """Move label spans onto the resampled grid by nearest grid index
    (half-up, so a span covering the whole input keeps covering the whole
    output). A span that collapses to zero length is dropped with a warning.
    """
    if not spans:
        return []
    if np.isscalar(source):
        rate = float(source)

        def bound_index(i: int) -> float:
            return (i * target_hz) / rate

    else:
        t = _timeline(n_in, source)
        step_past_end = t[-1] + (t[-1] - t[-2]) if n_in >= 2 else 0.0

        def bound_index(i: int) -> float:
            return (t[i] if i < n_in else step_past_end) * target_hz

    out: list[Span] = []
    for start, end, label in spans:
        new_start = min(max(_round_half_up(bound_index(start)), 0), n_out)
        new_end = min(max(_round_half_up(bound_index(end)), 0), n_out)
        if new_end > new_start:
            out.append((new_start, new_end, label))
        else:
            log.warning("span (%d, %d, %r) collapsed to zero length after resampling; dropped", start, end, label)
    return out


@dataclass(frozen=True)
class GravityFilterParams:
    """First-order exponential low-pass: alpha = dt / (RC + dt), RC = 1/(2π·cutoff)."""

    cutoff_hz: float = 0.3

    def alpha(self, rate_hz: float) -> float:
        if not 0 < self.cutoff_hz < rate_hz / 2:
            raise ValueError(f"cutoff {self.cutoff_hz} Hz outside (0, {rate_hz / 2}) for {rate_hz} Hz data")
        dt = 1.0 / rate_hz
        rc = 1.0 / (2.0 * math.pi * self.cutoff_hz)
        return dt / (rc + dt)


def separate_gravity(
    samples: np.ndarray,
    rate_hz: float = CANONICAL_RATE_HZ,
    params: GravityFilterParams = GravityFilterParams(),
) -> tuple[np.ndarray, np.ndarray]:
    """Split uniform-rate samples into (gravity, linear) per axis.

    The filter state starts at the first sample, so a constant input is a
    fixed point: gravity == input and linear == 0 exactly. ``linear`` is
    defined as ``input - gravity``, which makes ``gravity + linear``
    reconstruct the input (exact whenever input and gravity share sign
    and lie within a factor of two, i.e. for settled gravity-scale data).
    """
    samples = np.asarray(samples, dtype=np.float64)
    alpha = params.alpha(rate_hz)
    gravity = np.empty_like(samples)
    gravity[0] = samples[0]
    for i in range(1, len(samples)):
        gravity[i] = gravity[i - 1] + alpha * (samples[i] - gravity[i - 1])
    linear = samples - gravity
    return gravity, linear


def align(
    rec: RawRecording,
    axis_map: AxisMap = IDENTITY_AXES,
    policy: str = "keep_gravity",
    recording_id: str | None = None,
) -> CanonicalRecording:
    """Run the full alignment pipeline on a validated raw recording.

    Raw label strings are carried through untranslated; consolidation is
    a separate stage. Overlapping raw spans are resolved by clipping the
    later span, so valid raw input always aligns without error.
    """
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
    converted = convert_units(rec.samples, rec.declared_unit)
    converted = axis_map.apply(converted)
    source = rec.declared_rate_hz if rec.timestamps is None else rec.timestamps

    if len(converted) == 1:
        # Degenerate single-sample recording: nothing to interpolate.
        resampled = converted.copy()
        spans = [(0, 1, label) for start, end, label in rec.raw_label_spans]
    else:
        resampled = resample(converted, source, CANONICAL_RATE_HZ)
        spans = remap_spans(rec.raw_label_spans, source, len(converted), CANONICAL_RATE_HZ, len(resampled))

    includes_gravity = rec.includes_gravity
    if policy == "strip_gravity" and rec.includes_gravity:
        _, resampled = separate_gravity(resampled, CANONICAL_RATE_HZ)
        includes_gravity = False

    spans = _resolve_overlaps(spans)
    return CanonicalRecording(
        recording_id=recording_id or new_ulid(),
        dataset_id=rec.dataset_id,
        subject_id=rec.subject_id,
        sensor_kind=rec.sensor_kind,
        includes_gravity=includes_gravity,
        samples=resampled,
        label_spans=spans,
    )


def _resolve_overlaps(spans: list[Span]) -> list[Span]:
    ordered = sorted(spans, key=lambda sp: (sp[0], sp[1]))
    out: list[Span] = []
    prev_end = 0
    for start, end, label in ordered:
        start = max(start, prev_end)
        if end > start:
            out.append((start, end, label))
            prev_end = end
        else:
            log.warning("span (%d, %d, %r) swallowed by an overlapping earlier span; dropped", start, end, label)
    return out
