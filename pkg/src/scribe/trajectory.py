"""Pen trajectories: raw traces, normalization, feature extraction, resampling.

A character is a single pen-down..pen-up trace. Raw traces arrive in device
units with millisecond timestamps; normalization maps them into the unit box
with seconds rebased to zero. Features are 4-vectors (x, y, dx, dy) where
(dx, dy) is the unit writing direction of the segment ending at the point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .alphabet import is_label
from .errors import DegenerateTrace


class FeaturePoint(NamedTuple):
    x: float
    y: float
    dx: float
    dy: float


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RawTrace:
    """Device-unit pen trace: columns x, y, t with t in milliseconds."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != 3:
            raise ValueError("samples must be an (n, 3) array of x, y, t_ms")
        if samples.shape[0] < 2:
            raise DegenerateTrace("a trace needs at least 2 samples")
        t = samples[:, 2]
        if np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "samples", _frozen(samples))

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RawTrace):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Normalized trace: coordinates in [0, 1], time in seconds from zero."""

    samples: np.ndarray
    label: str | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != 3 or samples.shape[0] < 2:
            raise ValueError("samples must be an (n>=2, 3) array of x, y, t_s")
        t = samples[:, 2]
        if abs(t[0]) > 1e-12 or np.any(np.diff(t) <= 0):
            raise ValueError("time must start at 0 and increase strictly")
        xy = samples[:, :2]
        if xy.min() < -1e-9 or xy.max() > 1 + 1e-9:
            raise ValueError("coordinates must lie in [0, 1]")
        object.__setattr__(self, "samples", _frozen(samples))

    @property
    def duration(self) -> float:
        """Writing duration in seconds (last timestamp)."""
        return float(self.samples[-1, 2])

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.samples, other.samples)


@dataclass(frozen=True, eq=False)
class FeatureSeq:
    """Sequence of (x, y, dx, dy) feature points plus the writing duration."""

    points: np.ndarray
    duration: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 4 or pts.shape[0] == 0:
            raise ValueError("points must be a non-empty (n, 4) array")
        norms = np.hypot(pts[:, 2], pts[:, 3])
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("direction components must be unit length")
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return self.points.shape[0]

    def point(self, i: int) -> FeaturePoint:
        return FeaturePoint(*self.points[i])

    def prefix(self, n: int) -> "FeatureSeq":
        """First n points; duration carried unchanged."""
        return FeatureSeq(self.points[:n], self.duration)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureSeq):
            return NotImplemented
        return self.duration == other.duration and np.array_equal(self.points, other.points)


def normalize(raw: RawTrace) -> Trajectory:
    """Scale a raw trace into the unit box and rebase time to seconds.

    The bounding box is divided by its larger side so aspect ratio is
    preserved; the min corner moves to (0, 0). All-identical points have no
    extent and raise DegenerateTrace.
    """
    xy = raw.samples[:, :2]
    lo = xy.min(axis=0)
    extent = xy.max(axis=0) - lo
    scale = float(extent.max())
    if scale <= 0.0:
        raise DegenerateTrace("trace has zero spatial extent")
    t = raw.samples[:, 2]
    out = np.empty_like(raw.samples)
    out[:, :2] = (xy - lo) / scale
    out[:, 2] = (t - t[0]) / 1000.0
    return Trajectory(out)


def featurize(traj: Trajectory) -> FeatureSeq:
    """Append unit writing directions to every sample.

    The direction at point i is the normalized step from point i-1. The
    first point copies the first defined direction; a zero-length step
    carries the previous direction forward.
    """
    xy = traj.samples[:, :2]
    n = xy.shape[0]
    diffs = np.diff(xy, axis=0)
    seg = np.hypot(diffs[:, 0], diffs[:, 1])
    defined = seg > 0.0
    if not defined.any():
        raise DegenerateTrace("trajectory never moves; no writing direction")

    dirs = np.zeros((n, 2))
    dirs[1:][defined] = diffs[defined] / seg[defined, None]
    # Carry the previous direction across repeated samples, then backfill
    # the leading run (including point 0) with the first defined direction.
    last = None
    first_defined = None
    for i in range(1, n):
        if defined[i - 1]:
            last = dirs[i]
            if first_defined is None:
                first_defined = dirs[i].copy()
        elif last is not None:
            dirs[i] = last
    filled = np.flatnonzero(defined)[0] + 1
    dirs[:filled] = first_defined

    pts = np.hstack([xy, dirs])
    return FeatureSeq(pts, duration=traj.duration)


def resample_polyline(xy: np.ndarray, n_points: int) -> np.ndarray:
    """n_points along a polyline, equally spaced by arc length.

    Endpoints are preserved exactly; zero-length segments are skipped.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    xy = np.asarray(xy, dtype=np.float64)
    keep = np.concatenate([[True], np.any(np.diff(xy, axis=0) != 0.0, axis=1)])
    xy = xy[keep]
    if xy.shape[0] < 2:
        raise DegenerateTrace("cannot resample a zero-length polyline")
    seg = np.hypot(*np.diff(xy, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, cum[-1], n_points)
    x = np.interp(targets, cum, xy[:, 0])
    y = np.interp(targets, cum, xy[:, 1])
    return np.column_stack([x, y])


def resample(fs: FeatureSeq, n_points: int) -> FeatureSeq:
    """Resample to n_points equally spaced by arc length along (x, y).

    Directions are recomputed from the resampled polyline; duration is kept.
    """
    pts = resample_polyline(fs.points[:, :2], n_points)
    return FeatureSeq(_with_directions(pts), duration=fs.duration)


def _with_directions(xy: np.ndarray) -> np.ndarray:
    """(n, 2) polyline -> (n, 4) features, same direction rules as featurize."""
    diffs = np.diff(xy, axis=0)
    seg = np.hypot(diffs[:, 0], diffs[:, 1])
    defined = seg > 0.0
    if not defined.any():
        raise DegenerateTrace("polyline never moves; no writing direction")
    n = xy.shape[0]
    dirs = np.zeros((n, 2))
    dirs[1:][defined] = diffs[defined] / seg[defined, None]
    last = None
    first_defined = None
    for i in range(1, n):
        if defined[i - 1]:
            last = dirs[i]
            if first_defined is None:
                first_defined = dirs[i].copy()
        elif last is not None:
            dirs[i] = last
    filled = np.flatnonzero(defined)[0] + 1
    dirs[:filled] = first_defined
    return np.hstack([xy, dirs])


@dataclass(frozen=True)
class DatasetRecord:
    """One line of the trajectory dataset: a labeled raw trace."""

    user: str
    session: int
    label: str
    trace: RawTrace

    def __post_init__(self):
        if not is_label(self.label):
            raise ValueError(f"label {self.label!r} is not a lowercase letter")


def write_dataset(records: Iterable[DatasetRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(dataset_line(rec) + "\n")


def dataset_line(rec: DatasetRecord) -> str:
    return json.dumps(
        {
            "user": rec.user,
            "session": rec.session,
            "label": rec.label,
            "samples": rec.trace.samples.tolist(),
        },
        separators=(",", ":"),
    )


def read_dataset(path: str | Path) -> Iterator[DatasetRecord]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            yield DatasetRecord(
                user=obj["user"],
                session=int(obj["session"]),
                label=obj["label"],
                trace=RawTrace(np.asarray(obj["samples"], dtype=np.float64)),
            )
