"""Split a demonstration at local minima of the smoothed hand speed."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import InsufficientData, InvalidParameter, MalformedInput
from .trajectory import DEFAULT_WINDOW, PoseTrack, VelocityProfile, smoothed_speed

_EPS = 1e-9


@dataclass(frozen=True)
class ChangePointSet:
    times: tuple[float, ...] = ()

    def __post_init__(self):
        times = tuple(float(x) for x in self.times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise MalformedInput("change points must be strictly increasing")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[float]:
        return iter(self.times)


@dataclass(frozen=True)
class SegmentList:
    """Contiguous, non-overlapping ``(start, end)`` intervals in seconds."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        segs = tuple((float(a), float(b)) for a, b in self.segments)
        if not segs:
            raise MalformedInput("a segment list needs at least one segment")
        for k, (a, b) in enumerate(segs):
            if not a < b:
                raise MalformedInput(f"segment {k} has start {a} >= end {b}")
            if k and segs[k - 1][1] != a:
                raise MalformedInput(f"segment {k} does not start where segment {k - 1} ends")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def from_boundaries(cls, boundaries: Sequence[float]) -> SegmentList:
        b = [float(x) for x in boundaries]
        return cls(tuple(zip(b[:-1], b[1:])))

    @property
    def boundaries(self) -> list[float]:
        return [self.segments[0][0]] + [b for _, b in self.segments]

    @property
    def start(self) -> float:
        return self.segments[0][0]

    @property
    def end(self) -> float:
        return self.segments[-1][1]

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __getitem__(self, k):
        return self.segments[k]

    def to_json(self) -> list[dict]:
        return [{"start_s": a, "end_s": b} for a, b in self.segments]

    @classmethod
    def from_json(cls, data: list[dict]) -> SegmentList:
        try:
            return cls(tuple((d["start_s"], d["end_s"]) for d in data))
        except (KeyError, TypeError) as exc:
            raise MalformedInput("segments must be objects with start_s and end_s") from exc


def find_velocity_minima(profile: VelocityProfile, min_separation: float | None = None) -> ChangePointSet:
    """Interior local minima of a speed profile.

    A run of equal values that is strictly lower than both of its neighbours
    counts as one minimum located at the run's temporal midpoint. Samples at
    the track ends are never reported.

    With ``min_separation`` (seconds), minima closer than that to a deeper
    minimum are dropped.
    """
    s, t = profile.speed, profile.t
    n = s.size
    if n < 3:
        raise InsufficientData(f"need at least 3 samples, got {n}")
    found: list[tuple[float, float]] = []  # (time, speed)
    i = 1
    while i < n - 1:
        j = i
        while j + 1 < n and s[j + 1] == s[i]:
            j += 1
        if j < n - 1 and s[i - 1] > s[i] and s[j + 1] > s[j]:
            found.append((0.5 * (t[i] + t[j]), float(s[i])))
        i = j + 1

    if min_separation is not None and min_separation > 0 and len(found) > 1:
        kept: list[tuple[float, float]] = []
        for tm, sp in sorted(found, key=lambda x: (x[1], x[0])):
            if all(abs(tm - k) >= min_separation for k, _ in kept):
                kept.append((tm, sp))
        found = sorted(kept)
    return ChangePointSet(tuple(tm for tm, _ in found))


def split(
    track: PoseTrack,
    window: int = DEFAULT_WINDOW,
    min_separation: float | None = None,
) -> SegmentList:
    cps = find_velocity_minima(smoothed_speed(track, window), min_separation)
    return SegmentList.from_boundaries([track.start, *cps.times, track.end])


def split_with_profile(
    track: PoseTrack,
    window: int = DEFAULT_WINDOW,
    min_separation: float | None = None,
) -> tuple[SegmentList, ChangePointSet, VelocityProfile]:
    prof = smoothed_speed(track, window)
    cps = find_velocity_minima(prof, min_separation)
    return SegmentList.from_boundaries([track.start, *cps.times, track.end]), cps, prof


def uniform_boundaries(start: float, end: float, period: float) -> list[float]:
    if not period > 0:
        raise InvalidParameter(f"period must be positive, got {period}")
    inner = []
    k = 1
    while start + k * period < end - _EPS:
        inner.append(start + k * period)
        k += 1
    return inner


def uniform_split(track: PoseTrack, period: float) -> SegmentList:
    """Fixed-period baseline; the last, shorter segment is kept."""
    return SegmentList.from_boundaries(
        [track.start, *uniform_boundaries(track.start, track.end, period), track.end]
    )


def change_points_of(segments: SegmentList) -> ChangePointSet:
    """Interior boundaries only; the track ends are not detections."""
    return ChangePointSet(tuple(segments.boundaries[1:-1]))


def as_array(cps: ChangePointSet) -> np.ndarray:
    return np.asarray(cps.times, dtype=float)
