"""Hand pose tracks: file I/O, moving-average smoothing and speed profiles.

A pose file is UTF-8 CSV with header ``t,x,y,z[,confidence]`` (seconds and
meters, camera frame) or JSON-lines carrying the same keys.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import InsufficientData, InvalidParameter, MalformedInput

MAX_GAP = 3
DEFAULT_WINDOW = 5
DEFAULT_RATE = 30.0
_COLUMNS = ("t", "x", "y", "z")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PoseTrack:
    """Timestamped 3-D positions of a single hand.

    ``t`` has shape (n,), ``p`` has shape (n, 3); ``confidence`` is optional
    and has shape (n,) when present.
    """

    t: np.ndarray
    p: np.ndarray
    confidence: np.ndarray | None = None
    nominal_rate: float = DEFAULT_RATE

    def __post_init__(self):
        t = _frozen(self.t).reshape(-1)
        p = _frozen(self.p)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] != t.shape[0]:
            raise MalformedInput(f"positions must have shape ({t.size}, 3), got {p.shape}")
        if t.size and not np.all(np.isfinite(t)):
            raise MalformedInput("timestamps must be finite")
        if np.any(np.diff(t) <= 0):
            i = int(np.argmax(np.diff(t) <= 0))
            raise MalformedInput(f"timestamps not strictly increasing at row {i + 1}: {t[i]} -> {t[i + 1]}")
        if not np.all(np.isfinite(p)):
            raise MalformedInput("positions must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)
        if self.confidence is not None:
            c = _frozen(self.confidence).reshape(-1)
            if c.shape != t.shape:
                raise MalformedInput("confidence length differs from timestamps")
            object.__setattr__(self, "confidence", c)

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def start(self) -> float:
        return float(self.t[0])

    @property
    def end(self) -> float:
        return float(self.t[-1])

    @property
    def duration(self) -> float:
        return self.end - self.start

    def window(self, start: float, end: float) -> PoseTrack:
        """Samples with ``start <= t <= end``."""
        mask = (self.t >= start - 1e-9) & (self.t <= end + 1e-9)
        conf = None if self.confidence is None else self.confidence[mask]
        return PoseTrack(self.t[mask], self.p[mask], conf, self.nominal_rate)

    def with_positions(self, p: np.ndarray) -> PoseTrack:
        return PoseTrack(self.t, p, self.confidence, self.nominal_rate)


@dataclass(frozen=True, eq=False)
class VelocityProfile:
    t: np.ndarray
    speed: np.ndarray
    window: int = 1

    def __post_init__(self):
        object.__setattr__(self, "t", _frozen(self.t).reshape(-1))
        object.__setattr__(self, "speed", _frozen(self.speed).reshape(-1))
        if self.t.shape != self.speed.shape:
            raise MalformedInput("speed and time arrays differ in length")
        if np.any(np.diff(self.t) <= 0):
            raise MalformedInput("timestamps not strictly increasing")
        if np.any(self.speed < 0):
            raise MalformedInput("speed must be non-negative")

    def __len__(self) -> int:
        return int(self.t.size)


class GapTooLong(MalformedInput):
    """Raised when a run of missing samples exceeds ``MAX_GAP``.

    ``pieces`` holds the valid sub-tracks on either side of every long gap
    (pieces shorter than 3 samples are dropped).
    """

    def __init__(self, message: str, pieces: list[PoseTrack]):
        super().__init__(message)
        self.pieces = pieces


def _parse_float(value) -> float:
    if value is None:
        return math.nan
    if isinstance(value, (int, float)):
        return float(value)
    value = str(value).strip()
    if not value:
        return math.nan
    try:
        return float(value)
    except ValueError as exc:
        raise MalformedInput(f"not a number: {value!r}") from exc


def _read_records(text: str) -> tuple[list[dict], bool]:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        records = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedInput(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(rec, dict):
                raise MalformedInput(f"line {lineno}: expected an object")
            records.append(rec)
        has_conf = any("confidence" in r for r in records)
        return records, has_conf

    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    if tuple(header[:4]) != _COLUMNS or len(header) not in (4, 5) or (
        len(header) == 5 and header[4] != "confidence"
    ):
        raise MalformedInput(f"expected header t,x,y,z[,confidence], got {','.join(header)}")
    reader.fieldnames = header
    return list(reader), len(header) == 5


def _fill_gaps(t: np.ndarray, p: np.ndarray, conf: np.ndarray | None, rate: float) -> PoseTrack:
    missing = ~np.all(np.isfinite(p), axis=1)
    valid_idx = np.flatnonzero(~missing)
    if valid_idx.size == 0:
        raise InsufficientData("no usable pose samples")
    # leading/trailing missing rows cannot be interpolated
    lo, hi = valid_idx[0], valid_idx[-1] + 1
    t, p, missing = t[lo:hi], p[lo:hi].copy(), missing[lo:hi]
    if conf is not None:
        conf = conf[lo:hi].copy()

    runs = []
    i = 0
    while i < missing.size:
        if missing[i]:
            j = i
            while missing[j]:
                j += 1
            runs.append((i, j))
            i = j
        else:
            i += 1

    long_runs = [(a, b) for a, b in runs if b - a > MAX_GAP]
    good = ~missing
    for k in range(3):
        p[missing, k] = np.interp(t[missing], t[good], p[good, k])
    if conf is not None:
        conf = np.where(np.isfinite(conf), conf, 0.0)
        conf[missing] = 0.0

    if long_runs:
        pieces = []
        edges = [0] + [x for run in long_runs for x in run] + [t.size]
        for a, b in zip(edges[::2], edges[1::2]):
            if b - a >= 3:
                pieces.append(PoseTrack(t[a:b], p[a:b], None if conf is None else conf[a:b], rate))
        a, b = long_runs[0]
        raise GapTooLong(
            f"{b - a} consecutive samples missing starting at t={t[a]:.6g}s "
            f"(at most {MAX_GAP} can be interpolated)",
            pieces,
        )
    return PoseTrack(t, p, conf, rate)


def load_pose_track(source: str | Path | IO[str], nominal_rate: float | None = None) -> PoseTrack:
    """Read a pose file (CSV or JSON-lines) into a validated :class:`PoseTrack`.

    Rows with missing coordinates are linearly interpolated when the gap is at
    most three samples long; longer gaps raise :class:`GapTooLong`.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    records, has_conf = _read_records(text)
    try:
        t = np.array([_parse_float(r.get("t")) for r in records], dtype=float)
        p = np.array(
            [[_parse_float(r.get(k)) for k in ("x", "y", "z")] for r in records], dtype=float
        ).reshape(-1, 3)
        conf = (
            np.array([_parse_float(r.get("confidence")) for r in records], dtype=float)
            if has_conf
            else None
        )
    except AttributeError as exc:
        raise MalformedInput("pose records must be key/value rows") from exc
    if not np.all(np.isfinite(t)):
        raise MalformedInput("every record needs a finite timestamp")
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        i = int(bad[0])
        raise MalformedInput(f"timestamps not strictly increasing at record {i + 1}: {t[i]} -> {t[i + 1]}")
    if t.size < 3:
        raise InsufficientData(f"need at least 3 samples, got {t.size}")
    if nominal_rate is None:
        nominal_rate = float(1.0 / np.median(np.diff(t)))
    track = _fill_gaps(t, p, conf, nominal_rate)
    if len(track) < 3:
        raise InsufficientData(f"need at least 3 usable samples, got {len(track)}")
    return track


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def dump_pose_track(track: PoseTrack, fmt: str = "csv") -> str:
    cols = list(_COLUMNS) + (["confidence"] if track.confidence is not None else [])
    rows = []
    for i in range(len(track)):
        vals = [track.t[i], *track.p[i]]
        if track.confidence is not None:
            vals.append(track.confidence[i])
        rows.append(vals)
    if fmt == "csv":
        lines = [",".join(cols)] + [",".join(_fmt(v) for v in row) for row in rows]
    elif fmt == "jsonl":
        # raw literals keep the 9-significant-digit text identical to the CSV writer
        lines = ["{" + ", ".join(f'"{c}": {_fmt(v)}' for c, v in zip(cols, row)) + "}" for row in rows]
    else:
        raise InvalidParameter(f"unknown pose format {fmt!r}")
    return "\n".join(lines) + "\n"


def save_pose_track(track: PoseTrack, path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix in (".jsonl", ".ndjson") else "csv"
    path.write_text(dump_pose_track(track, fmt), encoding="utf-8")


def quantize(values: Iterable[float] | np.ndarray) -> np.ndarray:
    """Round to the precision of the pose writer so in-memory data matches disk."""
    arr = np.asarray(values, dtype=float)
    return np.vectorize(lambda v: float(_fmt(v)), otypes=[float])(arr) if arr.size else arr


def smooth(track: PoseTrack, window: int = DEFAULT_WINDOW) -> PoseTrack:
    """Centered moving average of each coordinate.

    Near the ends the window shrinks symmetrically, down to a single sample at
    the first and last index, so the endpoints are never pulled inward.
    """
    n = len(track)
    if isinstance(window, bool) or int(window) != window or window < 1 or window % 2 == 0:
        raise InvalidParameter(f"window must be an odd positive integer, got {window!r}")
    if window > n:
        raise InvalidParameter(f"window {window} exceeds track length {n}")
    window = int(window)
    if window == 1:
        return track
    half = window // 2
    csum = np.vstack([np.zeros((1, 3)), np.cumsum(track.p, axis=0)])
    idx = np.arange(n)
    h = np.minimum(half, np.minimum(idx, n - 1 - idx))
    out = (csum[idx + h + 1] - csum[idx - h]) / (2 * h + 1)[:, None]
    return track.with_positions(out)


def speed_profile(track: PoseTrack) -> VelocityProfile:
    """Speed by central differences, one-sided at the two endpoints."""
    n = len(track)
    if n < 3:
        raise InsufficientData(f"need at least 3 samples for a speed profile, got {n}")
    t, p = track.t, track.p
    speed = np.empty(n)
    speed[1:-1] = np.linalg.norm(p[2:] - p[:-2], axis=1) / (t[2:] - t[:-2])
    speed[0] = np.linalg.norm(p[1] - p[0]) / (t[1] - t[0])
    speed[-1] = np.linalg.norm(p[-1] - p[-2]) / (t[-1] - t[-2])
    return VelocityProfile(t, speed)


def smoothed_speed(track: PoseTrack, window: int = DEFAULT_WINDOW) -> VelocityProfile:
    prof = speed_profile(smooth(track, window))
    return VelocityProfile(prof.t, prof.speed, window)
