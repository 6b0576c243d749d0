"""Scoring of change points and matched intervals, plus synthetic demos.

Synthetic demonstrations chain minimum-jerk reaches between waypoints, so
the hand speed drops to zero exactly where one action ends and the next
begins. Optional "dwell" sections model unintended motion between actions:
a slow drift whose caption is ``"nothing"``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidInput, InvalidParameter
from .lexdist import NOTHING, EmbeddingTable, Sentence, tokenize
from .matcher import DescribedSegments, InstructionScript, MatchAssignment
from .splitter import ChangePointSet, SegmentList
from .trajectory import DEFAULT_RATE, PoseTrack, quantize

DEFAULT_THRESHOLDS = (0.5, 0.75, 0.95)
DEFAULT_MARGIN = 0.1

CAPTIONS = (
    "open the microwave",
    "close the microwave",
    "grasp a cup",
    "put the cup in the microwave",
    "pick up the bottle",
    "place the bottle on the table",
    "open the drawer",
    "close the drawer",
    "turn the knob",
    "pull the lever",
    "push the button",
    "take the cup out",
    "wipe the table",
    "pour water into the cup",
    "open the door",
    "close the door",
)


@dataclass(frozen=True)
class ChangePointScore:
    recall: float
    false_positive_rate: float
    n_cr: int
    n_cp: int
    n_al: int

    def to_json(self) -> dict:
        return {
            "recall": self.recall,
            "false_positive_rate": self.false_positive_rate,
            "n_cr": self.n_cr,
            "n_cp": self.n_cp,
            "n_al": self.n_al,
        }


@dataclass(frozen=True)
class MatchScore:
    ap_at: dict[float, float]
    per_instruction_iou: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "ap_at": {f"{k:g}": v for k, v in sorted(self.ap_at.items())},
            "per_instruction_iou": list(self.per_instruction_iou),
        }


def _times(x) -> np.ndarray:
    if isinstance(x, ChangePointSet):
        return np.asarray(x.times, dtype=float)
    return np.asarray(sorted(float(v) for v in x), dtype=float)


def greedy_pairs(detected, truth, margin: float) -> list[tuple[int, int]]:
    """One-to-one pairing, closest pairs first, within ``margin`` seconds."""
    d, t = _times(detected), _times(truth)
    cand = [
        (abs(d[a] - t[b]), a, b)
        for a in range(d.size)
        for b in range(t.size)
        if abs(d[a] - t[b]) <= margin + 1e-12
    ]
    cand.sort()
    used_d, used_t, pairs = set(), set(), []
    for _, a, b in cand:
        if a not in used_d and b not in used_t:
            used_d.add(a)
            used_t.add(b)
            pairs.append((a, b))
    return sorted(pairs)


def score_change_points(detected, truth, margin: float = DEFAULT_MARGIN) -> ChangePointScore:
    """Recall and false-positive rate of detected change points.

    A detection counts as correct when it is paired with a distinct true
    change point at most ``margin`` seconds away.
    """
    if not margin > 0:
        raise InvalidParameter(f"margin must be positive, got {margin}")
    n_cp, n_al = len(_times(truth)), len(_times(detected))
    if n_cp == 0:
        raise InvalidInput("ground truth has no change points; recall is undefined")
    n_cr = len(greedy_pairs(detected, truth, margin))
    fpr = (n_al - n_cr) / n_al if n_al else 0.0
    return ChangePointScore(n_cr / n_cp, fpr, n_cr, n_cp, n_al)


def interval_iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
    union = max(a[1], b[1]) - min(a[0], b[0])
    return inter / union if union > 0 else 0.0


def score_matching(
    predicted: MatchAssignment | Sequence[tuple[float, float]],
    truth: Sequence[tuple[float, float]],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> MatchScore:
    """AP at each IoU threshold: the share of instructions whose interval reaches it.

    There is exactly one predicted interval per instruction, so no ranking is
    involved and precision at a threshold reduces to this fraction.
    """
    pred = predicted.intervals if isinstance(predicted, MatchAssignment) else list(predicted)
    if len(pred) != len(truth):
        raise InvalidInput(f"{len(pred)} predicted intervals for {len(truth)} instructions")
    if not truth:
        raise InvalidInput("no instructions to score")
    ious = tuple(interval_iou(p, t) for p, t in zip(pred, truth))
    ap = {float(tau): sum(iou >= tau - 1e-12 for iou in ious) / len(ious) for tau in thresholds}
    return MatchScore(ap, ious)


# synthetic data ---------------------------------------------------------------


def _min_jerk_shape(n: int) -> np.ndarray:
    s = np.linspace(0.0, 1.0, n + 1)
    return 10 * s**3 - 15 * s**4 + 6 * s**5


def minimum_jerk(start, goal, n: int) -> np.ndarray:
    """``n + 1`` samples of a rest-to-rest minimum-jerk move, endpoints included."""
    start, goal = np.asarray(start, float), np.asarray(goal, float)
    return start + np.outer(_min_jerk_shape(n), goal - start)


def minimum_jerk_arc(start, goal, center, n: int) -> np.ndarray:
    """Minimum-jerk progress along the shorter circular arc from ``start`` to ``goal``."""
    c = np.asarray(center, float)
    a, b = np.asarray(start, float) - c, np.asarray(goal, float) - c
    normal = np.cross(a, b)
    if np.linalg.norm(normal) < 1e-12:
        raise InvalidParameter("arc endpoints are collinear with the center")
    normal /= np.linalg.norm(normal)
    total = np.arctan2(np.linalg.norm(np.cross(a, b)), a @ b)
    theta = total * _min_jerk_shape(n)
    out = c + np.outer(np.cos(theta), a) + np.outer(np.sin(theta), np.cross(normal, a))
    out[-1] = goal
    return out


@dataclass(frozen=True)
class SynthPlan:
    """Waypoints and captions of a scripted demonstration.

    ``dwells`` maps a reach index ``r`` to the duration of a noise section
    inserted right after reach ``r``. During a dwell the hand drifts in a
    random direction at a mean speed of ``dwell_speed`` (m/s). ``arcs`` maps a
    reach index to a circle center; that reach then follows the circular arc
    between its two waypoints (both must be equidistant from the center).
    """

    waypoints: np.ndarray
    captions: tuple[str, ...]
    durations: tuple[float, ...]
    dwells: Mapping[int, float] = field(default_factory=dict)
    dwell_speed: float = 0.1
    arcs: Mapping[int, Sequence[float]] = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.waypoints, dtype=float)
        if w.ndim != 2 or w.shape[1] != 3 or len(w) < 2:
            raise InvalidParameter("a plan needs at least 2 waypoints of shape (3,)")
        if len(self.captions) != len(w) - 1 or len(self.durations) != len(w) - 1:
            raise InvalidParameter("need one caption and one duration per reach")
        if any(tokenize(c) == (NOTHING,) for c in self.captions):
            raise InvalidParameter("reach captions may not be 'nothing'")
        for r, d in self.dwells.items():
            if not 0 <= r < len(w) - 1 or not d > 0:
                raise InvalidParameter(f"bad dwell {r}: {d}")
        for r, c in self.arcs.items():
            if not 0 <= r < len(w) - 1:
                raise InvalidParameter(f"arc index {r} out of range")
            if r - 1 in self.dwells:
                raise InvalidParameter(f"arc reach {r} may not follow a dwell (the drift moves its start)")
            ra, rb = np.linalg.norm(w[r] - c), np.linalg.norm(w[r + 1] - c)
            if abs(ra - rb) > 1e-9 * max(ra, 1.0):
                raise InvalidParameter(f"waypoints {r} and {r + 1} are not equidistant from the arc center")
        object.__setattr__(self, "waypoints", w)


@dataclass(frozen=True)
class SyntheticDemo:
    track: PoseTrack
    true_change_points: ChangePointSet
    true_segments: DescribedSegments
    script: InstructionScript
    noise_sections: tuple[int, ...]

    @property
    def instruction_intervals(self) -> list[tuple[float, float]]:
        noise = set(self.noise_sections)
        return [s for k, s in enumerate(self.true_segments.segments) if k not in noise]

    @property
    def vocabulary(self) -> list[str]:
        texts = {d.text for d in self.true_segments.descriptions} | {NOTHING}
        return sorted(texts)

    def truth_json(self) -> dict:
        return {
            "change_points_s": list(self.true_change_points.times),
            "instructions": [
                {"text": s.text, "start_s": a, "end_s": b}
                for s, (a, b) in zip(self.script.instructions, self.instruction_intervals)
            ],
        }


def _unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def synthesize(
    plan: SynthPlan,
    noise: float = 0.0,
    seed: int = 0,
    rate: float = DEFAULT_RATE,
) -> SyntheticDemo:
    """Sample a demonstration from ``plan`` at ``rate`` Hz.

    Positions get i.i.d. Gaussian noise of standard deviation ``noise``;
    dwell sections additionally carry a Brownian bridge with steps of
    ``noise / 3``. Values are rounded to the pose-file precision, so saving
    and reloading the track is lossless.
    """
    rng = np.random.default_rng(seed)
    pieces = [plan.waypoints[:1]]
    boundaries = [0]
    captions: list[str] = []
    noise_idx: list[int] = []
    jitter_spans: list[tuple[int, int]] = []
    pos = plan.waypoints[0]
    for r in range(len(plan.waypoints) - 1):
        n = max(2, int(round(plan.durations[r] * rate)))
        if r in plan.arcs:
            move = minimum_jerk_arc(pos, plan.waypoints[r + 1], plan.arcs[r], n)
        else:
            move = minimum_jerk(pos, plan.waypoints[r + 1], n)
        pieces.append(move[1:])
        boundaries.append(boundaries[-1] + n)
        captions.append(plan.captions[r])
        pos = move[-1]
        if r in plan.dwells:
            n = max(2, int(round(plan.dwells[r] * rate)))
            drift = minimum_jerk(pos, pos + plan.dwell_speed * (n / rate) * _unit(rng), n)
            pieces.append(drift[1:])
            jitter_spans.append((boundaries[-1], boundaries[-1] + n))
            boundaries.append(boundaries[-1] + n)
            noise_idx.append(len(captions))
            captions.append(NOTHING)
            pos = drift[-1]

    p = np.vstack(pieces)
    t = np.arange(len(p)) / rate
    if noise > 0:
        for a, b in jitter_spans:
            walk = np.vstack([np.zeros(3), np.cumsum(rng.normal(0, noise / 3, size=(b - a, 3)), axis=0)])
            frac = np.linspace(0, 1, b - a + 1)[:, None]
            p[a:b + 1] += walk - frac * walk[-1]
        p = p + rng.normal(0, noise, size=p.shape)

    t, p = quantize(t), quantize(p)
    track = PoseTrack(t, p, nominal_rate=rate)
    bt = [float(t[b]) for b in boundaries]
    segs = SegmentList.from_boundaries(bt)
    described = DescribedSegments(segs, tuple(Sentence.from_text(c) for c in captions))
    script = InstructionScript(tuple(Sentence.from_text(c) for c in plan.captions))
    return SyntheticDemo(track, ChangePointSet(tuple(bt[1:-1])), described, script, tuple(noise_idx))


def microwave_plan(dwell: float = 0.8) -> SynthPlan:
    """Open a hinged door, pause, put a cup inside, close the door.

    The door handle swings 90 degrees on a 0.3 m radius about a vertical
    hinge. The cup is released at the half-open door, from where the hand
    pushes the door shut along a lower arc.
    """
    hinge = np.array([0.0, 0.0, 0.8])
    r = 0.3
    up, down = np.array([0.0, 0.0, 0.05]), np.array([0.0, 0.0, -0.05])
    half = np.array([np.cos(np.pi / 4), np.sin(np.pi / 4), 0.0])
    waypoints = np.array([
        hinge + up + [r, 0.0, 0.0],
        hinge + up + [0.0, r, 0.0],
        hinge + down + r * half,
        hinge + down + [r, 0.0, 0.0],
    ])
    return SynthPlan(
        waypoints,
        ("open a microwave", "put a cup", "close the microwave"),
        (1.4, 1.2, 1.1),
        dwells={0: dwell},
        arcs={0: hinge + up, 2: hinge + down},
    )


def random_plan(
    rng: np.random.Generator,
    n_waypoints: int,
    n_dwells: int = 0,
    duration_range: tuple[float, float] = (1.0, 2.0),
    dwell_range: tuple[float, float] = (0.5, 1.0),
    speed_range: tuple[float, float] = (0.15, 0.3),
) -> SynthPlan:
    """Random reach sequence; each reach covers ``mean speed * duration`` meters."""
    if n_waypoints < 2:
        raise InvalidParameter("need at least 2 waypoints")
    if not 0 <= n_dwells <= n_waypoints - 1:
        raise InvalidParameter(f"at most {n_waypoints - 1} dwells for {n_waypoints} waypoints")
    durations = tuple(float(x) for x in rng.uniform(*duration_range, n_waypoints - 1))
    pts = [np.array([0.0, 0.0, 0.6]) + rng.uniform(-0.1, 0.1, 3)]
    for d in durations:
        pts.append(pts[-1] + _unit(rng) * rng.uniform(*speed_range) * d)
    idx = rng.choice(len(CAPTIONS), size=n_waypoints - 1, replace=n_waypoints - 1 > len(CAPTIONS))
    captions = tuple(CAPTIONS[i] for i in idx)
    dwell_at = sorted(int(r) for r in rng.choice(n_waypoints - 1, size=n_dwells, replace=False))
    dwells = {r: float(rng.uniform(*dwell_range)) for r in dwell_at}
    return SynthPlan(np.array(pts), captions, durations, dwells)


def mock_caption(
    demo: SyntheticDemo,
    segments: SegmentList,
    error_rate: float = 0.0,
    seed: int = 0,
) -> DescribedSegments:
    """Caption each segment with the true caption it overlaps most.

    With probability ``error_rate`` a caption is swapped for a different one
    drawn uniformly from the demo's captions plus ``"nothing"``.
    """
    if not 0.0 <= error_rate <= 1.0:
        raise InvalidParameter(f"error_rate must lie in [0, 1], got {error_rate}")
    return caption_by_overlap(
        demo.true_segments.segments,
        [d.text for d in demo.true_segments.descriptions],
        segments,
        error_rate,
        seed,
        vocabulary=demo.vocabulary,
    )


def caption_by_overlap(
    true_segments: Sequence[tuple[float, float]],
    true_captions: Sequence[str],
    segments: SegmentList,
    error_rate: float = 0.0,
    seed: int = 0,
    vocabulary: Sequence[str] | None = None,
) -> DescribedSegments:
    rng = np.random.default_rng(seed)
    if vocabulary is None:
        vocabulary = sorted(set(true_captions) | {NOTHING})
    out = []
    for a, b in segments:
        overlaps = [max(0.0, min(b, tb) - max(a, ta)) for ta, tb in true_segments]
        caption = true_captions[int(np.argmax(overlaps))]
        if rng.random() < error_rate:
            others = [c for c in vocabulary if c != caption]
            if others:
                caption = others[int(rng.integers(len(others)))]
        out.append(caption)
    return DescribedSegments(segments, tuple(out))


def toy_embeddings(words=None, dim: int = 16, seed: int = 7) -> EmbeddingTable:
    """Unit-norm random vectors for every word in the synthetic captions.

    Distances between unit vectors are at most 2, so the default
    ``c_nothing`` sits above every sentence distance.
    """
    if words is None:
        texts = CAPTIONS + microwave_plan().captions
        words = sorted({w for c in texts for w in tokenize(c)} | {NOTHING})
    rng = np.random.default_rng(seed)
    vec = rng.normal(size=(len(words), dim))
    vec /= np.linalg.norm(vec, axis=1, keepdims=True)
    return EmbeddingTable(tuple(words), vec)
