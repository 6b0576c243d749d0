"""Batch orchestration: split, caption, match, fit and evaluate.

A video directory holds ``pose.csv`` (or ``pose.jsonl``), ``instructions.txt``
(one instruction per line) and ``truth.json``; captions for the ``file``
provider live in ``captions.json``.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import evalkit, geomfit, matcher, splitter
from .errors import Infeasible, InvalidInput, InvalidParameter, MalformedInput
from .lexdist import NOTHING, DistanceConfig, EmbeddingTable, load_embeddings, tokenize
from .trajectory import PoseTrack, load_pose_track, save_pose_track

log = logging.getLogger(__name__)

POSE_NAMES = ("pose.csv", "pose.jsonl")


@dataclass(frozen=True)
class PipelineConfig:
    window: int = 5
    min_separation: float | None = None
    c_dist: float = 1.0
    c_group: float = 0.5
    c_skip: float = 0.5
    c_nothing: float = 2.0
    group_cost: str = "to_instruction"
    oov_policy: str = "drop"
    remove_stop_words: bool = False
    normalize_embeddings: bool = False
    iou_thresholds: tuple[float, ...] = evalkit.DEFAULT_THRESHOLDS
    margin: float = evalkit.DEFAULT_MARGIN
    embeddings: str | None = None
    caption_provider: str = "file"
    error_rate: float = 0.0
    seed: int = 0
    articulation_keywords: tuple[str, ...] = ("open", "close", "pull", "turn")
    uniform_period: float = 0.5
    baseline: bool = True
    sweep_windows: tuple[int, ...] = (3, 5, 7, 9, 11)
    sweep_periods: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise InvalidParameter(f"window must be an odd positive integer, got {self.window}")
        if self.min_separation is not None and self.min_separation < 0:
            raise InvalidParameter("min_separation must be >= 0")
        if self.caption_provider not in ("file", "mock"):
            raise InvalidParameter(f"caption_provider must be 'file' or 'mock', got {self.caption_provider!r}")
        if not 0.0 <= self.error_rate <= 1.0:
            raise InvalidParameter("error_rate must lie in [0, 1]")
        if not self.margin > 0 or not self.uniform_period > 0:
            raise InvalidParameter("margin and uniform_period must be positive")
        if any(not 0 < t <= 1 for t in self.iou_thresholds):
            raise InvalidParameter("IoU thresholds must lie in (0, 1]")
        for name in ("iou_thresholds", "articulation_keywords", "sweep_windows", "sweep_periods"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        # surface invalid coefficients early
        self.match_costs
        self.distance_config

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PipelineConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise InvalidParameter(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> PipelineConfig:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def replace(self, **changes) -> PipelineConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}

    @property
    def match_costs(self) -> matcher.MatchCosts:
        return matcher.MatchCosts(self.c_dist, self.c_group, self.c_skip, self.group_cost)

    @property
    def distance_config(self) -> DistanceConfig:
        return DistanceConfig(
            self.c_nothing, self.oov_policy, self.remove_stop_words, self.normalize_embeddings
        )


@dataclass(frozen=True)
class CaptionProvider:
    """Source of motion descriptions for a segmentation.

    ``file``: captions with their own time spans, assigned to each segment by
    maximal overlap. ``mock``: the ground-truth sections of ``truth`` with
    random caption errors.
    """

    kind: str
    captions: tuple[tuple[float, float, str], ...] = ()
    truth: dict | None = None
    error_rate: float = 0.0
    seed: int = 0

    @classmethod
    def from_file(cls, path: str | Path) -> CaptionProvider:
        return cls("file", captions=tuple(load_captions(path)))

    @classmethod
    def mock(cls, truth: dict, error_rate: float = 0.0, seed: int = 0) -> CaptionProvider:
        return cls("mock", truth=truth, error_rate=error_rate, seed=seed)

    def describe(self, segments: splitter.SegmentList, track: PoseTrack) -> matcher.DescribedSegments:
        if self.kind == "file":
            spans = [(a, b) for a, b, _ in self.captions]
            texts = [c for _, _, c in self.captions]
            for k, (a, b) in enumerate(segments):
                if not any(min(b, tb) - max(a, ta) > 0 for ta, tb in spans):
                    raise MalformedInput(f"no caption overlaps segment {k} [{a:.3f}, {b:.3f}]")
            return evalkit.caption_by_overlap(spans, texts, segments)
        true_segs, captions = truth_sections(self.truth, track)
        return evalkit.caption_by_overlap(
            true_segs, captions, segments, self.error_rate, self.seed,
            vocabulary=sorted(set(captions) | {NOTHING}),
        )


def truth_sections(truth: dict, track: PoseTrack) -> tuple[list[tuple[float, float]], list[str]]:
    """True sections of a video and their captions, ``"nothing"`` between instructions."""
    bounds = [track.start, *truth["change_points_s"], track.end]
    spans = list(zip(bounds[:-1], bounds[1:]))
    captions = []
    for a, b in spans:
        text = NOTHING
        for ins in truth["instructions"]:
            inter = min(b, ins["end_s"]) - max(a, ins["start_s"])
            if inter > 0.5 * (b - a):
                text = ins["text"]
                break
        captions.append(text)
    return spans, captions


def load_instructions(path: str | Path) -> matcher.InstructionScript:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return matcher.InstructionScript.from_lines(lines)


def _load_json(path: str | Path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: invalid JSON ({exc.msg})") from exc
    return data


def load_truth(path: str | Path) -> dict:
    data = _load_json(path)
    if not isinstance(data, dict) or "change_points_s" not in data or "instructions" not in data:
        raise MalformedInput(f"{path}: ground truth needs change_points_s and instructions")
    for ins in data["instructions"]:
        if not {"text", "start_s", "end_s"} <= set(ins):
            raise MalformedInput(f"{path}: instruction entries need text, start_s, end_s")
    return data


def load_captions(path: str | Path) -> list[tuple[float, float, str]]:
    data = _load_json(path)
    try:
        return [(float(d["start_s"]), float(d["end_s"]), str(d["text"])) for d in data]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"{path}: captions must be objects with start_s, end_s, text") from exc


def load_table(cfg: PipelineConfig) -> EmbeddingTable:
    if not cfg.embeddings:
        raise InvalidParameter("an embedding file is required (--embeddings)")
    path = Path(cfg.embeddings)
    if not path.is_file():
        raise FileNotFoundError(f"embedding file not found: {path}")
    return load_embeddings(path)


def has_keyword(text: str, keywords: Sequence[str]) -> bool:
    toks = set(tokenize(text))
    return any(k.lower() in toks for k in keywords)


def match_video(
    track: PoseTrack,
    script: matcher.InstructionScript,
    segments: splitter.SegmentList,
    provider: CaptionProvider,
    table: EmbeddingTable,
    cfg: PipelineConfig,
) -> tuple[matcher.DescribedSegments, np.ndarray, matcher.MatchAssignment]:
    if len(segments) < len(script):
        raise Infeasible(len(segments), len(script))
    described = provider.describe(segments, track)
    dcfg = cfg.distance_config
    dist = matcher.build_distance_matrix(described, script, table, dcfg)
    chain = matcher.caption_chain_distances(described, table, dcfg) if cfg.group_cost == "chain" else None
    return described, dist, matcher.match(described, script, dist, cfg.match_costs, chain)


def articulations(track: PoseTrack, assignment: matcher.MatchAssignment, keywords: Sequence[str]) -> list[dict]:
    out = []
    for m in assignment.matches:
        if not has_keyword(m.text, keywords):
            continue
        pts = track.window(m.start_s, m.end_s).p
        model = geomfit.classify_articulation(pts)
        out.append({"instruction_index": m.index, "text": m.text, "model": model.to_json()})
    return out


@dataclass
class PipelineResult:
    report: dict
    segments: splitter.SegmentList
    change_points: splitter.ChangePointSet
    profile: Any
    described: matcher.DescribedSegments
    distances: np.ndarray
    assignment: matcher.MatchAssignment
    track: PoseTrack
    script: matcher.InstructionScript


def run_pipeline(
    pose_file: str | Path,
    instructions_file: str | Path,
    cfg: PipelineConfig,
    provider: CaptionProvider,
    table: EmbeddingTable | None = None,
) -> PipelineResult:
    """Split, caption, match, and fit articulation models for keyword instructions."""
    track = load_pose_track(pose_file)
    script = load_instructions(instructions_file)
    if table is None:
        table = load_table(cfg)
    segs, cps, prof = splitter.split_with_profile(track, cfg.window, cfg.min_separation)
    described, dist, assignment = match_video(track, script, segs, provider, table, cfg)
    report = {
        "segments": segs.to_json(),
        "match": matcher.explain(assignment),
        "articulations": articulations(track, assignment, cfg.articulation_keywords),
    }
    return PipelineResult(report, segs, cps, prof, described, dist, assignment, track, script)


# evaluation -------------------------------------------------------------------


@dataclass(frozen=True)
class Video:
    name: str
    pose: Path
    truth: Path
    instructions: Path
    captions: Path | None


def list_videos(dataset_dir: str | Path) -> list[Video]:
    root = Path(dataset_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    videos = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        pose = next((sub / n for n in POSE_NAMES if (sub / n).is_file()), None)
        if pose is None:
            continue
        cap = sub / "captions.json"
        videos.append(
            Video(sub.name, pose, sub / "truth.json", sub / "instructions.txt", cap if cap.is_file() else None)
        )
    if not videos:
        raise InvalidInput(f"no videos found in {root}")
    return videos


def _mean_cp(scores: list[evalkit.ChangePointScore]) -> dict:
    n_cr = sum(s.n_cr for s in scores)
    n_cp = sum(s.n_cp for s in scores)
    n_al = sum(s.n_al for s in scores)
    pooled = evalkit.ChangePointScore(n_cr / n_cp, (n_al - n_cr) / n_al if n_al else 0.0, n_cr, n_cp, n_al)
    return {
        "mean_recall": float(np.mean([s.recall for s in scores])),
        "mean_false_positive_rate": float(np.mean([s.false_positive_rate for s in scores])),
        "pooled": pooled.to_json(),
    }


def eval_split(dataset_dir: str | Path, cfg: PipelineConfig) -> dict:
    """Change-point recall / false-positive rate, with uniform baseline and a parameter sweep."""
    per_video, vel, uni = [], [], []
    sweep_scores: dict[tuple[str, float], list[evalkit.ChangePointScore]] = {}
    for video in list_videos(dataset_dir):
        track = load_pose_track(video.pose)
        truth = load_truth(video.truth)["change_points_s"]
        if not truth:
            log.warning("%s has no true change points; skipped", video.name)
            continue
        segs = splitter.split(track, cfg.window, cfg.min_separation)
        v = evalkit.score_change_points(splitter.change_points_of(segs), truth, cfg.margin)
        entry = {"name": video.name, "velocity": v.to_json()}
        vel.append(v)
        if cfg.baseline:
            u_cps = splitter.uniform_boundaries(track.start, track.end, cfg.uniform_period)
            u = evalkit.score_change_points(u_cps, truth, cfg.margin)
            entry["uniform"] = u.to_json()
            uni.append(u)
        per_video.append(entry)
        for w in cfg.sweep_windows:
            if w <= len(track):
                cps = splitter.change_points_of(splitter.split(track, w, cfg.min_separation))
                sweep_scores.setdefault(("velocity", w), []).append(
                    evalkit.score_change_points(cps, truth, cfg.margin)
                )
        for period in cfg.sweep_periods if cfg.baseline else ():
            cps = splitter.uniform_boundaries(track.start, track.end, period)
            sweep_scores.setdefault(("uniform", period), []).append(
                evalkit.score_change_points(cps, truth, cfg.margin)
            )
    if not per_video:
        raise InvalidInput("no video with true change points to evaluate")
    report = {"videos": per_video, "velocity": _mean_cp(vel)}
    if uni:
        report["uniform"] = _mean_cp(uni)
    report["sweep"] = [
        {
            "method": method,
            "parameter": param,
            "mean_recall": float(np.mean([s.recall for s in scores])),
            "mean_false_positive_rate": float(np.mean([s.false_positive_rate for s in scores])),
        }
        for (method, param), scores in sweep_scores.items()
    ]
    return report


def _provider_for(video: Video, index: int, cfg: PipelineConfig, truth: dict) -> CaptionProvider:
    if cfg.caption_provider == "mock":
        return CaptionProvider.mock(truth, cfg.error_rate, cfg.seed + index)
    if video.captions is None:
        raise FileNotFoundError(f"{video.name}: captions.json required for the file caption provider")
    return CaptionProvider.from_file(video.captions)


def _score_or_zero(
    track, script, segs, provider, table, cfg, intervals
) -> tuple[evalkit.MatchScore, bool]:
    try:
        _, _, assignment = match_video(track, script, segs, provider, table, cfg)
    except Infeasible:
        zeros = tuple(0.0 for _ in intervals)
        return evalkit.MatchScore({float(t): 0.0 for t in cfg.iou_thresholds}, zeros), False
    return evalkit.score_matching(assignment, intervals, cfg.iou_thresholds), True


def _mean_ap(scores: list[evalkit.MatchScore], thresholds) -> dict:
    return {
        "mean_ap_at": {f"{t:g}": float(np.mean([s.ap_at[float(t)] for s in scores])) for t in thresholds}
    }


def eval_match(dataset_dir: str | Path, cfg: PipelineConfig, table: EmbeddingTable | None = None) -> dict:
    """Per-video and mean AP at each IoU threshold for velocity and uniform splitting."""
    if table is None:
        table = load_table(cfg)
    per_video, vel, uni = [], [], []
    for k, video in enumerate(list_videos(dataset_dir)):
        track = load_pose_track(video.pose)
        truth = load_truth(video.truth)
        script = load_instructions(video.instructions)
        intervals = [(i["start_s"], i["end_s"]) for i in truth["instructions"]]
        if len(intervals) != len(script):
            raise InvalidInput(f"{video.name}: truth has {len(intervals)} instructions, script has {len(script)}")
        provider = _provider_for(video, k, cfg, truth)
        segs = splitter.split(track, cfg.window, cfg.min_separation)
        v, ok = _score_or_zero(track, script, segs, provider, table, cfg, intervals)
        entry: dict[str, Any] = {"name": video.name, "velocity": v.to_json()}
        if not ok:
            entry["velocity_infeasible"] = True
        vel.append(v)
        if cfg.baseline:
            useg = splitter.uniform_split(track, cfg.uniform_period)
            u, ok = _score_or_zero(track, script, useg, provider, table, cfg, intervals)
            entry["uniform"] = u.to_json()
            if not ok:
                entry["uniform_infeasible"] = True
            uni.append(u)
        per_video.append(entry)
    report = {"videos": per_video, "velocity": _mean_ap(vel, cfg.iou_thresholds)}
    if uni:
        report["uniform"] = _mean_ap(uni, cfg.iou_thresholds)
    return report


def run_eval(dataset_dir: str | Path, cfg: PipelineConfig, table: EmbeddingTable | None = None) -> dict:
    return {"split": eval_split(dataset_dir, cfg), "match": eval_match(dataset_dir, cfg, table)}


# synthetic datasets -----------------------------------------------------------


def write_video(directory: str | Path, demo: evalkit.SyntheticDemo) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_pose_track(demo.track, d / "pose.csv")
    (d / "truth.json").write_text(json.dumps(demo.truth_json(), indent=2) + "\n", encoding="utf-8")
    (d / "instructions.txt").write_text(
        "".join(s.text + "\n" for s in demo.script.instructions), encoding="utf-8"
    )


def synth_dataset(
    out_dir: str | Path,
    n_videos: int = 10,
    seed: int = 0,
    noise: float = 0.0,
    waypoints: tuple[int, int] = (3, 6),
    dwells: bool = True,
    scenario: str = "random",
) -> list[evalkit.SyntheticDemo]:
    """Write ``n_videos`` synthetic videos plus ``embeddings.txt`` under ``out_dir``."""
    if n_videos < 1:
        raise InvalidParameter("n_videos must be >= 1")
    lo, hi = waypoints
    if not 2 <= lo <= hi:
        raise InvalidParameter("waypoint range must satisfy 2 <= min <= max")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    demos = []
    for k in range(n_videos):
        rng = np.random.default_rng(seed + k)
        if scenario == "microwave":
            plan = evalkit.microwave_plan()
        elif scenario == "random":
            n_wp = int(rng.integers(lo, hi + 1))
            n_dw = int(rng.integers(1, n_wp)) if dwells else 0
            plan = evalkit.random_plan(rng, n_wp, n_dw)
        else:
            raise InvalidParameter(f"unknown scenario {scenario!r}")
        demo = evalkit.synthesize(plan, noise=noise, seed=seed + k)
        write_video(out / f"video_{k:03d}", demo)
        demos.append(demo)
    (out / "embeddings.txt").write_text(evalkit.toy_embeddings().to_text(), encoding="utf-8")
    return demos
