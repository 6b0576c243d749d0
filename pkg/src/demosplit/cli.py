"""Command-line entry point: ``demosplit <subcommand> ...``.

Every PipelineConfig field can be set in a JSON file passed with
``--config`` and overridden by a flag of the same name (``--c-skip`` or
``--c_skip``). Reports are JSON, written to ``--out`` or stdout; with
``--figures DIR`` the matching PNG figures are written next to them.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import typing
from pathlib import Path

from . import figures, geomfit, pipeline, splitter
from .errors import DemosplitError
from .trajectory import load_pose_track

log = logging.getLogger("demosplit")

_HELP = {
    "window": "moving-average window in samples (odd)",
    "min_separation": "drop minima closer than this many seconds to a deeper one",
    "c_dist": "weight of the first run member's distance",
    "c_group": "weight of the remaining run members' grouping cost",
    "c_skip": "cost per skipped segment",
    "c_nothing": "distance assigned to 'nothing' captions",
    "group_cost": "to_instruction | chain",
    "iou_thresholds": "IoU thresholds for AP",
    "margin": "change-point tolerance in seconds",
    "embeddings": "word-vector text file",
    "caption_provider": "file | mock",
    "error_rate": "mock captioner error probability",
    "seed": "random seed",
    "articulation_keywords": "instructions containing any of these words get an articulation fit",
    "uniform_period": "period of the uniform-split baseline in seconds",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline configuration")
    g.add_argument("--config", help="JSON file with PipelineConfig fields")
    hints = typing.get_type_hints(pipeline.PipelineConfig)
    for f in dataclasses.fields(pipeline.PipelineConfig):
        names = [f"--{f.name.replace('_', '-')}"]
        if "_" in f.name:
            names.append(f"--{f.name}")
        kw: dict = {"dest": f.name, "default": argparse.SUPPRESS, "help": _HELP.get(f.name)}
        hint = hints[f.name]
        args = typing.get_args(hint)
        if hint is bool:
            kw["action"] = argparse.BooleanOptionalAction
        elif typing.get_origin(hint) is tuple:
            kw.update(nargs="+", type=args[0])
        elif float in args:
            kw["type"] = float
        elif hint in (int, float):
            kw["type"] = hint
        g.add_argument(*names, **kw)


def _config(ns: argparse.Namespace) -> pipeline.PipelineConfig:
    base = pipeline.PipelineConfig.from_file(ns.config) if getattr(ns, "config", None) else pipeline.PipelineConfig()
    names = {f.name for f in dataclasses.fields(pipeline.PipelineConfig)}
    return base.replace(**{k: v for k, v in vars(ns).items() if k in names})


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_split(ns) -> int:
    cfg = _config(ns)
    track = load_pose_track(ns.pose)
    segs, cps, prof = splitter.split_with_profile(track, cfg.window, cfg.min_separation)
    _emit(segs.to_json(), ns.out)
    if ns.figures:
        truth = pipeline.load_truth(ns.truth)["change_points_s"] if ns.truth else None
        figures.speed_profile(prof, cps.times, Path(ns.figures) / "speed_profile.png", truth)
    return 0


def _provider(ns, cfg) -> pipeline.CaptionProvider:
    if cfg.caption_provider == "mock":
        if not ns.truth:
            raise DemosplitError("the mock caption provider needs --truth")
        return pipeline.CaptionProvider.mock(pipeline.load_truth(ns.truth), cfg.error_rate, cfg.seed)
    if not ns.captions:
        raise DemosplitError("the file caption provider needs --captions")
    return pipeline.CaptionProvider.from_file(ns.captions)


def cmd_match(ns) -> int:
    cfg = _config(ns)
    table = pipeline.load_table(cfg)
    res = pipeline.run_pipeline(ns.pose, ns.instructions, cfg, _provider(ns, cfg), table)
    _emit(res.report, ns.out)
    if ns.figures:
        fig_dir = Path(ns.figures)
        figures.speed_profile(res.profile, res.change_points.times, fig_dir / "speed_profile.png")
        figures.distance_matrix(
            res.distances,
            [d.text for d in res.described.descriptions],
            [s.text for s in res.script.instructions],
            res.assignment.ranges,
            fig_dir / "distance_matrix.png",
        )
        for m in res.assignment.matches:
            if not pipeline.has_keyword(m.text, cfg.articulation_keywords):
                continue
            pts = res.track.window(m.start_s, m.end_s).p
            figures.articulation(pts, geomfit.classify_articulation(pts), fig_dir / f"articulation_{m.index}.png")
    return 0


def cmd_fit(ns) -> int:
    track = load_pose_track(ns.pose)
    start = track.start if ns.start is None else ns.start
    end = track.end if ns.end is None else ns.end
    pts = track.window(start, end).p
    model = geomfit.classify_articulation(pts)
    _emit(model.to_json(), ns.out)
    if ns.figures:
        figures.articulation(pts, model, Path(ns.figures) / "articulation.png")
    return 0


def cmd_eval_split(ns) -> int:
    cfg = _config(ns)
    report = pipeline.eval_split(ns.dataset, cfg)
    _emit(report, ns.out)
    if ns.figures:
        figures.recall_vs_fpr(report["sweep"], Path(ns.figures) / "recall_vs_fpr.png")
    return 0


def cmd_eval_match(ns) -> int:
    cfg = _config(ns)
    report = pipeline.eval_match(ns.dataset, cfg)
    _emit(report, ns.out)
    if ns.figures:
        figures.ap_bars(report, Path(ns.figures) / "ap.png")
    return 0


def cmd_synth(ns) -> int:
    cfg = _config(ns)
    demos = pipeline.synth_dataset(
        ns.out_dir,
        n_videos=ns.n_videos,
        seed=cfg.seed,
        noise=ns.noise,
        waypoints=(ns.min_waypoints, ns.max_waypoints),
        dwells=ns.dwells,
        scenario=ns.scenario,
    )
    summary = {
        "videos": [
            {
                "name": f"video_{k:03d}",
                "n_samples": len(d.track),
                "n_change_points": len(d.true_change_points),
                "n_instructions": len(d.script),
                "noise_sections": list(d.noise_sections),
            }
            for k, d in enumerate(demos)
        ]
    }
    _emit(summary, None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="demosplit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="segment a pose track at hand-speed minima")
    p.add_argument("pose")
    p.add_argument("--truth", help="ground-truth JSON, only drawn in the figure")
    p.add_argument("--out")
    p.add_argument("--figures")
    _add_config_flags(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("match", help="split, caption and match against verbal instructions")
    p.add_argument("pose")
    p.add_argument("instructions", help="text file, one instruction per line")
    p.add_argument("--captions", help="caption JSON for the file provider")
    p.add_argument("--truth", help="ground-truth JSON for the mock provider")
    p.add_argument("--out")
    p.add_argument("--figures")
    _add_config_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("fit", help="fit a prismatic or revolute model to a hand path")
    p.add_argument("pose")
    p.add_argument("--start", type=float)
    p.add_argument("--end", type=float)
    p.add_argument("--out")
    p.add_argument("--figures")
    p.set_defaults(func=cmd_fit)

    for name, func, helptext in (
        ("eval-split", cmd_eval_split, "change-point recall / false positive rate over a dataset"),
        ("eval-match", cmd_eval_match, "AP of matched sections over a dataset"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("dataset")
        p.add_argument("--out")
        p.add_argument("--figures")
        _add_config_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("synth", help="write a synthetic dataset and toy embeddings")
    p.add_argument("out_dir")
    p.add_argument("--n-videos", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.0, help="position noise std in meters")
    p.add_argument("--min-waypoints", type=int, default=3)
    p.add_argument("--max-waypoints", type=int, default=6)
    p.add_argument("--dwells", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--scenario", choices=("random", "microwave"), default="random")
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return ns.func(ns)
    except (DemosplitError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"demosplit {ns.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
