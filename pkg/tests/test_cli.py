import json

import jsonschema
import numpy as np
import pytest

from demosplit import schemas
from demosplit.cli import main
from demosplit.errors import InvalidParameter
from demosplit.pipeline import PipelineConfig, truth_sections
from demosplit.trajectory import load_pose_track

SAMPLE = 1 / 30.0


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert main(["synth", str(out), "--n-videos", "10", "--seed", "3"]) == 0
    return out


@pytest.fixture(scope="module")
def microwave(tmp_path_factory):
    out = tmp_path_factory.mktemp("microwave")
    assert main(["synth", str(out), "--n-videos", "1", "--scenario", "microwave", "--noise", "0.001"]) == 0
    return out


def run(capsys, *args):
    code = main([str(a) for a in args])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_json(path):
    return json.loads(path.read_text())


class TestSplit:
    def test_schema_and_truth(self, dataset, tmp_path, capsys):
        video = dataset / "video_000"
        out = tmp_path / "segs.json"
        code, _, _ = run(capsys, "split", video / "pose.csv", "--out", out, "--figures", tmp_path / "fig")
        assert code == 0
        segs = read_json(out)
        jsonschema.validate(segs, schemas.SEGMENTS)
        truth = read_json(video / "truth.json")["change_points_s"]
        cps = [s["start_s"] for s in segs[1:]]
        assert len(cps) == len(truth)
        np.testing.assert_allclose(cps, truth, atol=SAMPLE + 1e-8)
        assert (tmp_path / "fig" / "speed_profile.png").stat().st_size > 0

    def test_flag_spellings(self, dataset, capsys):
        pose = dataset / "video_001" / "pose.csv"
        a = run(capsys, "split", pose, "--min-separation", "0.4")[1]
        b = run(capsys, "split", pose, "--min_separation", "0.4")[1]
        assert a == b

    def test_config_file_and_override(self, dataset, tmp_path, capsys):
        pose = dataset / "video_001" / "pose.csv"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"window": 11}))
        from_file = run(capsys, "split", pose, "--config", cfg)[1]
        assert from_file == run(capsys, "split", pose, "--window", "11")[1]
        assert run(capsys, "split", pose, "--config", cfg, "--window", "5")[1] == run(capsys, "split", pose)[1]

    def test_bad_config_key(self, dataset, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"windw": 11}))
        code, _, err = run(capsys, "split", dataset / "video_001" / "pose.csv", "--config", cfg)
        assert code == 2 and "windw" in err

    def test_malformed_pose(self, tmp_path, capsys):
        pose = tmp_path / "pose.csv"
        pose.write_text("t,x,y,z\n0,0,0,0\n0,0,0,1\n0.1,0,0,2\n")
        code, _, err = run(capsys, "split", pose)
        assert code == 2 and "error" in err


class TestMatch:
    def mock_args(self, dataset, video):
        v = dataset / video
        return ["match", v / "pose.csv", v / "instructions.txt", "--caption-provider", "mock",
                "--truth", v / "truth.json", "--embeddings", dataset / "embeddings.txt"]

    @pytest.mark.parametrize("video", ["video_000", "video_004", "video_007"])
    def test_intervals_equal_truth(self, dataset, video, tmp_path, capsys):
        out = tmp_path / "report.json"
        code, _, _ = run(capsys, *self.mock_args(dataset, video), "--out", out)
        assert code == 0
        report = read_json(out)
        jsonschema.validate(report, schemas.PIPELINE_REPORT)
        truth = read_json(dataset / video / "truth.json")["instructions"]
        got = report["match"]["instructions"]
        assert [g["text"] for g in got] == [t["text"] for t in truth]
        for g, t in zip(got, truth):
            assert g["start_s"] == pytest.approx(t["start_s"], abs=SAMPLE + 1e-8)
            assert g["end_s"] == pytest.approx(t["end_s"], abs=SAMPLE + 1e-8)

    def test_file_provider(self, dataset, tmp_path, capsys):
        v = dataset / "video_002"
        truth = read_json(v / "truth.json")
        spans, texts = truth_sections(truth, load_pose_track(v / "pose.csv"))
        captions = tmp_path / "captions.json"
        captions.write_text(json.dumps([{"start_s": a, "end_s": b, "text": c} for (a, b), c in zip(spans, texts)]))
        code, out, _ = run(capsys, "match", v / "pose.csv", v / "instructions.txt", "--captions", captions,
                           "--embeddings", dataset / "embeddings.txt")
        assert code == 0
        mock = run(capsys, *self.mock_args(dataset, "video_002"))[1]
        assert json.loads(out)["match"] == json.loads(mock)["match"]

    def test_infeasible(self, dataset, tmp_path, capsys):
        v = dataset / "video_000"
        many = tmp_path / "many.txt"
        many.write_text("grasp a cup\n" * 40)
        args = self.mock_args(dataset, "video_000")
        args[2] = many
        code, _, err = run(capsys, *args)
        assert code == 2
        assert "40 instructions (N)" in err and "segments (M)" in err

    def test_missing_embeddings(self, dataset, tmp_path, capsys):
        args = self.mock_args(dataset, "video_000")
        args[-1] = tmp_path / "nope.txt"
        code, _, err = run(capsys, *args)
        assert code == 2 and "nope.txt" in err

    def test_microwave_scene(self, microwave, tmp_path, capsys):
        out = tmp_path / "report.json"
        code, _, _ = run(capsys, *self.mock_args(microwave, "video_000"), "--out", out,
                         "--figures", tmp_path / "fig")
        assert code == 0
        report = read_json(out)
        texts = [m["text"] for m in report["match"]["instructions"]]
        assert texts == ["open a microwave", "put a cup", "close the microwave"]
        # the dwell between opening and putting is the only skipped section
        truth = read_json(microwave / "video_000" / "truth.json")
        gap = (truth["instructions"][0]["end_s"], truth["instructions"][1]["start_s"])
        skipped = [report["segments"][k] for k in report["match"]["skipped_segments"]]
        assert skipped and all(gap[0] - 1e-9 <= s["start_s"] and s["end_s"] <= gap[1] + 1e-9 for s in skipped)
        models = {a["text"]: a["model"] for a in report["articulations"]}
        assert models["open a microwave"]["kind"] == "revolute"
        assert models["open a microwave"]["radius"] == pytest.approx(0.3, abs=0.01)
        assert "put a cup" not in models
        assert (tmp_path / "fig" / "distance_matrix.png").is_file()
        assert (tmp_path / "fig" / "articulation_0.png").is_file()


class TestFit:
    def test_door(self, microwave, tmp_path, capsys):
        truth = read_json(microwave / "video_000" / "truth.json")["instructions"][0]
        code, out, _ = run(capsys, "fit", microwave / "video_000" / "pose.csv",
                           "--start", truth["start_s"], "--end", truth["end_s"], "--figures", tmp_path)
        assert code == 0
        model = json.loads(out)
        jsonschema.validate(model, schemas.ARTICULATION)
        assert model["kind"] == "revolute"
        assert model["swept_angle_rad"] == pytest.approx(np.pi / 2, abs=0.05)

    def test_cup(self, microwave, capsys):
        truth = read_json(microwave / "video_000" / "truth.json")["instructions"][1]
        out = run(capsys, "fit", microwave / "video_000" / "pose.csv",
                  "--start", truth["start_s"], "--end", truth["end_s"])[1]
        assert json.loads(out)["kind"] == "prismatic"


class TestEval:
    def test_split_recall(self, dataset, tmp_path, capsys):
        out = tmp_path / "split.json"
        assert run(capsys, "eval-split", dataset, "--out", out, "--figures", tmp_path)[0] == 0
        report = read_json(out)
        jsonschema.validate(report, schemas.SPLIT_EVAL)
        assert len(report["videos"]) == 10
        assert report["velocity"]["mean_recall"] == 1.0
        assert report["velocity"]["mean_false_positive_rate"] <= 0.1
        assert (tmp_path / "recall_vs_fpr.png").is_file()

    def test_match_velocity_beats_uniform(self, dataset, tmp_path, capsys):
        out = tmp_path / "match.json"
        code, _, _ = run(capsys, "eval-match", dataset, "--out", out, "--caption-provider", "mock",
                         "--error-rate", "0.2", "--embeddings", dataset / "embeddings.txt", "--figures", tmp_path)
        assert code == 0
        report = read_json(out)
        jsonschema.validate(report, schemas.MATCH_EVAL)
        for v in report["videos"]:
            jsonschema.validate(v["velocity"], schemas.MATCH_SCORE)
        assert report["velocity"]["mean_ap_at"]["0.95"] > report["uniform"]["mean_ap_at"]["0.95"]
        assert (tmp_path / "ap.png").is_file()

    def test_empty_dataset(self, tmp_path, capsys):
        code, _, err = run(capsys, "eval-split", tmp_path)
        assert code == 2 and "no videos" in err

    def test_rerun_identical(self, dataset, tmp_path, capsys):
        args = ["eval-match", dataset, "--caption-provider", "mock", "--error-rate", "0.3",
                "--seed", "4", "--embeddings", dataset / "embeddings.txt"]
        assert run(capsys, *args)[1] == run(capsys, *args)[1]


class TestSynth:
    def test_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        out_a = run(capsys, "synth", a, "--n-videos", "3", "--seed", "9", "--noise", "0.002")[1]
        out_b = run(capsys, "synth", b, "--n-videos", "3", "--seed", "9", "--noise", "0.002")[1]
        assert out_a == out_b
        files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
        assert len(files) == 3 * 3 + 1
        for f in files:
            assert (a / f).read_bytes() == (b / f).read_bytes()
        for f in a.rglob("truth.json"):
            jsonschema.validate(read_json(f), schemas.GROUND_TRUTH)


class TestConfig:
    def test_defaults(self):
        cfg = PipelineConfig()
        assert (cfg.window, cfg.c_dist, cfg.c_group, cfg.c_skip, cfg.c_nothing) == (5, 1.0, 0.5, 0.5, 2.0)
        assert PipelineConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize("bad", [{"window": 4}, {"error_rate": 1.5}, {"group_cost": "sum"}, {"c_skip": -1.0}])
    def test_invalid(self, bad):
        with pytest.raises(InvalidParameter):
            PipelineConfig.from_dict(bad)
