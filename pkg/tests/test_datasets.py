"""Scene file round trips, corruption and the synthetic generator."""
import json

import numpy as np
import pytest

from gaptraj.datasets import (
    CorruptionSpec,
    SynthSpec,
    corrupt,
    generate_synthetic,
    load_scenes,
    save_scenes,
)
from gaptraj.errors import DataError
from gaptraj.scene import ObservedPosition, Scene, Track


def make_scene(sid="s0"):
    tracks = {
        "a": Track("a", 0, tuple(ObservedPosition.observed(0.1 * i, 0.0) for i in range(10))),
        "b": Track("b", 2, (
            ObservedPosition.observed(1.0, 1.0),
            ObservedPosition.unobserved(),
            ObservedPosition.observed(1.2, 1.0),
        )),
    }
    return Scene(scene_id=sid, tracks=tracks)


class TestLoadSave:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "scenes.jsonl"
        scenes = [make_scene("s0"), make_scene("s1")]
        save_scenes(scenes, path)
        back = load_scenes(path)
        assert back == scenes

    def test_two_scene_ids_partition(self, tmp_path):
        path = tmp_path / "scenes.jsonl"
        save_scenes([make_scene("s0"), make_scene("s1")], path)
        assert [s.scene_id for s in load_scenes(path)] == ["s0", "s1"]

    def test_unobserved_nulls_preserved(self, tmp_path):
        path = tmp_path / "scenes.jsonl"
        save_scenes([make_scene()], path)
        text = path.read_text()
        assert '"x": null' in text
        back = load_scenes(path)[0]
        assert not back.tracks["b"].at(3).is_observed

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        save_scenes([], path)
        assert path.read_text() == ""
        assert load_scenes(path) == []

    def test_half_null_record_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        rec = {"scene_id": "s", "frame": 0, "pedestrian_id": "p", "x": None, "y": 3.0}
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(DataError, match="line 1"):
            load_scenes(path)

    def test_non_monotonic_frames_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        lines = [
            {"scene_id": "s", "frame": 5, "pedestrian_id": "p", "x": 0.0, "y": 0.0},
            {"scene_id": "s", "frame": 4, "pedestrian_id": "p", "x": 0.1, "y": 0.0},
        ]
        path.write_text("\n".join(json.dumps(r) for r in lines) + "\n")
        with pytest.raises(DataError, match="line 2.*non-monotonic|non-monotonic.*line 2"):
            load_scenes(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"scene_id": "s", "frame": 0\n')
        with pytest.raises(DataError, match="line 1"):
            load_scenes(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_scenes(tmp_path / "nope.jsonl")

    def test_config_header_lines_are_skipped(self, tmp_path):
        path = tmp_path / "scenes.jsonl"
        save_scenes([make_scene()], path)
        body = path.read_text()
        path.write_text('{"_config": {"seed": 1}}\n' + body)
        assert load_scenes(path) == [make_scene()]

    def test_gap_in_records_becomes_unobserved(self, tmp_path):
        # a frame missing inside the lifetime is an implicit occlusion
        path = tmp_path / "gap.jsonl"
        lines = [
            {"scene_id": "s", "frame": 0, "pedestrian_id": "p", "x": 0.0, "y": 0.0},
            {"scene_id": "s", "frame": 2, "pedestrian_id": "p", "x": 0.2, "y": 0.0},
        ]
        path.write_text("\n".join(json.dumps(r) for r in lines) + "\n")
        track = load_scenes(path)[0].tracks["p"]
        assert track.first_frame == 0 and track.last_frame == 2
        assert not track.at(1).is_observed


def count_observed(scenes):
    return sum(
        sum(1 for p in t.positions if p.is_observed)
        for s in scenes for t in s.tracks.values()
    )


class TestCorrupt:
    def test_zero_fraction_is_identity(self):
        scenes = [make_scene()]
        assert corrupt(scenes, CorruptionSpec(drop_fraction=0.0, seed=1)) == scenes

    def test_exact_flip_count(self):
        rng = np.random.default_rng(3)
        tracks = {
            f"p{i}": Track(f"p{i}", 0, tuple(
                ObservedPosition.observed(float(rng.normal()), float(rng.normal()))
                for _ in range(100)
            ))
            for i in range(10)
        }
        scenes = [Scene("big", tracks)]
        assert count_observed(scenes) == 1000
        out = corrupt(scenes, CorruptionSpec(drop_fraction=0.10, seed=5))
        # oracle: count flipped entries over the output
        assert count_observed(out) == 1000 - round(0.10 * 1000)

    def test_seed_determinism(self):
        scenes = [make_scene()]
        a = corrupt(scenes, CorruptionSpec(drop_fraction=0.3, seed=9))
        b = corrupt(scenes, CorruptionSpec(drop_fraction=0.3, seed=9))
        assert a == b

    def test_label_view_untouched(self):
        scenes = [make_scene()]
        before = [Scene(s.scene_id, dict(s.tracks), s.frame_rate_hz) for s in scenes]
        corrupt(scenes, CorruptionSpec(drop_fraction=0.5, seed=2))
        assert scenes == before

    def test_only_observed_entries_flip(self):
        scenes = [make_scene()]
        out = corrupt(scenes, CorruptionSpec(drop_fraction=1.0, seed=0))
        assert count_observed(out) == 0
        # unobserved stay unobserved, lifetimes unchanged
        assert out[0].tracks["b"].first_frame == 2
        assert len(out[0].tracks["b"].positions) == 3

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            CorruptionSpec(drop_fraction=1.5)


class TestSynthetic:
    def test_standing_has_zero_displacement(self):
        sc = generate_synthetic(SynthSpec(n_pedestrians=3, n_frames=12, walker_model="standing", seed=4))
        for track in sc.tracks.values():
            pts = np.array([[p.x, p.y] for p in track.positions])
            assert np.allclose(np.diff(pts, axis=0), 0.0)

    def test_waypoint_speed_bound(self):
        spec = SynthSpec(n_pedestrians=4, n_frames=40, walker_model="waypoint",
                         speed_range=(0.5, 0.5), seed=11)
        sc = generate_synthetic(spec)
        for track in sc.tracks.values():
            pts = np.array([[p.x, p.y] for p in track.positions if p.is_observed])
            steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            assert (steps <= 0.5 + 1e-9).all()

    def test_occluder_hides_exact_frames(self):
        box = (-1.0, -3.0, 2.0, 0.0)
        base = dict(n_pedestrians=1, n_frames=10, walker_model="crossing",
                    speed_range=(1.0, 1.0), seed=0, arena=(8.0, 8.0))
        # same seed without occluders reveals the full path; the oracle is a
        # point-in-box check over that path
        clear = generate_synthetic(SynthSpec(**base)).tracks["p0"]
        expected_hidden = [
            i for i, p in enumerate(clear.positions)
            if box[0] <= p.x <= box[2] and box[1] <= p.y <= box[3]
        ]
        occluded = generate_synthetic(SynthSpec(**base, occluders=(box,))).tracks["p0"]
        hidden = [i for i, p in enumerate(occluded.positions) if not p.is_observed]
        assert hidden == expected_hidden == [3, 4, 5]
        # visible frames keep the unoccluded coordinates
        for i, p in enumerate(occluded.positions):
            if p.is_observed:
                assert (p.x, p.y) == (clear.positions[i].x, clear.positions[i].y)

    def test_covering_occluder_rejected(self):
        spec = SynthSpec(n_pedestrians=1, n_frames=5, occluders=((-10, -10, 10, 10),))
        with pytest.raises(DataError):
            generate_synthetic(spec)

    def test_seed_determinism(self):
        spec = SynthSpec(n_pedestrians=3, n_frames=15, seed=21)
        assert generate_synthetic(spec) == generate_synthetic(spec)

    def test_solid_boxes_are_avoided(self):
        spec = SynthSpec(
            n_pedestrians=5, n_frames=40, walker_model="waypoint",
            solid_boxes=((-1.0, -1.0, 1.0, 1.0),), seed=3,
        )
        sc = generate_synthetic(spec)
        for track in sc.tracks.values():
            for p in track.positions:
                if p.is_observed:
                    assert not (-1.0 <= p.x <= 1.0 and -1.0 <= p.y <= 1.0)
