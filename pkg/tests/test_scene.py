"""Window slicing, eligibility and mode materialization."""
import itertools

import numpy as np
import pytest

from gaptraj.scene import (
    Mode,
    ObservedPosition,
    Scene,
    Track,
    is_eligible,
    materialize_mode,
    slice_windows,
)


def walk(n, x0=0.0, y0=0.0, dx=0.4, dy=0.0, gaps=()):
    return tuple(
        ObservedPosition.unobserved() if i in gaps
        else ObservedPosition.observed(x0 + i * dx, y0 + i * dy)
        for i in range(n)
    )


def scene_of(tracks, scene_id="s"):
    return Scene(scene_id=scene_id, tracks={t.pedestrian_id: t for t in tracks})


class TestObservedPosition:
    def test_unobserved_carries_no_coordinates(self):
        from gaptraj.scene import ObsState
        with pytest.raises(ValueError):
            ObservedPosition(ObsState.UNOBSERVED, x=1.0)
        with pytest.raises(ValueError):
            ObservedPosition(ObsState.OBSERVED, x=1.0, y=None)

    def test_observed_requires_finite(self):
        with pytest.raises(ValueError):
            ObservedPosition.observed(float("nan"), 0.0)
        with pytest.raises(ValueError):
            ObservedPosition.observed(float("inf"), 0.0)

    def test_track_at_outside_lifetime_is_unobserved(self):
        tr = Track("p", 5, walk(3))
        assert not tr.at(4).is_observed
        assert not tr.at(8).is_observed
        assert tr.at(5).is_observed


class TestSliceWindows:
    def test_exact_fit_yields_one_window(self):
        sc = scene_of([Track("p", 0, walk(20))])
        wins = slice_windows(sc, t_obs=8, t_pred=12, stride=1)
        assert len(wins) == 1
        assert wins[0].t0 == 7  # 0-indexed anchor of the only window

    def test_too_short_scene_yields_none(self):
        sc = scene_of([Track("p", 0, walk(19))])
        assert slice_windows(sc, 8, 12, 1) == []

    def test_fully_unobserved_pedestrian_is_dropped(self):
        # brute-force oracle: a pedestrian belongs to a window iff any history
        # frame is observed
        tracks = [
            Track("a", 0, walk(20)),
            Track("b", 0, walk(20, y0=2.0)),
            Track("c", 0, walk(20, y0=4.0, gaps=range(0, 8))),  # hidden for all history frames
        ]
        sc = scene_of(tracks)
        wins = slice_windows(sc, 8, 12, 1)
        assert len(wins) == 1
        win = wins[0]
        expected = []
        for tr in tracks:
            if any(tr.at(f).is_observed for f in range(win.t0 - 7, win.t0 + 1)):
                expected.append(tr.pedestrian_id)
        assert list(win.pedestrian_ids) == expected == ["a", "b"]

    def test_stride_and_count(self):
        sc = scene_of([Track("p", 0, walk(25))])
        assert len(slice_windows(sc, 8, 12, 1)) == 25 - 8 - 12 + 1
        assert len(slice_windows(sc, 8, 12, 2)) == 3

    def test_history_alignment(self):
        sc = scene_of([Track("p", 0, walk(20, dx=1.0))])
        win = slice_windows(sc, 8, 12, 1)[0]
        # history column t corresponds to absolute frame t0 - 7 + t
        assert np.allclose(win.hist_xy[0, :, 0], np.arange(win.t0 - 7, win.t0 + 1))
        assert np.allclose(win.fut_xy[0, :, 0], np.arange(win.t0 + 1, win.t0 + 13))

    def test_bad_arguments(self):
        sc = scene_of([Track("p", 0, walk(20))])
        with pytest.raises(ValueError):
            slice_windows(sc, 0, 12, 1)

    def test_scene_not_starting_at_frame_zero(self):
        sc = scene_of([Track("p", 100, walk(20, dx=1.0))])
        wins = slice_windows(sc, 8, 12, 1)
        assert len(wins) == 1
        assert wins[0].t0 == 107
        assert np.allclose(wins[0].hist_xy[0, :, 0], np.arange(0, 8))  # track-local x values


class TestEligibility:
    def test_three_observed_including_latest(self):
        row = [False] * 8
        row[7] = row[3] = row[0] = True
        assert is_eligible(row)

    def test_exactly_two_observed_fails(self):
        row = [False] * 8
        row[7] = row[0] = True
        assert not is_eligible(row)

    def test_latest_unobserved_fails(self):
        row = [True] * 7 + [False]
        assert not is_eligible(row)

    def test_exhaustive_against_brute_force(self):
        # oracle: latest observed AND observed count strictly greater than 2
        for bits in itertools.product([False, True], repeat=8):
            expected = bits[-1] and sum(bits) > 2
            assert is_eligible(list(bits)) == expected


def two_ped_window():
    sc = scene_of([
        Track("full", 0, walk(20)),
        Track("gappy", 0, walk(20, y0=3.0, gaps=(2, 5))),
    ])
    return slice_windows(sc, 8, 12, 1)[0]


class TestMaterializeMode:
    def test_filtration_drops_incomplete(self):
        win = two_ped_window()
        out = materialize_mode(win, Mode.FILTRATION)
        assert out.pedestrian_ids == ("full",)
        assert out.mode is Mode.FILTRATION

    def test_pad_keeps_eligible(self):
        win = two_ped_window()
        out = materialize_mode(win, Mode.PAD)
        assert out.pedestrian_ids == ("full", "gappy")
        # gaps stay UNOBSERVED in the window; zero substitution is downstream
        assert not out.hist_obs[1].all()

    def test_modes_coincide_on_complete_data(self):
        sc = scene_of([Track("a", 0, walk(20)), Track("b", 0, walk(20, y0=1.0))])
        win = slice_windows(sc, 8, 12, 1)[0]
        a = materialize_mode(win, Mode.FILTRATION)
        b = materialize_mode(win, Mode.PAD)
        assert a.pedestrian_ids == b.pedestrian_ids
        assert np.array_equal(a.hist_xy, b.hist_xy)

    def test_no_eligible_gives_empty_flagged_window(self):
        sc = scene_of([Track("a", 0, walk(20, gaps=range(3, 20)))])
        wins = slice_windows(sc, 8, 12, 1)
        out = materialize_mode(wins[0], Mode.PAD)
        assert out.m == 0

    def test_filtration_subset_of_pad(self):
        rng = np.random.default_rng(7)
        for trial in range(50):
            tracks = []
            for p in range(4):
                gaps = tuple(int(g) for g in rng.choice(20, size=rng.integers(0, 12), replace=False))
                tracks.append(Track(f"p{p}", 0, walk(20, y0=float(p), gaps=gaps)))
            sc = scene_of(tracks)
            for win in slice_windows(sc, 8, 12, 1):
                filt = set(materialize_mode(win, Mode.FILTRATION).pedestrian_ids)
                pad = set(materialize_mode(win, Mode.PAD).pedestrian_ids)
                assert filt <= pad
                for pid in pad:
                    i = win.pedestrian_ids.index(pid)
                    assert is_eligible(win.hist_obs[i])
                for pid in filt:
                    i = win.pedestrian_ids.index(pid)
                    assert win.hist_obs[i].all()

    def test_determinism_byte_for_byte(self):
        win1 = two_ped_window()
        win2 = two_ped_window()
        a = materialize_mode(win1, Mode.PAD).to_payload()
        b = materialize_mode(win2, Mode.PAD).to_payload()
        assert a == b
