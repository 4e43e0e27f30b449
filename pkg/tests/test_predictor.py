"""Two-pass prediction, obstacle lookup and response latency."""
import numpy as np
import pytest

from gaptraj.errors import DataError
from gaptraj.gridmap import OccupancyGrid, occupied_points
from gaptraj.network import Hyper, init_params
from gaptraj.predictor import predict_two_pass, response_latency
from gaptraj.scene import Mode, ObservedPosition, Track, Window

HP = Hyper(t_obs=4, t_pred=3, n_en=5, n_de=3, n_gru=6, n_stg=3, n_te=3, k_candidates=3)


def make_window(m=2, seed=0, spread=1.0):
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(m, 1, 2)) * spread
    steps = rng.normal(size=(m, HP.t_obs + HP.t_pred, 2)) * 0.2
    path = base + np.cumsum(steps, axis=1)
    return Window(
        scene_id="s", t0=HP.t_obs - 1,
        pedestrian_ids=tuple(f"p{i}" for i in range(m)),
        hist_xy=path[:, : HP.t_obs],
        hist_obs=np.ones((m, HP.t_obs), dtype=bool),
        fut_xy=path[:, HP.t_obs :],
        fut_obs=np.ones((m, HP.t_pred), dtype=bool),
        mode=Mode.PAD,
    )


def params_for(seed=0, scale=0.05):
    rng = np.random.default_rng(seed)
    params = init_params(HP, seed=seed)
    return {k: v + rng.normal(scale=scale, size=v.shape) for k, v in params.items()}


def free_grid(side=10):
    return OccupancyGrid(-5.0, -5.0, 1.0, np.zeros((side, side), dtype=bool))


def wall_grid_near(window, dist=0.5):
    # put one occupied cell right next to the first pedestrian's last position
    x, y = window.hist_xy[0, -1]
    cells = np.zeros((1, 1), dtype=bool)
    cells[0, 0] = True
    return OccupancyGrid(x + dist - 0.5, y - 0.5, 1.0, cells)


class TestTwoPass:
    def test_free_grid_matches_single_pass_bitwise(self):
        win = make_window()
        params = params_for()
        with_grid = predict_two_pass(win, free_grid(), params, HP)
        without = predict_two_pass(win, None, params, HP)
        assert np.array_equal(with_grid.candidates, without.candidates)
        assert with_grid.obstacles_used.shape == (0, 2)

    def test_far_obstacles_do_not_trigger_second_pass(self):
        win = make_window()
        params = params_for()
        cells = np.zeros((1, 1), dtype=bool)
        cells[0, 0] = True
        far = OccupancyGrid(400.0, 400.0, 1.0, cells)
        with pytest.raises(DataError):
            predict_two_pass(win, far, params, HP)  # disjoint frames -> mismatch
        # a grid overlapping the scene but with its obstacle beyond od
        cells = np.zeros((12, 12), dtype=bool)
        cells[11, 11] = True
        grid = OccupancyGrid(-6.0, -6.0, 1.0, cells)
        res = predict_two_pass(win, grid, params, HP, od=0.8)
        base = predict_two_pass(win, None, params, HP)
        assert np.array_equal(res.candidates, base.candidates)

    def test_nearby_obstacle_changes_graph_and_is_reported(self):
        win = make_window(seed=3)
        params = params_for(3)
        grid = wall_grid_near(win, dist=0.3)
        res = predict_two_pass(win, grid, params, HP, od=2.0)
        assert res.obstacles_used.shape[0] >= 1
        assert not res.single_pass
        occ = {tuple(p) for p in occupied_points(grid)}
        assert {tuple(p) for p in res.obstacles_used} <= occ

    def test_no_obs_ablation_single_pass(self):
        win = make_window(seed=4)
        params = params_for(4)
        grid = wall_grid_near(win, dist=0.3)
        res = predict_two_pass(win, grid, params, HP, od=2.0, no_obs=True)
        assert res.single_pass
        base = predict_two_pass(win, None, params, HP)
        assert np.array_equal(res.candidates, base.candidates)

    def test_pedestrian_count_preserved(self):
        win = make_window(m=4, seed=5)
        params = params_for(5)
        grid = wall_grid_near(win, dist=0.2)
        res = predict_two_pass(win, grid, params, HP, od=2.0)
        assert res.candidates.shape == (HP.k_candidates, HP.t_pred, 4, 2)
        assert res.pedestrian_ids == win.pedestrian_ids

    def test_grid_enters_only_through_obstacle_set(self):
        win = make_window(seed=6)
        params = params_for(6)
        g1 = wall_grid_near(win, dist=0.3)
        # same occupied cell, embedded in a larger, mostly-free grid
        x, y = win.hist_xy[0, -1]
        cells = np.zeros((7, 7), dtype=bool)
        cells[3, 3] = True
        g2 = OccupancyGrid(x + 0.3 - 3.5, y - 3.5, 1.0, cells)
        assert np.allclose(occupied_points(g1), occupied_points(g2))
        r1 = predict_two_pass(win, g1, params, HP, od=2.0)
        r2 = predict_two_pass(win, g2, params, HP, od=2.0)
        assert np.array_equal(r1.candidates, r2.candidates)

    def test_unmaterialized_window_reports_eligibility(self):
        win = make_window(m=3, seed=7)
        win.mode = None
        win.hist_obs[2, :] = False
        win.hist_obs[2, 0] = True  # only one observation: never eligible
        params = params_for(7)
        res = predict_two_pass(win, None, params, HP, mode=Mode.PAD)
        assert res.eligibility == {"p0": True, "p1": True, "p2": False}
        assert res.m == 2

    def test_empty_window_flagged(self):
        win = make_window(m=1, seed=8)
        win.mode = None
        win.hist_obs[:] = False
        win.hist_obs[0, 0] = True
        params = params_for(8)
        res = predict_two_pass(win, None, params, HP, mode=Mode.FILTRATION)
        assert res.m == 0
        assert res.candidates.shape == (HP.k_candidates, HP.t_pred, 0, 2)


def track_with(observed_frames, last=20):
    positions = [
        ObservedPosition.observed(0.1 * f, 0.0) if f in observed_frames
        else ObservedPosition.unobserved()
        for f in range(last)
    ]
    first = min(observed_frames)
    return Track("p", 0, tuple(positions))


class TestResponseLatency:
    def test_uninterrupted_track(self):
        track = track_with(set(range(20)))
        assert response_latency(track) == pytest.approx(1.2)

    def test_every_other_frame(self):
        # frames 0, 2, 4 observed -> eligible at frame 4 -> 5 periods of 0.4 s
        track = track_with({0, 2, 4, 6, 8, 10})
        assert response_latency(track) == pytest.approx(2.0)

    def test_never_eligible(self):
        track = track_with({0, 9})
        assert response_latency(track) is None

    def test_latency_counts_from_first_observation(self):
        track = track_with({5, 6, 7, 8, 9})
        assert response_latency(track) == pytest.approx(1.2)
