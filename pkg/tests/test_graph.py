"""Graph tensors, observation codes, DBSCAN ordering, obstacle injection."""
import itertools

import numpy as np

from gaptraj.graph import (
    CODE_FULL,
    CODE_MISSING,
    CODE_RESUMED,
    NodeKind,
    build_edges,
    build_graph,
    build_nodes,
    dump_graph,
    encode_observation_states,
    inject_obstacles,
    load_graph_dump,
    order_nodes_dbscan,
)
from gaptraj.scene import Mode, Window

CODE_WORDS = {CODE_FULL, CODE_RESUMED, CODE_MISSING}


def window_from(xy, obs, t_pred=2, mode=Mode.PAD):
    xy = np.asarray(xy, dtype=np.float64)
    obs = np.asarray(obs, dtype=bool)
    m, t = obs.shape
    return Window(
        scene_id="w", t0=t - 1,
        pedestrian_ids=tuple(f"p{i}" for i in range(m)),
        hist_xy=xy, hist_obs=obs,
        fut_xy=np.zeros((m, t_pred, 2)), fut_obs=np.ones((m, t_pred), dtype=bool),
        mode=mode,
    )


class TestBuildNodes:
    def test_stationary_pedestrian(self):
        xy = np.tile([2.0, 3.0], (1, 5, 1))
        v, on = build_nodes(window_from(xy, np.ones((1, 5), bool)))
        assert np.allclose(v[:, 0], [2.0, 3.0, 0.0, 0.0])
        assert on.all()

    def test_velocity_is_one_frame_displacement(self):
        xy = np.array([[[0.0, 0.0], [1.0, 0.0]]])
        v, _ = build_nodes(window_from(xy, np.ones((1, 2), bool)))
        assert np.allclose(v[1, 0], [1.0, 0.0, 1.0, 0.0])
        assert np.allclose(v[0, 0, 2:], 0.0)  # no predecessor at the first frame

    def test_gap_zeroes_position_and_both_velocities(self):
        xy = np.array([[[1.0, 1.0], [9.9, 9.9], [5.0, 5.0]]])  # junk at the gap
        obs = np.array([[True, False, True]])
        v, _ = build_nodes(window_from(xy, obs))
        assert np.allclose(v[1, 0], [0.0, 0.0, 0.0, 0.0])
        assert np.allclose(v[2, 0], [5.0, 5.0, 0.0, 0.0])  # velocity zeroed on reappearance

    def test_output_independent_of_junk_coordinates(self):
        rng = np.random.default_rng(0)
        obs = rng.random((3, 6)) < 0.6
        obs[:, -1] = True
        base = rng.normal(size=(3, 6, 2))
        a = base.copy()
        b = base.copy()
        b[~obs] = rng.normal(size=b[~obs].shape) * 100  # different junk
        va, _ = build_nodes(window_from(a, obs))
        vb, _ = build_nodes(window_from(b, obs))
        assert np.array_equal(va, vb)


class TestBuildEdges:
    def test_zero_diagonal(self):
        rng = np.random.default_rng(1)
        v = rng.normal(size=(4, 5, 4))
        a = build_edges(v)
        for t in range(4):
            assert np.allclose(np.diagonal(a[t], axis1=0, axis2=1), 0.0)

    def test_componentwise_difference(self):
        v = np.zeros((1, 3, 4))
        v[0, 1] = [1.0, 0.0, 1.0, 0.0]
        a = build_edges(v)
        assert np.allclose(a[0, 1, 2], [1.0, 0.0, 1.0, 0.0])
        assert np.allclose(a[0, 2, 1], [-1.0, 0.0, -1.0, 0.0])

    def test_antisymmetry_random(self):
        rng = np.random.default_rng(2)
        v = rng.normal(size=(6, 7, 4))
        a = build_edges(v)
        assert np.max(np.abs(a + np.swapaxes(a, 1, 2))) == 0.0


class TestEncodeObservationStates:
    def test_table_rows(self):
        on = np.array([[True], [True], [False], [True]])  # one node over 4 frames
        no, _ = encode_observation_states(on)
        assert tuple(no[0, 0]) == CODE_FULL       # first frame: predecessor defaults to self
        assert tuple(no[1, 0]) == CODE_FULL       # observed now and before
        assert tuple(no[2, 0]) == CODE_MISSING    # unobserved
        assert tuple(no[3, 0]) == CODE_RESUMED    # observed now, not before

    def test_edge_conjunction(self):
        on = np.array([[True, True], [True, False]])  # node 1 disappears at t=1
        _, eo = encode_observation_states(on)
        assert tuple(eo[1, 0, 1]) == CODE_MISSING  # conjunction false at t
        assert tuple(eo[1, 0, 0]) == CODE_FULL     # node 0 with itself stays full

    def test_exhaustive_node_codes(self):
        # all (now, before) pairs over a 2-frame window
        for before, now in itertools.product([False, True], repeat=2):
            on = np.array([[before], [now]])
            no, _ = encode_observation_states(on)
            expected = CODE_MISSING if not now else (CODE_FULL if before else CODE_RESUMED)
            assert tuple(no[1, 0]) == expected

    def test_exhaustive_edge_codes(self):
        for bits in itertools.product([False, True], repeat=4):
            i0, i1, j0, j1 = bits  # node i/j at frames 0/1
            on = np.array([[i0, j0], [i1, j1]])
            _, eo = encode_observation_states(on)
            now = i1 and j1
            before = i0 and j0
            expected = CODE_MISSING if not now else (CODE_FULL if before else CODE_RESUMED)
            assert tuple(eo[1, 0, 1]) == expected

    def test_fuzz_never_emits_a_fourth_word(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            on = rng.random((5, 4)) < 0.5
            no, eo = encode_observation_states(on)
            words = {tuple(w) for w in no.reshape(-1, 4)} | {tuple(w) for w in eo.reshape(-1, 4)}
            assert words <= CODE_WORDS


class TestNodeOrdering:
    def test_cluster_interleaving(self):
        # clusters {0,3}, {1,4,5}, {2} -> order (0,3,1,4,5,2)
        pts = np.array([
            [0.0, 0.0],    # 0: cluster A
            [5.0, 0.0],    # 1: cluster B
            [10.0, 10.0],  # 2: alone
            [0.5, 0.0],    # 3: cluster A
            [5.5, 0.0],    # 4: cluster B
            [5.0, 0.5],    # 5: cluster B
        ])
        perm = order_nodes_dbscan(pts, eps=1.0, min_pts=1)
        assert perm.tolist() == [0, 3, 1, 4, 5, 2]

    def test_far_apart_identity(self):
        pts = np.array([[0, 0], [10, 0], [20, 0], [30, 0]], dtype=float)
        assert order_nodes_dbscan(pts, eps=1.0, min_pts=1).tolist() == [0, 1, 2, 3]

    def test_always_a_permutation(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(1, 12))
            pts = rng.normal(size=(n, 2)) * rng.uniform(0.1, 5.0)
            perm = order_nodes_dbscan(pts, eps=1.0, min_pts=1)
            assert sorted(perm.tolist()) == list(range(n))

    def test_cluster_contiguous(self):
        from gaptraj.graph import dbscan
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(2, 10))
            pts = rng.normal(size=(n, 2)) * 2.0
            labels = dbscan(pts, eps=1.0, min_pts=1)
            perm = order_nodes_dbscan(pts, eps=1.0, min_pts=1)
            seen = [labels[i] for i in perm]
            # each cluster occupies one contiguous run
            runs = [lab for i, lab in enumerate(seen) if i == 0 or seen[i - 1] != lab]
            assert len(runs) == len(set(runs))

    def test_relabeling_permutes_partition_consistently(self):
        from gaptraj.graph import dbscan
        rng = np.random.default_rng(6)
        pts = rng.normal(size=(8, 2))
        shuffle = rng.permutation(8)
        a = dbscan(pts, eps=1.0, min_pts=1)
        b = dbscan(pts[shuffle], eps=1.0, min_pts=1)
        # same partition: pairs clustered together stay together
        for i in range(8):
            for j in range(8):
                same_a = a[i] == a[j]
                bi = np.flatnonzero(shuffle == i)[0]
                bj = np.flatnonzero(shuffle == j)[0]
                assert same_a == (b[bi] == b[bj])


def small_graph(reorder=True):
    rng = np.random.default_rng(7)
    xy = rng.normal(size=(3, 8, 2))
    obs = np.ones((3, 8), dtype=bool)
    obs[1, 2] = False
    return build_graph(window_from(xy, obs, t_pred=3), eps=1.0, min_pts=1, reorder=reorder)


class TestInjectObstacles:
    def test_zero_obstacles_unchanged(self):
        g = small_graph()
        g2 = inject_obstacles(g, np.zeros((0, 2)))
        assert g2 is g

    def test_obstacle_node_features(self):
        g = small_graph(reorder=False)
        g2 = inject_obstacles(g, [(1.0, 1.0)], reorder=False)
        assert g2.n == g.n + 1
        slot = g2.kinds.index(NodeKind.OBSTACLE)
        assert np.allclose(g2.nodes[:, slot], [1.0, 1.0, 0.0, 0.0])
        assert np.allclose(g2.node_codes[:, slot], CODE_FULL)
        assert g2.obs_flags[:, slot].all()

    def test_obstacle_edge_to_coincident_static_node(self):
        xy = np.tile([2.0, 2.0], (1, 8, 1))
        g = build_graph(window_from(xy, np.ones((1, 8), bool), t_pred=2), reorder=False)
        g2 = inject_obstacles(g, [(2.0, 2.0)], reorder=False)
        assert np.allclose(g2.edges[:, 0, 1], 0.0)

    def test_pedestrian_count_preserved(self):
        g = small_graph()
        g2 = inject_obstacles(g, [(0.0, 0.0), (3.0, 3.0)])
        assert sum(k is NodeKind.PEDESTRIAN for k in g2.kinds) == 3
        assert sum(k is NodeKind.OBSTACLE for k in g2.kinds) == 2

    def test_reordering_recomputed_over_union(self):
        # one pedestrian at the origin, obstacle right next to it, another
        # pedestrian far away: the obstacle slots in adjacent to pedestrian 0
        xy = np.zeros((2, 8, 2))
        xy[1] += 50.0
        g = build_graph(window_from(xy, np.ones((2, 8), bool), t_pred=2))
        g2 = inject_obstacles(g, [(0.3, 0.0)])
        assert g2.order.tolist() == [0, 2, 1]
        assert [k.value for k in g2.kinds] == ["pedestrian", "obstacle", "pedestrian"]


class TestGraphInvariants:
    def test_shapes(self):
        g = small_graph()
        t, n = 8, 3
        assert g.nodes.shape == (t, n, 4)
        assert g.edges.shape == (t, n, n, 4)
        assert g.node_codes.shape == (t, n, 4)
        assert g.edge_codes.shape == (t, n, n, 4)
        assert len(g.kinds) == n and g.order.shape == (n,)

    def test_random_windows_algebra(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            m = int(rng.integers(1, 6))
            obs = rng.random((m, 8)) < 0.7
            obs[:, -1] = True
            obs[rng.integers(0, m), rng.integers(0, 7)] = True  # ensure anchors exist
            xy = rng.normal(size=(m, 8, 2)) * 3
            ok = obs.any(axis=1)
            xy, obs, m = xy[ok], obs[ok], int(ok.sum())
            g = build_graph(window_from(xy, obs, t_pred=2))
            assert np.max(np.abs(g.edges + np.swapaxes(g.edges, 1, 2))) == 0.0
            on = g.obs_flags
            assert np.all(g.nodes[~on] == 0.0)
            words = {tuple(w) for w in g.node_codes.reshape(-1, 4)}
            words |= {tuple(w) for w in g.edge_codes.reshape(-1, 4)}
            assert words <= CODE_WORDS


class TestDumpFormat:
    def test_round_trip(self, tmp_path):
        g = small_graph()
        path = tmp_path / "g.stgraph"
        dump_graph(g, path)
        header = path.read_text().splitlines()[0]
        assert header == f"stgraph v1 {g.t_obs} {g.n}"
        back = load_graph_dump(path)
        assert np.array_equal(back["V"], g.nodes)
        assert np.array_equal(back["A"], g.edges)
        assert np.array_equal(back["No"], g.node_codes)
        assert np.array_equal(back["Eo"], g.edge_codes)
