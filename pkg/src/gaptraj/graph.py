"""Spatio-temporal graph construction from windows.

Node features are [x, y, dx, dy] per frame; edge features are the pairwise
differences of node features.  Unobserved frames contribute exact zeros
regardless of any raw coordinates, and 4-bit observation codes record which
components are real data: [1,1,1,1] observed now and before, [1,1,0,0]
observed now but not before (velocity invalid), [0,0,0,0] unobserved.

Nodes are reordered with DBSCAN over their latest observed positions so
that spatially interacting entities sit in adjacent matrix rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DataError
from .scene import Window

CODE_FULL = (1.0, 1.0, 1.0, 1.0)
CODE_RESUMED = (1.0, 1.0, 0.0, 0.0)
CODE_MISSING = (0.0, 0.0, 0.0, 0.0)


class NodeKind(Enum):
    PEDESTRIAN = "pedestrian"
    OBSTACLE = "obstacle"


@dataclass(frozen=True)
class STGraph:
    nodes: np.ndarray       # [T, n, 4]
    edges: np.ndarray       # [T, n, n, 4]
    node_codes: np.ndarray  # [T, n, 4]
    edge_codes: np.ndarray  # [T, n, n, 4]
    kinds: tuple[NodeKind, ...]
    order: np.ndarray       # slot -> original entity index
    obs_flags: np.ndarray   # [T, n] bool
    anchors: np.ndarray     # [n, 2] last observed position per node

    @property
    def n(self) -> int:
        return self.nodes.shape[1]

    @property
    def t_obs(self) -> int:
        return self.nodes.shape[0]

    def pedestrian_slots(self) -> np.ndarray:
        return np.array([s for s, k in enumerate(self.kinds) if k is NodeKind.PEDESTRIAN], dtype=int)

    def slot_of_entity(self, entity: int) -> int:
        hits = np.flatnonzero(self.order == entity)
        if hits.size != 1:
            raise ValueError(f"entity {entity} not uniquely present in graph")
        return int(hits[0])


def build_nodes(window: Window) -> tuple[np.ndarray, np.ndarray]:
    """Node feature tensor V[t, i] = [x, y, dx, dy] plus observation flags.

    Positions are zeroed at unobserved frames; the velocity dx,dy is the
    one-frame displacement and is zeroed whenever either endpoint frame is
    unobserved (and always at the window's first frame).
    """
    xy = np.transpose(window.hist_xy, (1, 0, 2)).astype(np.float64)  # [T, m, 2]
    on = np.transpose(window.hist_obs, (1, 0)).astype(bool)          # [T, m]
    return _nodes_from_series(xy, on), on


def _nodes_from_series(xy: np.ndarray, on: np.ndarray) -> np.ndarray:
    t, n = on.shape
    pos = np.where(on[:, :, None], xy, 0.0)
    delta = np.zeros_like(pos)
    if t > 1:
        both = on[1:] & on[:-1]
        delta[1:] = np.where(both[:, :, None], xy[1:] - xy[:-1], 0.0)
    return np.concatenate([pos, delta], axis=2)


def build_edges(v: np.ndarray) -> np.ndarray:
    """Edge tensor A[t, i, j] = V[t, i] - V[t, j]; antisymmetric, zero diagonal."""
    return v[:, :, None, :] - v[:, None, :, :]


def encode_observation_states(on: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Observation code tensors (node codes, edge codes) from flags ON[t, i].

    The first frame has no predecessor; it is treated as preceded by itself,
    so a node observed at the first frame starts fully coded.  Edge codes use
    the conjunction of both endpoint states.
    """
    on = np.asarray(on, dtype=bool)
    prev = np.vstack([on[:1], on[:-1]])

    def codes(now, before):
        out = np.zeros(now.shape + (4,), dtype=np.float64)
        out[now] = CODE_RESUMED
        out[now & before] = CODE_FULL
        return out

    no = codes(on, prev)
    eo = codes(on[:, :, None] & on[:, None, :], prev[:, :, None] & prev[:, None, :])
    return no, eo


def dbscan(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Plain DBSCAN; returns labels (-1 for noise), deterministic in index order."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = pts.shape[0]
    if n == 0:
        return np.zeros(0, dtype=int)
    d = np.hypot(pts[:, 0, None] - pts[None, :, 0], pts[:, 1, None] - pts[None, :, 1])
    neighbors = [np.flatnonzero(d[i] <= eps) for i in range(n)]
    labels = np.full(n, -2, dtype=int)  # -2 unvisited, -1 noise
    cluster = -1
    for i in range(n):
        if labels[i] != -2:
            continue
        if len(neighbors[i]) < min_pts:
            labels[i] = -1
            continue
        cluster += 1
        labels[i] = cluster
        queue = list(neighbors[i])
        k = 0
        while k < len(queue):
            j = queue[k]
            k += 1
            if labels[j] == -1:
                labels[j] = cluster  # border point absorbed
            if labels[j] != -2:
                continue
            labels[j] = cluster
            if len(neighbors[j]) >= min_pts:
                queue.extend(neighbors[j])
    return labels


def order_nodes_dbscan(positions: np.ndarray, eps: float = 1.0, min_pts: int = 1) -> np.ndarray:
    """Cluster-contiguous node permutation: clusters sorted by their smallest
    member index, members in index order, noise points last in index order."""
    labels = dbscan(positions, eps, min_pts)
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(i)
    perm: list[int] = []
    clusters = sorted((min(m), lab) for lab, m in groups.items() if lab >= 0)
    for _, lab in clusters:
        perm.extend(sorted(groups[lab]))
    if -1 in groups:
        perm.extend(sorted(groups[-1]))
    return np.asarray(perm, dtype=int)


def _last_observed_xy(xy: np.ndarray, on: np.ndarray) -> np.ndarray:
    t, n = on.shape
    anchors = np.zeros((n, 2), dtype=np.float64)
    for i in range(n):
        obs_t = np.flatnonzero(on[:, i])
        if obs_t.size == 0:
            raise ValueError(f"node {i} has no observed frame; cannot anchor it")
        anchors[i] = xy[obs_t[-1], i]
    return anchors


def _permute(g: STGraph, perm: np.ndarray) -> STGraph:
    return STGraph(
        nodes=g.nodes[:, perm],
        edges=g.edges[:, perm][:, :, perm],
        node_codes=g.node_codes[:, perm],
        edge_codes=g.edge_codes[:, perm][:, :, perm],
        kinds=tuple(g.kinds[p] for p in perm),
        order=g.order[perm],
        obs_flags=g.obs_flags[:, perm],
        anchors=g.anchors[perm],
    )


def _assemble(
    xy: np.ndarray,
    on: np.ndarray,
    kinds: tuple[NodeKind, ...],
    eps: float,
    min_pts: int,
    reorder: bool,
) -> STGraph:
    v = _nodes_from_series(xy, on)
    no, eo = encode_observation_states(on)
    anchors = _last_observed_xy(xy, on)
    g = STGraph(
        nodes=v,
        edges=build_edges(v),
        node_codes=no,
        edge_codes=eo,
        kinds=kinds,
        order=np.arange(on.shape[1], dtype=int),
        obs_flags=on,
        anchors=anchors,
    )
    if reorder and g.n > 1:
        g = _permute(g, order_nodes_dbscan(anchors, eps, min_pts))
    return g


def build_graph(window: Window, eps: float = 1.0, min_pts: int = 1, reorder: bool = True) -> STGraph:
    """Full graph for one window: features, codes and DBSCAN node ordering."""
    if window.m == 0:
        raise ValueError("cannot build a graph from an empty window")
    xy = np.transpose(window.hist_xy, (1, 0, 2)).astype(np.float64)
    on = np.transpose(window.hist_obs, (1, 0)).astype(bool)
    kinds = tuple(NodeKind.PEDESTRIAN for _ in range(window.m))
    return _assemble(xy, on, kinds, eps, min_pts, reorder)


def inject_obstacles(
    graph: STGraph,
    obstacle_xy,
    eps: float = 1.0,
    min_pts: int = 1,
    reorder: bool = True,
) -> STGraph:
    """Add static obstacle nodes and rebuild edges, codes and node order.

    Obstacles hold a constant position over all frames with zero velocity and
    fully observed codes.  With no obstacles the graph is returned unchanged.
    """
    obs = np.asarray(obstacle_xy, dtype=np.float64).reshape(-1, 2)
    if obs.shape[0] == 0:
        return graph

    inv = np.argsort(graph.order)  # entity -> current slot
    t = graph.t_obs
    xy = graph.nodes[:, inv, :2].copy()
    on = graph.obs_flags[:, inv].copy()
    kinds = tuple(graph.kinds[s] for s in inv)

    k = obs.shape[0]
    obs_xy = np.broadcast_to(obs[None, :, :], (t, k, 2)).copy()
    xy = np.concatenate([xy, obs_xy], axis=1)
    on = np.concatenate([on, np.ones((t, k), dtype=bool)], axis=1)
    kinds = kinds + tuple(NodeKind.OBSTACLE for _ in range(k))
    return _assemble(xy, on, kinds, eps, min_pts, reorder)


GRAPH_MAGIC = "stgraph v1"


def dump_graph(graph: STGraph, path: str | Path) -> None:
    """Debug dump: header plus flattened feature/code tensors in decimal text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def flat(a: np.ndarray) -> str:
        return " ".join(f"{v:.17g}" for v in a.ravel())

    lines = [
        f"{GRAPH_MAGIC} {graph.t_obs} {graph.n}",
        "V " + flat(graph.nodes),
        "A " + flat(graph.edges),
        "No " + flat(graph.node_codes),
        "Eo " + flat(graph.edge_codes),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_graph_dump(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(GRAPH_MAGIC):
        raise DataError(f"{path}: not an '{GRAPH_MAGIC}' file")
    _, _, t, n = lines[0].split()
    t, n = int(t), int(n)
    shapes = {"V": (t, n, 4), "A": (t, n, n, 4), "No": (t, n, 4), "Eo": (t, n, n, 4)}
    out = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        name, _, rest = line.partition(" ")
        if name not in shapes:
            raise DataError(f"{path}: unexpected tensor {name!r}")
        out[name] = np.array([float(v) for v in rest.split()]).reshape(shapes[name])
    return out
