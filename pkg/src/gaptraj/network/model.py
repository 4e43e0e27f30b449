"""The trajectory prediction network and its analytic gradients.

Pipeline per graph: code-gated embedding of node/edge features, GRU
compensation along time (nodes and edges separately), a graph convolution
over the degree-normalized signed adjacency with a temporal convolution and
residual, a three-layer time-extrapolating convolution stack that maps the
observed time axis to the prediction time axis (time steps act as conv
channels; the kernel slides over the feature x node plane, so matrix-adjacent
nodes interact), and a bidirectional-GRU + MLP decoder that emits K candidate
displacement sequences integrated from the last observed position.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import CheckpointError, ConfigError
from .layers import (
    GRU_PARAM_KEYS,
    affine_backward,
    affine_forward,
    conv2d_backward,
    conv2d_forward,
    gru_backward,
    gru_forward,
    orthogonal,
    silu_backward,
    silu_forward,
    temporal_conv_backward,
    temporal_conv_forward,
    uniform_fanin,
)

DEG_EPS = 1e-12
CHECKPOINT_FORMAT = "gaptraj-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Hyper:
    t_obs: int = 8
    t_pred: int = 12
    n_en: int = 9
    n_de: int = 7
    n_gru: int = 64
    n_stg: int = 7
    n_te: int = 3
    k_candidates: int = 3
    use_code: bool = True

    def __post_init__(self):
        for name in ("t_obs", "t_pred", "n_en", "n_de", "n_gru", "n_stg", "n_te", "k_candidates"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.n_stg % 2 == 0 or self.n_te % 2 == 0:
            raise ConfigError("n_stg and n_te must be odd (length-preserving padding)")
        if self.n_de != self.n_en - self.n_te + 1:
            raise ConfigError(
                f"n_de must equal n_en - n_te + 1 (the last extrapolator layer runs "
                f"unpadded along the feature axis); got n_de={self.n_de}, "
                f"n_en={self.n_en}, n_te={self.n_te}"
            )

    @property
    def mlp_hidden(self) -> tuple[int, int]:
        return self.n_gru, max(self.n_gru // 2, 2)


def _gru_shapes(d_in: int, n_gru: int) -> dict[str, tuple[int, ...]]:
    return {
        "wz": (d_in, n_gru), "wr": (d_in, n_gru), "wh": (d_in, n_gru),
        "uz": (n_gru, n_gru), "ur": (n_gru, n_gru), "uh": (n_gru, n_gru),
        "bz": (n_gru,), "br": (n_gru,), "bh": (n_gru,),
    }


def expected_shapes(hp: Hyper) -> dict[str, tuple[int, ...]]:
    e, g, k = hp.n_en, hp.n_gru, hp.k_candidates
    h1, h2 = hp.mlp_hidden
    shapes: dict[str, tuple[int, ...]] = {}
    for stem in ("node", "node_code", "edge", "edge_code"):
        shapes[f"embed.{stem}.w"] = (4, e)
        shapes[f"embed.{stem}.b"] = (e,)
    for stem in ("comp.node", "comp.edge"):
        for key, shp in _gru_shapes(e, g).items():
            shapes[f"{stem}.{key}"] = shp
        shapes[f"{stem}.h0"] = (g,)
        shapes[f"{stem}.proj.w"] = (g, e)
        shapes[f"{stem}.proj.b"] = (e,)
    shapes["stgcn.mix.w"] = (e, e)
    shapes["stgcn.mix.b"] = (e,)
    shapes["stgcn.tconv.w"] = (hp.n_stg, e, e)
    shapes["stgcn.tconv.b"] = (e,)
    shapes["tecn.l1.w"] = (hp.t_pred, hp.t_obs, hp.n_te, hp.n_te)
    shapes["tecn.l1.b"] = (hp.t_pred,)
    for layer in ("l2", "l3"):
        shapes[f"tecn.{layer}.w"] = (hp.t_pred, hp.t_pred, hp.n_te, hp.n_te)
        shapes[f"tecn.{layer}.b"] = (hp.t_pred,)
    for stem in ("dec.fw", "dec.bw"):
        for key, shp in _gru_shapes(hp.n_de, g).items():
            shapes[f"{stem}.{key}"] = shp
        shapes[f"{stem}.h0"] = (g,)
    shapes["dec.mlp.l1.w"] = (2 * g, h1)
    shapes["dec.mlp.l1.b"] = (h1,)
    shapes["dec.mlp.l2.w"] = (h1, h2)
    shapes["dec.mlp.l2.b"] = (h2,)
    shapes["dec.mlp.l3.w"] = (h2, 2 * k)
    shapes["dec.mlp.l3.b"] = (2 * k,)
    return shapes


def init_params(hp: Hyper, seed: int = 0) -> dict[str, np.ndarray]:
    """Fan-in uniform for affine/conv weights, orthogonal recurrent kernels,
    zeros for biases and initial hidden states.  Deterministic by seed."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in expected_shapes(hp).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf in ("b", "bz", "br", "bh", "h0"):
            params[name] = np.zeros(shape)
        elif leaf in ("uz", "ur", "uh"):
            params[name] = orthogonal(rng, shape[0])
        elif leaf == "w" and len(shape) == 4:      # 2-d conv
            params[name] = uniform_fanin(rng, shape, shape[1] * shape[2] * shape[3])
        elif leaf == "w" and len(shape) == 3:      # temporal conv
            params[name] = uniform_fanin(rng, shape, shape[0] * shape[1])
        else:                                       # affine / GRU input kernels
            params[name] = uniform_fanin(rng, shape, shape[0])
    return params


def _gru_view(params: dict, prefix: str) -> dict:
    return {k: params[f"{prefix}.{k}"] for k in GRU_PARAM_KEYS}


def forward(params: dict, hp: Hyper, graph) -> tuple[np.ndarray, dict]:
    """Run the network on one graph.

    Returns (candidates, cache) where candidates has shape
    [k_candidates, t_pred, n, 2] in the graph's slot order.
    """
    v, a = graph.nodes, graph.edges
    t_obs, n = v.shape[0], v.shape[1]
    if t_obs != hp.t_obs:
        raise ValueError(f"graph has {t_obs} frames, model expects {hp.t_obs}")
    c: dict = {"graph": graph}

    # Embedding, gated by the observation codes.
    ne, _ = affine_forward(v, params["embed.node.w"], params["embed.node.b"])
    ee, _ = affine_forward(a, params["embed.edge.w"], params["embed.edge.b"])
    if hp.use_code:
        noe, _ = affine_forward(graph.node_codes, params["embed.node_code.w"], params["embed.node_code.b"])
        eoe, _ = affine_forward(graph.edge_codes, params["embed.edge_code.w"], params["embed.edge_code.b"])
        vf = ne * noe
        af = ee * eoe
        c["noe"], c["eoe"] = noe, eoe
    else:
        vf, af = ne, ee
    c["ne"], c["ee"] = ne, ee

    # GRU compensation along time; nodes batched over n, edges over n*n.
    hs_v, c["gru_v"] = gru_forward(vf, params["comp.node.h0"], _gru_view(params, "comp.node"))
    vfc, _ = affine_forward(hs_v, params["comp.node.proj.w"], params["comp.node.proj.b"])
    af_flat = af.reshape(t_obs, n * n, hp.n_en)
    hs_a, c["gru_a"] = gru_forward(af_flat, params["comp.edge.h0"], _gru_view(params, "comp.edge"))
    afc_flat, _ = affine_forward(hs_a, params["comp.edge.proj.w"], params["comp.edge.proj.b"])
    afc = afc_flat.reshape(t_obs, n, n, hp.n_en)
    c["hs_v"], c["hs_a"], c["vfc"], c["afc"] = hs_v, hs_a, vfc, afc

    # Graph convolution: self-loops, symmetric degree normalization on the
    # absolute adjacency (edge features are signed), per channel.
    at = afc + np.eye(n)[None, :, :, None]
    deg = np.abs(at).sum(axis=2)
    degc = np.maximum(deg, DEG_EPS)
    s = degc ** -0.5
    pvec = s * vfc
    q = np.einsum("tijc,tjc->tic", at, pvec)
    agg = s * q
    c.update(at=at, deg=deg, degc=degc, s=s, pvec=pvec, q=q, agg=agg)

    mx, _ = affine_forward(agg, params["stgcn.mix.w"], params["stgcn.mix.b"])
    tc, c["tconv"] = temporal_conv_forward(mx, params["stgcn.tconv.w"], params["stgcn.tconv.b"])
    ac, c["stg_act"] = silu_forward(tc)
    vstg = vfc + ac
    c["mx"], c["vstg"] = mx, vstg

    # Time extrapolation: time steps as channels, kernel over (feature, node).
    pad = (hp.n_te - 1) // 2
    x1 = vstg.transpose(0, 2, 1)  # [t_obs, n_en, n]
    c1, c["te1"] = conv2d_forward(x1, params["tecn.l1.w"], params["tecn.l1.b"], pad, pad)
    a1, c["te1_act"] = silu_forward(c1)
    c2, c["te2"] = conv2d_forward(a1, params["tecn.l2.w"], params["tecn.l2.b"], pad, pad)
    a2, c["te2_act"] = silu_forward(c2)
    c3, c["te3"] = conv2d_forward(a2, params["tecn.l3.w"], params["tecn.l3.b"], 0, pad)
    vp = c3.transpose(0, 2, 1)  # [t_pred, n, n_de]
    c["a1"], c["a2"], c["vp"] = a1, a2, vp

    # Bidirectional GRU over the prediction axis, then the candidate MLP.
    hs_f, c["gru_f"] = gru_forward(vp, params["dec.fw.h0"], _gru_view(params, "dec.fw"))
    hs_b_rev, c["gru_b"] = gru_forward(vp[::-1], params["dec.bw.h0"], _gru_view(params, "dec.bw"))
    sp = np.concatenate([hs_f, hs_b_rev[::-1]], axis=2)
    m1l, _ = affine_forward(sp, params["dec.mlp.l1.w"], params["dec.mlp.l1.b"])
    m1, c["m1_act"] = silu_forward(m1l)
    m2l, _ = affine_forward(m1, params["dec.mlp.l2.w"], params["dec.mlp.l2.b"])
    m2, c["m2_act"] = silu_forward(m2l)
    dx, _ = affine_forward(m2, params["dec.mlp.l3.w"], params["dec.mlp.l3.b"])
    c["sp"], c["m1"], c["m2"] = sp, m1, m2

    # Integrate displacements from the anchors, independently per candidate.
    dxk = dx.reshape(hp.t_pred, n, hp.k_candidates, 2).transpose(2, 0, 1, 3)
    cands = graph.anchors[None, None] + np.cumsum(dxk, axis=1)
    return cands, c


def backward(params: dict, hp: Hyper, cache: dict, dcands: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter, given d(loss)/d(candidates)."""
    c = cache
    t_pred = dcands.shape[1]
    n = dcands.shape[2]
    grads: dict[str, np.ndarray] = {}

    # Undo the cumulative sum: each displacement feeds all later positions.
    d_dxk = np.flip(np.cumsum(np.flip(dcands, axis=1), axis=1), axis=1)
    d_dx = d_dxk.transpose(1, 2, 0, 3).reshape(t_pred, n, 2 * hp.k_candidates)

    dm2, grads["dec.mlp.l3.w"], grads["dec.mlp.l3.b"] = affine_backward(d_dx, c["m2"], params["dec.mlp.l3.w"])
    dm2l = silu_backward(dm2, c["m2_act"])
    dm1, grads["dec.mlp.l2.w"], grads["dec.mlp.l2.b"] = affine_backward(dm2l, c["m1"], params["dec.mlp.l2.w"])
    dm1l = silu_backward(dm1, c["m1_act"])
    dsp, grads["dec.mlp.l1.w"], grads["dec.mlp.l1.b"] = affine_backward(dm1l, c["sp"], params["dec.mlp.l1.w"])

    g = hp.n_gru
    dvp_f, gf, grads["dec.fw.h0"] = gru_backward(dsp[:, :, :g], c["gru_f"])
    dvp_b_rev, gb, grads["dec.bw.h0"] = gru_backward(dsp[:, :, g:][::-1], c["gru_b"])
    for key in GRU_PARAM_KEYS:
        grads[f"dec.fw.{key}"] = gf[key]
        grads[f"dec.bw.{key}"] = gb[key]
    dvp = dvp_f + dvp_b_rev[::-1]

    dc3 = dvp.transpose(0, 2, 1)
    da2, grads["tecn.l3.w"], grads["tecn.l3.b"] = conv2d_backward(dc3, c["te3"], params["tecn.l3.w"])
    dc2 = silu_backward(da2, c["te2_act"])
    da1, grads["tecn.l2.w"], grads["tecn.l2.b"] = conv2d_backward(dc2, c["te2"], params["tecn.l2.w"])
    dc1 = silu_backward(da1, c["te1_act"])
    dx1, grads["tecn.l1.w"], grads["tecn.l1.b"] = conv2d_backward(dc1, c["te1"], params["tecn.l1.w"])
    dvstg = dx1.transpose(0, 2, 1)

    # STGCN block: residual plus the activated conv branch.
    dvfc = dvstg.copy()
    dtc = silu_backward(dvstg, c["stg_act"])
    dmx, grads["stgcn.tconv.w"], grads["stgcn.tconv.b"] = temporal_conv_backward(dtc, c["tconv"], params["stgcn.tconv.w"])
    dagg, grads["stgcn.mix.w"], grads["stgcn.mix.b"] = affine_backward(dmx, c["agg"], params["stgcn.mix.w"])

    dq = dagg * c["s"]
    ds = dagg * c["q"]
    dat = np.einsum("tic,tjc->tijc", dq, c["pvec"])
    dpvec = np.einsum("tijc,tic->tjc", c["at"], dq)
    dvfc += dpvec * c["s"]
    ds += dpvec * c["vfc"]
    ddeg = np.where(c["deg"] > DEG_EPS, ds * (-0.5) * c["degc"] ** -1.5, 0.0)
    dat += np.sign(c["at"]) * ddeg[:, :, None, :]
    dafc = dat  # the identity self-loop shift is constant

    t_obs = dafc.shape[0]
    dafc_flat = dafc.reshape(t_obs, n * n, hp.n_en)
    dhs_a, grads["comp.edge.proj.w"], grads["comp.edge.proj.b"] = affine_backward(
        dafc_flat, c["hs_a"], params["comp.edge.proj.w"])
    daf_flat, ga, grads["comp.edge.h0"] = gru_backward(dhs_a, c["gru_a"])
    daf = daf_flat.reshape(t_obs, n, n, hp.n_en)

    dhs_v, grads["comp.node.proj.w"], grads["comp.node.proj.b"] = affine_backward(
        dvfc, c["hs_v"], params["comp.node.proj.w"])
    dvf, gv, grads["comp.node.h0"] = gru_backward(dhs_v, c["gru_v"])
    for key in GRU_PARAM_KEYS:
        grads[f"comp.node.{key}"] = gv[key]
        grads[f"comp.edge.{key}"] = ga[key]

    graph = c["graph"]
    if hp.use_code:
        dne = dvf * c["noe"]
        dnoe = dvf * c["ne"]
        dee = daf * c["eoe"]
        deoe = daf * c["ee"]
        _, grads["embed.node_code.w"], grads["embed.node_code.b"] = affine_backward(
            dnoe, graph.node_codes, params["embed.node_code.w"])
        _, grads["embed.edge_code.w"], grads["embed.edge_code.b"] = affine_backward(
            deoe, graph.edge_codes, params["embed.edge_code.w"])
    else:
        dne, dee = dvf, daf
        grads["embed.node_code.w"] = np.zeros_like(params["embed.node_code.w"])
        grads["embed.node_code.b"] = np.zeros_like(params["embed.node_code.b"])
        grads["embed.edge_code.w"] = np.zeros_like(params["embed.edge_code.w"])
        grads["embed.edge_code.b"] = np.zeros_like(params["embed.edge_code.b"])
    _, grads["embed.node.w"], grads["embed.node.b"] = affine_backward(dne, graph.nodes, params["embed.node.w"])
    _, grads["embed.edge.w"], grads["embed.edge.b"] = affine_backward(dee, graph.edges, params["embed.edge.w"])
    return grads


def save_params(params: dict, hp: Hyper, path: str | Path, config: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "hyper": asdict(hp),
        "config": config or {},
    }
    np.savez(path, __manifest__=np.frombuffer(json.dumps(manifest).encode(), dtype=np.uint8), **params)


def load_params(path: str | Path) -> tuple[dict[str, np.ndarray], Hyper, dict]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    with np.load(path) as data:
        if "__manifest__" not in data:
            raise CheckpointError(f"{path}: missing checkpoint manifest")
        manifest = json.loads(bytes(data["__manifest__"]).decode())
        if manifest.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointError(f"{path}: unknown checkpoint format {manifest.get('format')!r}")
        hp = Hyper(**manifest["hyper"])
        want = expected_shapes(hp)
        params = {}
        diffs = []
        for name, shape in want.items():
            if name not in data:
                diffs.append(f"{name}: missing (expected {shape})")
                continue
            arr = np.asarray(data[name], dtype=np.float64)
            if arr.shape != shape:
                diffs.append(f"{name}: expected {shape}, found {arr.shape}")
            params[name] = arr
        extra = sorted(set(data.files) - set(want) - {"__manifest__"})
        diffs.extend(f"{name}: unexpected array" for name in extra)
        if diffs:
            raise CheckpointError(f"{path}: shape mismatch\n  " + "\n  ".join(diffs))
    return params, hp, manifest
