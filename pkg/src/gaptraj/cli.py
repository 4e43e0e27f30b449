"""Command-line entry points.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 training
divergence.  Every artifact records the run configuration, either embedded
(checkpoints, reports, JSONL headers) or as a sidecar ``*.meta.json`` next to
byte-pure formats (scene files, grids).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .benchmark import make_benchmark
from .config import RunConfig
from .datasets import CorruptionSpec, corrupt, load_scenes, save_scenes
from .errors import CheckpointError, ConfigError, DataError, TrainingDiverged
from .gridmap import load_grid, load_point_cloud, rasterize, save_grid
from .network import load_params, save_params
from .plotting import plot_predictions
from .predictor import predict_two_pass, read_predictions, write_predictions
from .scene import Mode
from .training import EvalCondition, build_training_windows, evaluate, train, write_history

_MODE_CHARS = {"f": Mode.FILTRATION, "p": Mode.PAD}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage is 1 here
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_meta(path: Path, config: RunConfig, **extra) -> None:
    meta = {"_config": config.to_dict(), **extra}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    mode_arg = getattr(args, "mode", None)
    if mode_arg:
        pairs = mode_arg.split(",")
        for pair in pairs:
            _validate_mode_pair(pair)
        cfg.mode = _MODE_CHARS[pairs[0][0]].value
    for flag in getattr(args, "ablate", None) or []:
        setattr(cfg, f"no_{flag}", True)
    return cfg


def _validate_mode_pair(pair: str) -> None:
    if len(pair) != 2 or any(ch not in _MODE_CHARS for ch in pair):
        raise ConfigError(f"mode must be two of f/p (e.g. ff, pp, pf), got {pair!r}")
    if pair not in ("ff", "pp", "pf"):
        raise ConfigError(f"supported mode pairs are ff, pp, pf; got {pair!r}")


def _dataset_pair(args):
    obs = load_scenes(args.dataset)
    lbl = load_scenes(args.labels) if getattr(args, "labels", None) else obs
    return obs, lbl


def _maybe_grid(args):
    return load_grid(args.grid) if getattr(args, "grid", None) else None


def cmd_ingest(args) -> int:
    cfg = _load_config(args)
    scenes = load_scenes(args.input, frame_rate_hz=cfg.frame_rate_hz)
    save_scenes(scenes, args.out)
    _write_meta(Path(args.out), cfg, scenes=len(scenes))
    print(f"ingested {len(scenes)} scene(s) -> {args.out}")
    return 0


def cmd_make_grid(args) -> int:
    cfg = _load_config(args)
    cloud = load_point_cloud(args.cloud)
    if cloud.shape[0] == 0:
        print("warning: empty point cloud, writing a 0x0 grid", file=sys.stderr)
    grid = rasterize(cloud, resolution=cfg.resolution, z_band=(cfg.z_min, cfg.z_max),
                     count_threshold=cfg.count_threshold)
    save_grid(grid, args.out)
    _write_meta(Path(args.out), cfg, occupied=int(grid.cells.sum()))
    print(f"grid {grid.width}x{grid.height}, {int(grid.cells.sum())} occupied cell(s) -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bench = make_benchmark(
        n_train_scenes=args.scenes, n_test_scenes=args.test_scenes,
        seed=cfg.seed, resolution=cfg.resolution,
    )
    save_scenes(bench.train_scenes, out / "train.jsonl")
    save_scenes(bench.test_scenes, out / "test.jsonl")
    save_grid(bench.grid, out / "map.ogrid")
    _write_meta(out / "world", cfg, train_scenes=args.scenes, test_scenes=args.test_scenes)
    print(f"wrote train.jsonl ({args.scenes} scenes), test.jsonl ({args.test_scenes}), map.ogrid -> {out}")
    return 0


def cmd_corrupt(args) -> int:
    cfg = _load_config(args)
    scenes = load_scenes(args.dataset)
    spec = CorruptionSpec(drop_fraction=args.drop_fraction, seed=cfg.seed)
    save_scenes(corrupt(scenes, spec), f"{args.out}.obs")
    save_scenes(scenes, f"{args.out}.lbl")
    _write_meta(Path(f"{args.out}.obs"), cfg, drop_fraction=args.drop_fraction)
    print(f"wrote {args.out}.obs (observation view) and {args.out}.lbl (label view)")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    obs, lbl = _dataset_pair(args)
    grid = _maybe_grid(args)
    windows = build_training_windows(obs, lbl, cfg.mode_enum, cfg.t_obs, cfg.t_pred, cfg.stride)
    if not windows:
        raise DataError("dataset yields no training windows")
    grids = {s.scene_id: grid for s in obs} if grid is not None else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params, history = train(windows, grids, cfg.train_config(), cfg.hyper(),
                            checkpoint_dir=out, log_every=args.log_every)
    save_params(params, cfg.hyper(), out / "checkpoint.npz", config=cfg.to_dict())
    write_history(history, out / "history.jsonl", config=cfg.to_dict())
    print(f"trained {cfg.epochs} epoch(s) on {len(windows)} window(s); "
          f"final loss {history[-1]['loss']:.4f} -> {out / 'checkpoint.npz'}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    params, hp, _ = load_params(args.checkpoint)
    obs, lbl = _dataset_pair(args)
    grid = _maybe_grid(args)
    grids = {s.scene_id: grid for s in obs} if grid is not None else None
    conditions = []
    for pair in (args.mode or "pp").split(","):
        _validate_mode_pair(pair)
        conditions.append(EvalCondition(args.dataset_name, pair[0], _MODE_CHARS[pair[1]]))
    report = evaluate(params, (obs, lbl), grids, conditions, hp, cfg.train_config(),
                      t_obs=cfg.t_obs, t_pred=cfg.t_pred, stride=cfg.stride)
    report.header["config"] = cfg.to_dict()
    Path(args.out).write_text(report.to_json())
    print(report.summary())
    print(f"report -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    cfg = _load_config(args)
    params, hp, _ = load_params(args.checkpoint)
    obs, lbl = _dataset_pair(args)
    grid = _maybe_grid(args)
    test_mode = cfg.mode_enum
    if args.mode:
        _validate_mode_pair(args.mode)
        test_mode = _MODE_CHARS[args.mode[1]]
    windows = build_training_windows(obs, lbl, test_mode, cfg.t_obs, cfg.t_pred, cfg.stride)
    results = []
    for win in windows:
        results.append(predict_two_pass(
            win, grid, params, hp, mode=test_mode,
            od=cfg.od, ad=cfg.ad, fd=cfg.fd, min_pts=cfg.dbscan_min_pts,
            no_obs=cfg.no_obs, no_clu=cfg.no_clu,
        ))
    write_predictions(results, args.out, config=cfg.to_dict())
    print(f"predicted {len(results)} window(s) -> {args.out}")
    return 0


def cmd_plot(args) -> int:
    cfg = _load_config(args)
    records = read_predictions(args.predictions)
    scenes = load_scenes(args.dataset)
    grid = _maybe_grid(args)
    written = plot_predictions(records, scenes, grid, args.out,
                               t_obs=cfg.t_obs, t_pred=cfg.t_pred, config=cfg.to_dict())
    print(f"wrote {len(written)} image(s) -> {args.out}")
    return 0


def _add_common(p, *, config=True, seed=True, mode=False, ablate=False):
    if config:
        p.add_argument("--config", help="JSON run configuration (defaults otherwise)")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    if mode:
        p.add_argument("--mode", help="train-test mode pair: ff, pp or pf")
    if ablate:
        p.add_argument("--ablate", action="append", choices=["obs", "code", "clu"],
                       help="disable a module (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gaptraj",
                     description="Trajectory forecasting from incomplete pedestrian histories.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[], help="validate and canonicalize a scene file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("make-grid", help="rasterize an x/y/z point cloud into an occupancy grid")
    p.add_argument("--cloud", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_make_grid)

    p = sub.add_parser("synth", help="generate the synthetic benchmark world")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--scenes", type=int, default=6)
    p.add_argument("--test-scenes", type=int, default=3)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("corrupt", help="derive an occlusion-corrupted observation view")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output stem; writes <out>.obs and <out>.lbl")
    p.add_argument("--drop-fraction", type=float, default=0.10)
    _add_common(p)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--dataset", required=True, help="observation-view scene file")
    p.add_argument("--labels", help="label-view scene file (defaults to --dataset)")
    p.add_argument("--grid", help="occupancy grid file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--log-every", type=int, default=0)
    _add_common(p, mode=True, ablate=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint under mode conditions")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--labels")
    p.add_argument("--grid")
    p.add_argument("--dataset-name", default="clean")
    p.add_argument("--out", required=True, help="report JSON path")
    _add_common(p, mode=True, ablate=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="write prediction records for a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--labels")
    p.add_argument("--grid")
    p.add_argument("--out", required=True)
    _add_common(p, mode=True, ablate=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("plot", help="render history/label/prediction images")
    p.add_argument("--predictions", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--grid")
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"gaptraj: config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, CheckpointError) as exc:
        print(f"gaptraj: data error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"gaptraj: training diverged: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
