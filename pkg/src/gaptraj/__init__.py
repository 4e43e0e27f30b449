"""gaptraj: pedestrian trajectory forecasting from incomplete histories.

Scenes with occlusion gaps are sliced into windows, encoded as
spatio-temporal graphs with explicit observation-state codes, optionally
augmented with occupancy-grid obstacle nodes, and predicted by a small
graph/recurrent network trained with a masked best-of-K displacement loss.
"""
from .config import RunConfig
from .datasets import CorruptionSpec, SynthSpec, corrupt, generate_synthetic, load_scenes, save_scenes
from .errors import CheckpointError, ConfigError, DataError, TrainingDiverged
from .graph import STGraph, NodeKind, build_graph, inject_obstacles, order_nodes_dbscan
from .gridmap import OccupancyGrid, load_grid, min_distance, obstacles_near, occupied_points, rasterize, save_grid, thin_obstacles
from .metrics import ade, fde, min_k
from .network import Hyper, forward, init_params, load_params, save_params
from .predictor import PredictionResult, predict_two_pass, response_latency
from .scene import Mode, ObservedPosition, ObsState, Scene, Track, Window, is_eligible, materialize_mode, slice_windows
from .training import EvalCondition, EvalReport, TrainConfig, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "CorruptionSpec", "SynthSpec", "corrupt", "generate_synthetic", "load_scenes", "save_scenes",
    "CheckpointError", "ConfigError", "DataError", "TrainingDiverged",
    "STGraph", "NodeKind", "build_graph", "inject_obstacles", "order_nodes_dbscan",
    "OccupancyGrid", "load_grid", "min_distance", "obstacles_near", "occupied_points",
    "rasterize", "save_grid", "thin_obstacles",
    "ade", "fde", "min_k",
    "Hyper", "forward", "init_params", "load_params", "save_params",
    "PredictionResult", "predict_two_pass", "response_latency",
    "Mode", "ObservedPosition", "ObsState", "Scene", "Track", "Window",
    "is_eligible", "materialize_mode", "slice_windows",
    "EvalCondition", "EvalReport", "TrainConfig", "evaluate", "train",
]
