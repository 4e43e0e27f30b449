"""Declarative run configuration with defaults and strict key checking."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .network import Hyper
from .scene import Mode
from .training import TrainConfig

_MODES = {"filtration": Mode.FILTRATION, "pad": Mode.PAD, "f": Mode.FILTRATION, "p": Mode.PAD}


@dataclass
class RunConfig:
    # windowing
    t_obs: int = 8
    t_pred: int = 12
    stride: int = 1
    frame_rate_hz: float = 2.5
    # network
    n_en: int = 9
    n_de: int = 7
    n_gru: int = 64
    n_stg: int = 7
    n_te: int = 3
    k_candidates: int = 3
    # distances
    od: float = 0.8
    ad: float = 1.0
    fd: float = 1.0
    dbscan_min_pts: int = 1
    # rasterization
    resolution: float = 0.2
    z_min: float = 0.2
    z_max: float = 2.0
    count_threshold: int = 3
    # training
    learning_rate: float = 0.001
    batch_size: int = 16
    epochs: int = 200
    mode: str = "pad"
    no_obs: bool = False
    no_code: bool = False
    no_clu: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be one of {sorted(_MODES)}, got {self.mode!r}")

    @property
    def mode_enum(self) -> Mode:
        return _MODES[self.mode]

    def hyper(self) -> Hyper:
        return Hyper(
            t_obs=self.t_obs,
            t_pred=self.t_pred,
            n_en=self.n_en,
            n_de=self.n_de,
            n_gru=self.n_gru,
            n_stg=self.n_stg,
            n_te=self.n_te,
            k_candidates=self.k_candidates,
            use_code=not self.no_code,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            mode=self.mode_enum,
            no_obs=self.no_obs,
            no_code=self.no_code,
            no_clu=self.no_clu,
            seed=self.seed,
            od=self.od,
            ad=self.ad,
            fd=self.fd,
            min_pts=self.dbscan_min_pts,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)
