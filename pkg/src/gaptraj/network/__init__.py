from .model import (
    Hyper,
    backward,
    expected_shapes,
    forward,
    init_params,
    load_params,
    save_params,
)

__all__ = [
    "Hyper",
    "backward",
    "expected_shapes",
    "forward",
    "init_params",
    "load_params",
    "save_params",
]
