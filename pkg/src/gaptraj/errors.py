"""Exception types shared across the package."""


class DataError(ValueError):
    """A data file or record violates the canonical format."""


class ConfigError(ValueError):
    """A run configuration is malformed (unknown key, bad value)."""


class CheckpointError(ValueError):
    """A parameter checkpoint does not match the expected shapes."""


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
