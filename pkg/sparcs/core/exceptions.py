"""Exception hierarchy shared by every SPARCS module."""


class SparcsError(Exception):
    """Base class for all SPARCS errors."""


class DimensionError(SparcsError, ValueError):
    """Operand shapes do not agree."""


class DegeneracyError(SparcsError, ValueError):
    """A factorization or statistic hit a (numerically) singular case."""


class CapacityError(SparcsError, OverflowError):
    """Exact integer arithmetic would leave its supported range."""


class ConsistencyError(SparcsError, ValueError):
    """Objects that must belong together (params, traces, flags) disagree."""


class StructuralError(SparcsError):
    """An operation would remove a part of the network that must survive."""


class UnsupportedShapeError(SparcsError, ValueError):
    """The operation is only defined for a specific architecture shape."""


class InputError(SparcsError, ValueError):
    """Caller supplied empty or otherwise unusable input."""


class ParseError(SparcsError, ValueError):
    """A file could not be parsed; the message names the offending line."""


class ConfigError(SparcsError, ValueError):
    """Experiment configuration is invalid."""


class NonFiniteError(SparcsError, FloatingPointError):
    """A NaN or Inf appeared where only finite values are allowed."""


class TrainingDivergedError(NonFiniteError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, batch: int, value: float):
        self.epoch = epoch
        self.batch = batch
        self.value = value
        super().__init__(f"Loss became {value} at epoch {epoch}, batch {batch}")
