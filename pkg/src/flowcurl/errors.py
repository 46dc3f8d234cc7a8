"""Exception types shared across the package."""

from __future__ import annotations


class FlowcurlError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(FlowcurlError, ValueError):
    """A value is outside its mathematical parameter domain."""


class DomainError(FlowcurlError, ValueError):
    """A function argument is outside the function's domain (e.g. t not in [0,1])."""


class ShapeError(FlowcurlError, ValueError):
    """Array dimensions are inconsistent."""


class InputError(FlowcurlError, ValueError):
    """Non-finite or otherwise unusable numeric input."""


class OptimizerError(FlowcurlError, RuntimeError):
    """The optimizer refused a step (e.g. non-finite gradients)."""


class DivergenceError(FlowcurlError, RuntimeError):
    """ODE integration produced non-finite or runaway state."""

    def __init__(self, step: int, row: int | None = None):
        msg = f"solver state diverged at step {step}"
        if row is not None:
            msg += f" (row {row})"
        super().__init__(msg)
        self.step = step
        self.row = row


class TrainingAborted(FlowcurlError, RuntimeError):
    """Training hit a non-finite loss; carries a diagnostic snapshot."""

    def __init__(self, step: int, t_bin: int, param_norm: float):
        super().__init__(f"non-finite loss at step {step} "
                         f"(t-bin {t_bin}, parameter norm {param_norm:.6g})")
        self.step = step
        self.t_bin = t_bin
        self.param_norm = param_norm


class InsufficientDataError(FlowcurlError, ValueError):
    """A statistic was requested over unpopulated data."""


class ConfigError(FlowcurlError, ValueError):
    """Malformed configuration text or descriptor."""


class CheckpointError(FlowcurlError, ValueError):
    """Checkpoint file is malformed, has a bad magic, or fails its CRC."""
