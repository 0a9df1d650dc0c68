"""Exception types shared across the package."""


class GradplanError(Exception):
    """Base class for all package errors."""


class ConfigError(GradplanError):
    """Invalid configuration: unknown names, malformed values, bad bounds."""


class TapeError(GradplanError):
    """Graph construction error: arity mismatch or operand out of range."""


class StateError(GradplanError):
    """Operation called out of order, e.g. backward before forward."""


class EvalError(GradplanError):
    """Evaluation cannot proceed, e.g. unbound or non-finite inputs."""


class NumericalError(GradplanError):
    """Base class for runtime numerical failures (CLI exit code 3)."""


class NonFiniteError(NumericalError):
    """A forward pass produced a non-finite intermediate value.

    Carries the first offending node id in ``node``.
    """

    def __init__(self, node, message=None):
        self.node = node
        super().__init__(message or f"non-finite value at tape node {node}")


class RolloutError(NumericalError):
    """A rollout produced a non-finite state; names instance and step."""

    def __init__(self, instance, step, message=None):
        self.instance = instance
        self.step = step
        super().__init__(
            message
            or f"non-finite value in rollout at instance {instance}, step {step}"
        )


class StepError(NumericalError):
    """An optimizer step received non-finite gradients; epoch aborted."""


class OracleError(GradplanError):
    """The finite-difference oracle hit a non-finite evaluation."""
