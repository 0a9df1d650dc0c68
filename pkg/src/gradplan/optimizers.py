"""Per-variable gradient descent update rules.

All optimizers update the action array in place and keep accumulators shaped
like the action tensor.  RMSProp follows the 0.9/0.1 decaying mean-square
form with epsilon inside the square root; the decay is deliberately not
configurable.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, StepError


class Optimizer:
    """Base update rule; subclasses fill in ``_update``."""

    algorithm = "base"
    default_epsilon = 0.0

    def __init__(self, rate: float, epsilon: float | None = None):
        if not rate > 0:
            raise ConfigError(f"optimization rate must be positive, got {rate}")
        self.rate = float(rate)
        self.epsilon = float(
            self.default_epsilon if epsilon is None else epsilon
        )

    def step(self, actions: np.ndarray, grads: np.ndarray) -> np.ndarray:
        if actions.shape != grads.shape:
            raise StepError(
                f"gradient shape {grads.shape} != action shape {actions.shape}"
            )
        if not np.isfinite(grads).all():
            raise StepError("non-finite gradient; epoch aborted")
        self._update(actions, grads)
        return actions

    def _update(self, actions, grads):
        raise NotImplementedError


class SGD(Optimizer):
    algorithm = "sgd"

    def _update(self, actions, grads):
        actions -= self.rate * grads


class RMSProp(Optimizer):
    algorithm = "rmsprop"
    default_epsilon = 1e-10

    def __init__(self, rate, epsilon=None):
        super().__init__(rate, epsilon)
        self.G = None

    def _update(self, actions, grads):
        if self.G is None:
            self.G = np.zeros_like(actions)
        self.G *= 0.9
        self.G += 0.1 * grads * grads
        actions -= self.rate * grads / np.sqrt(self.G + self.epsilon)


class Adagrad(Optimizer):
    algorithm = "adagrad"
    default_epsilon = 1e-10

    def __init__(self, rate, epsilon=None):
        super().__init__(rate, epsilon)
        self.G = None

    def _update(self, actions, grads):
        if self.G is None:
            self.G = np.zeros_like(actions)
        self.G += grads * grads
        actions -= self.rate * grads / np.sqrt(self.G + self.epsilon)


class Adadelta(Optimizer):
    algorithm = "adadelta"
    default_epsilon = 1e-6
    rho = 0.9

    def __init__(self, rate, epsilon=None):
        super().__init__(rate, epsilon)
        self.avg_sq_grad = None
        self.avg_sq_update = None

    def _update(self, actions, grads):
        if self.avg_sq_grad is None:
            self.avg_sq_grad = np.zeros_like(actions)
            self.avg_sq_update = np.zeros_like(actions)
        self.avg_sq_grad *= self.rho
        self.avg_sq_grad += (1.0 - self.rho) * grads * grads
        update = grads * np.sqrt(
            (self.avg_sq_update + self.epsilon) / (self.avg_sq_grad + self.epsilon)
        )
        self.avg_sq_update *= self.rho
        self.avg_sq_update += (1.0 - self.rho) * update * update
        actions -= self.rate * update


class Adam(Optimizer):
    algorithm = "adam"
    default_epsilon = 1e-8
    beta1 = 0.9
    beta2 = 0.999

    def __init__(self, rate, epsilon=None):
        super().__init__(rate, epsilon)
        self.m = None
        self.v = None
        self.t = 0

    def _update(self, actions, grads):
        if self.m is None:
            self.m = np.zeros_like(actions)
            self.v = np.zeros_like(actions)
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grads
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * grads * grads
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        actions -= self.rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


OPTIMIZERS = {
    cls.algorithm: cls for cls in (SGD, RMSProp, Adagrad, Adadelta, Adam)
}


def make_optimizer(name: str, rate: float, epsilon: float | None = None) -> Optimizer:
    try:
        cls = OPTIMIZERS[name.lower()]
    except KeyError:
        raise ConfigError(
            f"unknown optimizer {name!r}; expected one of {sorted(OPTIMIZERS)}"
        ) from None
    return cls(rate, epsilon)
