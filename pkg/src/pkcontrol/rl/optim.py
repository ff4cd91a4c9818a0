"""First-order optimizers over flat parameter vectors.

Each parameter group (network weights, ψ, critic weights) owns one optimizer.
``step`` takes the gradient of a loss to be minimized and returns the new
parameters.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import FloatArray


def clip_grad_norm(grad: FloatArray, max_norm: float) -> tuple[FloatArray, float]:
    """Rescale ``grad`` so its Euclidean norm is at most ``max_norm``.

    Returns:
        The clipped gradient and the norm before clipping.
    """
    norm = float(np.linalg.norm(grad))
    if norm > max_norm > 0:
        return grad * (max_norm / norm), norm
    return grad, norm


class Optimizer(ABC):
    def __init__(self, size: int, lr: float, max_grad_norm: float | None = None) -> None:
        if lr < 0:
            raise InvalidParameterError(f"learning rate must be nonnegative, got {lr}")
        self.size = size
        self.lr = lr
        self.max_grad_norm = max_grad_norm
        self.last_grad_norm = 0.0

    def step(self, params: FloatArray, grad: FloatArray) -> FloatArray:
        if params.shape != (self.size,) or grad.shape != (self.size,):
            raise InvalidParameterError(
                f"optimizer holds {self.size} parameters, got {params.shape} and {grad.shape}"
            )
        if self.max_grad_norm is not None:
            grad, self.last_grad_norm = clip_grad_norm(grad, self.max_grad_norm)
        else:
            self.last_grad_norm = float(np.linalg.norm(grad))
        if self.lr == 0.0:
            return params.copy()
        return params - self._direction(grad)

    @abstractmethod
    def _direction(self, grad: FloatArray) -> FloatArray: ...


class SGD(Optimizer):
    def _direction(self, grad: FloatArray) -> FloatArray:
        return self.lr * grad


class Adam(Optimizer):
    def __init__(
        self,
        size: int,
        lr: float,
        max_grad_norm: float | None = None,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ) -> None:
        super().__init__(size, lr, max_grad_norm)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self._m = np.zeros(size)
        self._v = np.zeros(size)
        self._t = 0

    def _direction(self, grad: FloatArray) -> FloatArray:
        self._t += 1
        self._m = self.beta1 * self._m + (1.0 - self.beta1) * grad
        self._v = self.beta2 * self._v + (1.0 - self.beta2) * grad * grad
        m_hat = self._m / (1.0 - self.beta1**self._t)
        v_hat = self._v / (1.0 - self.beta2**self._t)
        return self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(
    name: str, size: int, lr: float, max_grad_norm: float | None = None
) -> Optimizer:
    """Optimizer by configuration name (``adam`` or ``sgd``)."""
    if name == "adam":
        return Adam(size, lr, max_grad_norm)
    if name == "sgd":
        return SGD(size, lr, max_grad_norm)
    raise InvalidParameterError(f"unknown optimizer '{name}'")
