"""Adam optimizer with bias correction and inverse-time learning-rate decay."""
from __future__ import annotations

import numpy as np

from .tensor import DimensionError, Tensor

__all__ = ["Adam"]


class Adam:
    """Standard Adam over a fixed parameter list.

    The effective rate at update ``t`` (1-based count of batch updates) is
    ``lr / (1 + decay * t)``. Moment buffers always mirror the parameter
    shapes; ``step`` consumes ``param.grad`` and treats a missing gradient
    as zero.
    """

    def __init__(
        self,
        params: list[Tensor],
        lr: float = 0.001,
        decay: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = float(lr)
        self.decay = float(decay)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def effective_lr(self, t: int) -> float:
        return self.lr / (1.0 + self.decay * t)

    def step(self) -> None:
        self.t += 1
        lr_t = self.effective_lr(self.t)
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if m.shape != p.data.shape:
                raise DimensionError(
                    f"adam state shape {m.shape} does not match parameter {p.data.shape}"
                )
            g = p.grad if p.grad is not None else 0.0
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p.data -= lr_t * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
