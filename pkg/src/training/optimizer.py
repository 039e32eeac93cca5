import numpy as np
from typing import Dict
from layers import Parameter


def noam_rate(step: int, dim: int, warmup_steps: int, scale: float = 1.0) -> float:
    """scale * dim^-0.5 * min(step^-0.5, step * warmup^-1.5), with steps counted from 1."""
    step = max(step, 1)
    return scale * dim ** -0.5 * min(step ** -0.5, step * warmup_steps ** -1.5)


def clip_grad_norm(params: Dict[str, Parameter], max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm; returns the norm before clipping."""
    grads = [p.grad for p in params.values() if p.grad is not None]
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if max_norm > 0 and total > max_norm:
        factor = max_norm / (total + 1e-12)
        for p in params.values():
            if p.grad is not None:
                p.grad = p.grad * factor
    return total


class Adam:
    def __init__(
        self,
        params: Dict[str, Parameter],
        dim: int,
        beta1: float = 0.9,
        beta2: float = 0.98,
        eps: float = 1e-9,
        warmup_steps: int = 400,
        lr_scale: float = 1.0,
    ):
        self.params = params
        self.dim = dim
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.warmup_steps = warmup_steps
        self.lr_scale = lr_scale
        self.step_count = 0
        self.m = {name: np.zeros_like(p.values) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.values) for name, p in params.items()}

    @property
    def learning_rate(self) -> float:
        return noam_rate(self.step_count + 1, self.dim, self.warmup_steps, self.lr_scale)

    def step(self):
        lr = self.learning_rate
        self.step_count += 1
        bias1 = 1.0 - self.beta1 ** self.step_count
        bias2 = 1.0 - self.beta2 ** self.step_count
        for name, param in self.params.items():
            if param.grad is None:
                continue
            g = param.grad
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            update = (self.m[name] / bias1) / (np.sqrt(self.v[name] / bias2) + self.eps)
            param.values -= lr * update

    def zero_grad(self):
        for param in self.params.values():
            param.zero_grad()
