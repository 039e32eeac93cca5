import numpy as np
from typing import Tuple
from autograd.tensor import Tensor, as_tensor
from autograd.functional import moments
from layers import Linear, Module

SALN_EPSILON = 1e-5


class StyleAdaptiveLayerNorm(Module):
    """
    Layer norm whose gain and bias are predicted from a speaker embedding.

    SALN(i, s) = g(s) * (i - mean_H(i)) / std_H(i) + b(s). The affine head starts at g = 1,
    b = 0 for every s: its weights are trained but its bias is initialized to ones for the
    gain half and zeros for the bias half.
    """

    def __init__(self, dim: int, style_dim: int, rng: np.random.Generator, eps: float = SALN_EPSILON):
        self.dim = dim
        self.eps = eps
        self.affine = Linear(style_dim, 2 * dim, rng)
        self.affine.bias.values[:dim] = 1.0

    def gain_and_bias(self, s: Tensor) -> Tuple[Tensor, Tensor]:
        params = self.affine(as_tensor(s))
        return params[: self.dim], params[self.dim:]

    def forward(self, i: Tensor, s: Tensor) -> Tensor:
        i = as_tensor(i)
        mean, var = moments(i, axis=-1)
        x = (i - mean) / (var + self.eps).sqrt()
        g, b = self.gain_and_bias(s)
        return x * g + b


def saln(layer: StyleAdaptiveLayerNorm, i: Tensor, s: Tensor) -> Tensor:
    return layer(i, s)
