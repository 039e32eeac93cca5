import numpy as np
from typing import Optional
from utils.errors import DimensionError, UsageError
from autograd.tensor import Tensor, as_tensor
from autograd.functional import PaddingMode, conv1d, moments, take
from layers.module import Module, Parameter, glorot_uniform


class Linear(Module):
    """Affine map x @ W + b over the last axis; W is stored as (in, out)."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = glorot_uniform(rng, (in_dim, out_dim), in_dim, out_dim)
        self.bias = Parameter(np.zeros(out_dim)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.in_dim:
            raise DimensionError(f"Linear expects last axis {self.in_dim}", x.shape, self.weight.shape)
        lead = x.shape[:-1]
        out = x.reshape(-1, self.in_dim) @ self.weight
        if self.bias is not None:
            out = out + self.bias
        return out.reshape(lead + (self.out_dim,))


class Conv1d(Module):
    """Convolution over a (C_in, W) map with a (C_out, 1) bias column."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: PaddingMode = "same",
        bias: bool = True,
    ):
        self.stride = stride
        self.padding = padding
        self.kernel_size = kernel_size
        self.weight = glorot_uniform(
            rng, (out_channels, in_channels, kernel_size),
            in_channels * kernel_size, out_channels * kernel_size,
        )
        self.bias = Parameter(np.zeros((out_channels, 1))) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        out = conv1d(x, self.weight, self.stride, self.padding)
        return out if self.bias is None else out + self.bias


class Embedding(Module):
    def __init__(self, num_embeddings: int, dim: int, rng: np.random.Generator):
        self.num_embeddings = num_embeddings
        self.weight = Parameter(rng.normal(0.0, dim ** -0.5, size=(num_embeddings, dim)))

    def forward(self, ids) -> Tensor:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size == 0:
            raise UsageError("Embedding lookup needs at least one id")
        bad = ids[(ids < 0) | (ids >= self.num_embeddings)]
        if bad.size:
            raise UsageError(f"Id {int(bad[0])} is outside the vocabulary of size {self.num_embeddings}")
        return take(self.weight, ids, axis=0)


class LayerNorm(Module):
    """Normalization over the last axis with learned gain and bias."""

    def __init__(self, dim: int, eps: float = 1e-5):
        self.eps = eps
        self.gain = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))

    def forward(self, x: Tensor) -> Tensor:
        mean, var = moments(x, axis=-1)
        return (x - mean) / (var + self.eps).sqrt() * self.gain + self.bias


class Dropout(Module):
    """Inverted dropout; identity outside training or when no generator is attached."""

    def __init__(self, p: float):
        if not 0.0 <= p < 1.0:
            raise UsageError(f"dropout probability must lie in [0, 1), got {p}")
        self.p = p
        self.rng: Optional[np.random.Generator] = None

    def forward(self, x: Tensor) -> Tensor:
        if not self.training or self.p == 0.0 or self.rng is None:
            return x
        keep = self.rng.random(x.shape) >= self.p
        return x * (keep / (1.0 - self.p))
