import numpy as np
from utils.errors import ConfigError
from autograd.tensor import Tensor
from layers.module import Module
from layers.linear import Dropout, LayerNorm, Linear


def sinusoid_encoding(length: int, dim: int) -> np.ndarray:
    """Sinusoidal position table of shape (length, dim): sin on even columns, cos on odd."""
    position = np.arange(length)[:, None]
    rate = 1.0 / np.power(10000.0, (2 * (np.arange(dim) // 2)) / dim)
    table = position * rate[None, :]
    table[:, 0::2] = np.sin(table[:, 0::2])
    table[:, 1::2] = np.cos(table[:, 1::2])
    return table


class MultiHeadAttention(Module):
    def __init__(self, dim: int, n_heads: int, rng: np.random.Generator, dropout: float = 0.1):
        if n_heads < 1 or dim % n_heads:
            raise ConfigError(f"hidden width {dim} is not divisible into {n_heads} heads")
        self.dim = dim
        self.n_heads = n_heads
        self.head_dim = dim // n_heads
        self.query = Linear(dim, dim, rng)
        # a key bias only shifts each query's scores uniformly, which softmax ignores
        self.key = Linear(dim, dim, rng, bias=False)
        self.value = Linear(dim, dim, rng)
        self.output = Linear(dim, dim, rng)
        self.dropout = Dropout(dropout)

    def _split(self, x: Tensor) -> Tensor:
        length = x.shape[0]
        return x.reshape(length, self.n_heads, self.head_dim).transpose(1, 0, 2)

    def forward(self, x: Tensor) -> Tensor:
        """Scaled dot-product self-attention over a (T, D) sequence."""
        length = x.shape[0]
        q = self._split(self.query(x))
        k = self._split(self.key(x))
        v = self._split(self.value(x))
        scores = (q @ k.transpose(0, 2, 1)) / np.sqrt(self.head_dim)
        weights = self.dropout(scores.softmax(axis=-1))
        context = (weights @ v).transpose(1, 0, 2).reshape(length, self.dim)
        return self.output(context)


class PositionwiseFeedForward(Module):
    def __init__(self, dim: int, hidden: int, rng: np.random.Generator):
        self.inner = Linear(dim, hidden, rng)
        self.outer = Linear(hidden, dim, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.outer(self.inner(x).relu())


class TransformerEncoderBlock(Module):
    """Post-norm encoder block: self-attention and a position-wise FFN, each with residual + LayerNorm."""

    def __init__(self, dim: int, n_heads: int, ffn_dim: int, rng: np.random.Generator, dropout: float = 0.1):
        self.attention = MultiHeadAttention(dim, n_heads, rng, dropout)
        self.attention_norm = LayerNorm(dim)
        self.ffn = PositionwiseFeedForward(dim, ffn_dim, rng)
        self.ffn_norm = LayerNorm(dim)
        self.dropout = Dropout(dropout)

    def forward(self, x: Tensor) -> Tensor:
        x = self.attention_norm(x + self.dropout(self.attention(x)))
        return self.ffn_norm(x + self.dropout(self.ffn(x)))
