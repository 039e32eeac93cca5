import numpy as np
from typing import Optional, Sequence
from autograd.tensor import Tensor
from layers import Conv1d, Dropout, LayerNorm, Module, MultiHeadAttention
from backbone.saln import StyleAdaptiveLayerNorm


class ConvFeedForward(Module):
    """Two 1-D convolutions over time (kernels 9 and 1 by default) with a ReLU between."""

    def __init__(self, dim: int, filter_size: int, kernel_sizes: Sequence[int], rng: np.random.Generator):
        self.inner = Conv1d(dim, filter_size, kernel_sizes[0], rng)
        self.outer = Conv1d(filter_size, dim, kernel_sizes[1], rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.outer(self.inner(x.T).relu()).T


class FFTBlock(Module):
    """
    Feed-forward Transformer block: self-attention and a convolutional FFN, each followed by
    a residual add and a norm. With a style_dim the norms become SALN conditioned on s.
    """

    def __init__(
        self,
        dim: int,
        n_heads: int,
        filter_size: int,
        kernel_sizes: Sequence[int],
        rng: np.random.Generator,
        dropout: float = 0.1,
        style_dim: Optional[int] = None,
    ):
        self.conditional = style_dim is not None
        self.attention = MultiHeadAttention(dim, n_heads, rng, dropout)
        self.ffn = ConvFeedForward(dim, filter_size, kernel_sizes, rng)
        if self.conditional:
            self.attention_norm = StyleAdaptiveLayerNorm(dim, style_dim, rng)
            self.ffn_norm = StyleAdaptiveLayerNorm(dim, style_dim, rng)
        else:
            self.attention_norm = LayerNorm(dim)
            self.ffn_norm = LayerNorm(dim)
        self.dropout = Dropout(dropout)

    def _norm(self, norm, x: Tensor, s: Optional[Tensor]) -> Tensor:
        return norm(x, s) if self.conditional else norm(x)

    def forward(self, x: Tensor, s: Optional[Tensor] = None) -> Tensor:
        x = self._norm(self.attention_norm, x + self.dropout(self.attention(x)), s)
        return self._norm(self.ffn_norm, x + self.dropout(self.ffn(x)), s)
