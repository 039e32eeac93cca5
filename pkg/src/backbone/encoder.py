import numpy as np
from typing import Optional, Sequence
from autograd.tensor import Tensor
from layers import Embedding, Module, sinusoid_encoding
from backbone.blocks import FFTBlock


class TextEncoder(Module):
    """Phoneme embedding + sinusoidal positions -> stack of FFT blocks."""

    def __init__(
        self,
        vocab_size: int,
        rng: np.random.Generator,
        dim: int = 128,
        n_layers: int = 4,
        n_heads: int = 2,
        filter_size: int = 256,
        kernel_sizes: Sequence[int] = (9, 1),
        dropout: float = 0.1,
    ):
        self.dim = dim
        self.embedding = Embedding(vocab_size, dim, rng)
        self.blocks = [FFTBlock(dim, n_heads, filter_size, kernel_sizes, rng, dropout) for _ in range(n_layers)]

    def forward(self, ids) -> Tensor:
        x = self.embedding(ids)
        x = x + sinusoid_encoding(x.shape[0], self.dim)
        for block in self.blocks:
            x = block(x)
        return x


class FusionEncoder(Module):
    """FFT blocks that mix the speaker embedding into the text hidden sequence through SALN."""

    def __init__(
        self,
        rng: np.random.Generator,
        dim: int = 128,
        n_layers: int = 1,
        n_heads: int = 2,
        filter_size: int = 256,
        kernel_sizes: Sequence[int] = (9, 1),
        dropout: float = 0.1,
        style_dim: Optional[int] = 128,
    ):
        self.blocks = [
            FFTBlock(dim, n_heads, filter_size, kernel_sizes, rng, dropout, style_dim) for _ in range(n_layers)
        ]

    def forward(self, h: Tensor, s: Tensor) -> Tensor:
        for block in self.blocks:
            h = block(h, s)
        return h


def text_encode(encoder: TextEncoder, ids) -> Tensor:
    return encoder(ids)


def fusion_encode(encoder: FusionEncoder, h: Tensor, s: Tensor) -> Tensor:
    return encoder(h, s)
