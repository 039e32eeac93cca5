import numpy as np
from typing import Optional, Sequence
from autograd.tensor import Tensor
from layers import Linear, Module, sinusoid_encoding
from backbone.blocks import FFTBlock


class MelDecoder(Module):
    """Positions + FFT blocks (SALN-conditioned when style_dim is set) -> linear to mel bands."""

    def __init__(
        self,
        rng: np.random.Generator,
        dim: int = 128,
        n_layers: int = 4,
        n_heads: int = 2,
        filter_size: int = 256,
        kernel_sizes: Sequence[int] = (9, 1),
        dropout: float = 0.1,
        style_dim: Optional[int] = 128,
        n_mels: int = 80,
    ):
        self.dim = dim
        self.blocks = [
            FFTBlock(dim, n_heads, filter_size, kernel_sizes, rng, dropout, style_dim) for _ in range(n_layers)
        ]
        self.projection = Linear(dim, n_mels, rng)

    def forward(self, expanded: Tensor, s: Optional[Tensor] = None) -> Tensor:
        x = expanded + sinusoid_encoding(expanded.shape[0], self.dim)
        for block in self.blocks:
            x = block(x, s)
        return self.projection(x)


def mel_decode(decoder: MelDecoder, expanded: Tensor, s: Optional[Tensor] = None) -> Tensor:
    return decoder(expanded, s)
