import numpy as np
from dataclasses import dataclass
from typing import List, Optional, Tuple
from utils.errors import UsageError
from autograd.tensor import Tensor, as_tensor
from autograd.functional import avg_pool1d, concat, moments
from layers import Conv1d, Linear, Module

IN_EPSILON = 1e-5


@dataclass
class InStats:
    """Per-channel statistics removed by one instance normalization."""
    mu: np.ndarray
    sigma: np.ndarray
    epsilon: float


def instance_norm(f: Tensor, epsilon: float = IN_EPSILON) -> Tuple[Tensor, InStats]:
    """
    Normalize every channel of a (C, W) feature map over its width.

    out[c, w] = (F[c, w] - mu_c) / sqrt(var_c + epsilon), differentiable through both statistics.
    """
    f = as_tensor(f)
    if epsilon < 0:
        raise UsageError(f"epsilon must be non-negative, got {epsilon}")
    if f.ndim != 2 or f.shape[1] < 1:
        raise UsageError(f"instance_norm expects a (C, W) map with W >= 1, got {f.shape}")
    mean, var = moments(f, axis=1)
    sigma = (var + epsilon).sqrt()
    out = (f - mean) / sigma
    return out, InStats(mean.numpy().reshape(-1), sigma.numpy().reshape(-1), epsilon)


class ConvBank(Module):
    """Parallel same-padded convolutions with kernel widths 1..n, concatenated on channels."""

    def __init__(self, in_channels: int, channels: int, n_kernels: int, rng: np.random.Generator):
        self.convs = [Conv1d(in_channels, channels, k, rng) for k in range(1, n_kernels + 1)]
        self.out_channels = channels * n_kernels

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[1] < 1:
            raise UsageError("conv bank needs at least one frame")
        return concat([conv(x) for conv in self.convs], axis=0).relu()


class NormalizedConvBlock(Module):
    """Two rounds of conv1d -> instance norm -> ReLU."""

    def __init__(self, in_channels: int, channels: int, rng: np.random.Generator, kernel_size: int = 3):
        # instance norm removes any per-channel offset
        self.first = Conv1d(in_channels, channels, kernel_size, rng, bias=False)
        self.second = Conv1d(channels, channels, kernel_size, rng, bias=False)

    def forward(self, x: Tensor, trace: Optional[List] = None) -> Tensor:
        for conv in (self.first, self.second):
            x, stats = instance_norm(conv(x))
            if trace is not None:
                trace.append((x, stats))
            x = x.relu()
        return x


class ContentExtractor(Module):
    """
    Content branch: mel (T, 80) -> conv bank -> IN block -> average pool -> IN block -> projection.

    Output is a (T // 2, out_dim) content sequence.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        n_mels: int = 80,
        bank_channels: int = 32,
        bank_kernels: int = 8,
        channels: int = 128,
        out_dim: int = 128,
    ):
        self.bank = ConvBank(n_mels, bank_channels, bank_kernels, rng)
        self.block1 = NormalizedConvBlock(self.bank.out_channels, channels, rng)
        self.block2 = NormalizedConvBlock(channels, channels, rng)
        self.projection = Linear(channels, out_dim, rng)

    def conv_bank(self, x: Tensor) -> Tensor:
        return self.bank(as_tensor(x))

    def forward(self, mel, trace: Optional[List] = None) -> Tensor:
        mel = as_tensor(mel)
        if mel.ndim != 2 or mel.shape[0] < 2:
            raise UsageError(f"content extractor needs at least 2 mel frames, got shape {mel.shape}")
        x = self.bank(mel.T)
        x = self.block1(x, trace)
        x = avg_pool1d(x, 2, 2)
        x = self.block2(x, trace)
        return self.projection(x.T)


def content_forward(extractor: ContentExtractor, mel, trace: Optional[List] = None) -> Tensor:
    return extractor(mel, trace)
