import numpy as np
from typing import Sequence
from utils.errors import UsageError
from autograd.tensor import Tensor, as_tensor
from autograd.functional import concat
from layers import Conv1d, Linear, Module
from dsp.wav import AudioBuffer


class AudioEncoder(Module):
    """
    Strided convolutional waveform encoder in the style of neural audio codecs.

    conv(k=7) -> [ELU -> conv(k=2s, stride s)] per stride -> ELU -> linear projection.
    Each strided conv is zero-padded by s on the left, so a width that is a multiple of
    the total stride maps to exactly width / stride frames.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        channels: int = 32,
        strides: Sequence[int] = (2, 4, 5, 8),
        out_dim: int = 128,
    ):
        self.strides = tuple(strides)
        self.hop = int(np.prod(self.strides))
        self.stem = Conv1d(1, channels, 7, rng)
        self.downsamplers = []
        width = channels
        for stride in self.strides:
            self.downsamplers.append(Conv1d(width, width * 2, 2 * stride, rng, stride=stride, padding=(stride, 0)))
            width *= 2
        self.projection = Linear(width, out_dim, rng)

    def forward(self, samples) -> Tensor:
        """(N,) waveform -> (ceil(N / hop), out_dim) frames."""
        samples = samples.samples if isinstance(samples, AudioBuffer) else samples
        samples = as_tensor(samples)
        n = samples.shape[0]
        if n < self.hop:
            raise UsageError(f"audio encoder needs at least {self.hop} samples, got {n}")
        padded = -(-n // self.hop) * self.hop
        x = samples.reshape(1, n)
        if padded != n:
            x = concat([x, Tensor(np.zeros((1, padded - n)))], axis=1)
        x = self.stem(x)
        for conv in self.downsamplers:
            x = conv(x.elu())
        return self.projection(x.elu().T)


def encode_audio(encoder: AudioEncoder, audio) -> Tensor:
    return encoder(audio)
