import numpy as np
from enum import Enum
from typing import List, Optional, Tuple
from loguru import logger
from utils.errors import DimensionError, UsageError
from autograd.tensor import Tensor, as_tensor
from autograd.functional import concat, stack
from layers import AttentionPool, Linear, Module, TransformerEncoderBlock, sinusoid_encoding
from dsp.spectral import mel_spectrogram
from dsp.wav import AudioBuffer
from speaker.audio_encoder import AudioEncoder
from speaker.content_extractor import ContentExtractor


class StreamFusion(Enum):
    ATTENTION = "attention"
    CONCAT = "concat"


class TemporalPooling(Enum):
    ATTENTION = "attention"
    MEAN = "mean"


def interpolation_matrix(source_len: int, target_len: int) -> np.ndarray:
    """(target_len, source_len) linear-interpolation weights with endpoints mapped to endpoints."""
    if source_len < 1 or target_len < 1:
        raise UsageError(f"cannot align {source_len} frames onto {target_len}")
    if target_len == 1:
        positions = np.array([(source_len - 1) / 2.0])
    else:
        positions = np.arange(target_len) * (source_len - 1) / (target_len - 1)
    lower = np.minimum(np.floor(positions).astype(int), source_len - 1)
    upper = np.minimum(lower + 1, source_len - 1)
    frac = positions - lower
    weights = np.zeros((target_len, source_len))
    rows = np.arange(target_len)
    np.add.at(weights, (rows, lower), 1.0 - frac)
    np.add.at(weights, (rows, upper), frac)
    return weights


def align_content(content: Tensor, target_len: int) -> Tensor:
    """Resample a (T_c, D) content sequence onto target_len frames along time."""
    content = as_tensor(content)
    if content.shape[0] == target_len:
        return content
    return Tensor(interpolation_matrix(content.shape[0], target_len)) @ content


def negate(full: Tensor, content_aligned: Tensor) -> Tensor:
    """Subtract aligned content features from the full audio representation."""
    if full.shape != content_aligned.shape:
        raise DimensionError("negation needs equal shapes", full.shape, content_aligned.shape)
    return full - content_aligned


class Stream(Module):
    def __init__(self, dim: int, n_heads: int, depth: int, ffn_dim: int, rng: np.random.Generator, dropout: float):
        self.blocks = [TransformerEncoderBlock(dim, n_heads, ffn_dim, rng, dropout) for _ in range(depth)]

    def forward(self, x: Tensor) -> Tensor:
        for block in self.blocks:
            x = block(x)
        return x


class SpeakerPipeline(Module):
    """
    Reference audio -> 128-dim speaker embedding.

    encode_audio and content_forward run side by side; content is aligned and subtracted
    (when negation is enabled), then refined by a pre-Transformer and parallel streams,
    fused across streams and pooled over time.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        negation: bool = True,
        n_streams: int = 2,
        n_heads: int = 2,
        depth: int = 1,
        stream_fusion: StreamFusion = StreamFusion.ATTENTION,
        temporal_pooling: TemporalPooling = TemporalPooling.ATTENTION,
        dim: int = 128,
        ffn_dim: int = 512,
        pre_heads: int = 2,
        dropout: float = 0.1,
        encoder_channels: int = 32,
        encoder_strides: Tuple[int, ...] = (2, 4, 5, 8),
        content_bank_channels: int = 32,
        content_bank_kernels: int = 8,
        content_channels: int = 128,
    ):
        if n_streams < 1:
            raise UsageError(f"n_streams must be >= 1, got {n_streams}")
        if depth < 1:
            raise UsageError(f"depth must be >= 1, got {depth}")
        self.negation = negation
        self.n_streams = n_streams
        self.stream_fusion = StreamFusion(stream_fusion)
        self.temporal_pooling = TemporalPooling(temporal_pooling)
        self.dim = dim
        self.positional = True

        self.encoder = AudioEncoder(rng, encoder_channels, encoder_strides, dim)
        self.content = ContentExtractor(
            rng, bank_channels=content_bank_channels, bank_kernels=content_bank_kernels,
            channels=content_channels, out_dim=dim,
        ) if negation else None
        self.pre = TransformerEncoderBlock(dim, pre_heads, ffn_dim, rng, dropout)
        self.streams = [Stream(dim, n_heads, depth, ffn_dim, rng, dropout) for _ in range(n_streams)]
        self.stream_pool = None
        self.stream_projection = None
        if n_streams > 1 and self.stream_fusion is StreamFusion.ATTENTION:
            self.stream_pool = AttentionPool(dim, rng)
        elif n_streams > 1:
            self.stream_projection = Linear(n_streams * dim, dim, rng)
        self.time_pool = AttentionPool(dim, rng) if self.temporal_pooling is TemporalPooling.ATTENTION else None

    def pre_transformer(self, cif: Tensor) -> Tensor:
        cif = as_tensor(cif)
        if self.positional:
            cif = cif + sinusoid_encoding(cif.shape[0], self.dim)
        return self.pre(cif)

    def multi_stream(self, cif: Tensor) -> List[Tensor]:
        return [stream(cif) for stream in self.streams]

    def attention_pool_streams(self, streams: List[Tensor]) -> Tuple[Tensor, Tensor]:
        """Per-position softmax over streams; returns the pooled (T, D) sequence and (J, T) weights."""
        if len(streams) == 1:
            return streams[0], Tensor(np.ones((1, streams[0].shape[0])))
        if self.stream_pool is None:
            raise UsageError("pipeline was built without stream attention pooling")
        return self.stream_pool(stack(streams, axis=0))

    def concat_pool_streams(self, streams: List[Tensor]) -> Tensor:
        if len({s.shape for s in streams}) != 1:
            raise DimensionError("streams must share one shape", *[s.shape for s in streams])
        if len(streams) == 1:
            return streams[0]
        return self.stream_projection(concat(streams, axis=1))

    def temporal_pool(self, seq: Tensor) -> Tuple[Tensor, Tensor]:
        """(T, D) -> (D,) embedding and the (T,) temporal weights."""
        if self.time_pool is None:
            length = seq.shape[0]
            return seq.mean(axis=0), Tensor(np.full(length, 1.0 / length))
        return self.time_pool(seq)

    def forward(self, audio, mel: Optional[np.ndarray] = None) -> Tensor:
        samples = audio.samples if isinstance(audio, AudioBuffer) else np.asarray(audio)
        full = self.encoder(samples)
        if self.negation:
            if mel is None:
                mel = mel_spectrogram(AudioBuffer(samples))
            content = align_content(self.content(mel), full.shape[0])
            cif = negate(full, content)
        else:
            cif = full

        streams = self.multi_stream(self.pre_transformer(cif))
        if self.n_streams == 1:
            pooled = streams[0]
        elif self.stream_fusion is StreamFusion.ATTENTION:
            pooled, _ = self.attention_pool_streams(streams)
        else:
            pooled = self.concat_pool_streams(streams)
        embedding, _ = self.temporal_pool(pooled)
        return embedding

    def embed(self, audio, mel: Optional[np.ndarray] = None) -> np.ndarray:
        was_training = self.training
        self.eval()
        try:
            return self.forward(audio, mel).numpy()
        except Exception as e:
            logger.error(f"Error computing speaker embedding: {str(e)}")
            raise
        finally:
            self.train(was_training)


def speaker_forward(pipeline: SpeakerPipeline, audio, mel: Optional[np.ndarray] = None) -> Tensor:
    return pipeline(audio, mel)
