import numpy as np
from enum import Enum
from typing import NamedTuple, Optional
from autograd.tensor import Tensor
from layers import Module
from speaker.pipeline import SpeakerPipeline
from backbone.encoder import FusionEncoder, TextEncoder
from backbone.variance import VarianceAdapter, VarianceTargets
from backbone.decoder import MelDecoder


class InjectionSite(Enum):
    ENCODER = "encoder"
    DECODER = "decoder"
    BOTH = "both"

    @property
    def encoder(self) -> bool:
        return self in (InjectionSite.ENCODER, InjectionSite.BOTH)

    @property
    def decoder(self) -> bool:
        return self in (InjectionSite.DECODER, InjectionSite.BOTH)


class ModelOutput(NamedTuple):
    mel: Tensor
    pitch: Tensor
    energy: Tensor
    log_duration: Tensor
    speaker: Tensor
    durations: np.ndarray


class CifTts(Module):
    """
    Zero-shot acoustic model: reference audio -> speaker embedding s; phonemes -> text encoder
    -> fusion encoder(s) -> variance adapter -> mel decoder(s).

    Speaker identity only ever enters through s, so there is no per-speaker parameter.
    """

    def __init__(self, config, vocab_size: int):
        rng = np.random.default_rng([config.seed, 0])
        site = InjectionSite(config.injection_site)
        self.injection_site = site
        style_dim = config.hidden

        self.speaker = SpeakerPipeline(
            rng,
            negation=config.negation_enabled,
            n_streams=config.n_streams,
            n_heads=config.n_heads,
            depth=config.depth,
            stream_fusion=config.stream_fusion,
            temporal_pooling=config.temporal_pooling,
            dim=config.hidden,
            ffn_dim=config.ffn_dim,
            dropout=config.dropout,
            encoder_channels=config.encoder_channels,
            content_bank_channels=config.content_bank_channels,
            content_bank_kernels=config.content_bank_kernels,
            content_channels=config.content_channels,
        )
        fft = dict(
            dim=config.hidden,
            n_heads=config.fft_heads,
            filter_size=config.fft_filter,
            kernel_sizes=(config.fft_kernel, 1),
            dropout=config.dropout,
        )
        self.text_encoder = TextEncoder(vocab_size, rng, n_layers=config.encoder_layers, **fft)
        self.fusion = FusionEncoder(
            rng, n_layers=config.fusion_layers, style_dim=style_dim if site.encoder else None, **fft
        )
        self.variance = VarianceAdapter(config.hidden, rng, dropout=config.variance_dropout)
        self.decoder = MelDecoder(
            rng, n_layers=config.decoder_layers, style_dim=style_dim if site.decoder else None, **fft
        )

    def forward(
        self,
        phonemes,
        reference,
        targets: Optional[VarianceTargets] = None,
        reference_mel: Optional[np.ndarray] = None,
    ) -> ModelOutput:
        s = self.speaker(reference, reference_mel)
        h = self.text_encoder(phonemes)
        h = self.fusion(h, s)
        expanded, predictions, durations = self.variance(h, targets)
        mel = self.decoder(expanded, s)
        return ModelOutput(mel, predictions.pitch, predictions.energy, predictions.log_duration, s, durations)


def model_forward(model: CifTts, phonemes, reference, targets: Optional[VarianceTargets] = None) -> ModelOutput:
    return model(phonemes, reference, targets)
