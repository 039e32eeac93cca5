import numpy as np
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional
from loguru import logger
from autograd.tensor import Tensor
from autograd.functional import concat, conv1d, moments, take
from autograd.gradcheck import grad_check, grad_check_params, worst
from layers import AttentionPool, LayerNorm, Linear, Module, MultiHeadAttention, TransformerEncoderBlock
from speaker.content_extractor import ContentExtractor, instance_norm
from speaker.audio_encoder import AudioEncoder
from speaker.pipeline import SpeakerPipeline
from backbone.saln import StyleAdaptiveLayerNorm
from backbone.encoder import FusionEncoder, TextEncoder
from backbone.variance import VarianceAdapter, VarianceTargets
from backbone.decoder import MelDecoder
from backbone.loss import reconstruction_loss
from backbone.model import CifTts
from training.config import Config

TOLERANCE = 1e-4


@dataclass
class GradCheckRow:
    component: str
    max_relative_error: float
    passed: bool


def tiny_config(**overrides) -> Config:
    """A model small enough for finite differences over every parameter tensor."""
    values = dict(
        hidden=8, ffn_dim=16, encoder_layers=1, decoder_layers=1, fusion_layers=1, fft_filter=16,
        fft_kernel=3, encoder_channels=2, content_bank_channels=2, content_bank_kernels=3,
        content_channels=8, dropout=0.0, variance_dropout=0.0, seed=7,
    )
    values.update(overrides)
    return Config(**values)


def _projected(out: Tensor, rng: np.random.Generator) -> Callable[[Tensor], Tensor]:
    weights = rng.normal(size=out.shape)
    return lambda y: (y * weights).sum()


def _module_check(module: Module, forward: Callable[[], Tensor], rng: np.random.Generator, h: float) -> float:
    """Max error of sum(forward() * R) with respect to every parameter of the module."""
    module.eval()
    project = _projected(forward(), rng)
    errors = grad_check_params(lambda: project(forward()), module.parameters(), h, coords_per_param=3, rng=rng)
    name, error = worst(errors)
    logger.debug(f"{type(module).__name__}: worst parameter {name} ({error:.3e})")
    return error


def _input_check(forward: Callable[[Tensor], Tensor], x: Tensor, rng: np.random.Generator, h: float) -> float:
    project = _projected(forward(x), rng)
    return grad_check(lambda t: project(forward(t)), x, h)


def _checks(rng: np.random.Generator, h: float) -> Dict[str, Callable[[], float]]:
    def r(*shape, low=-1.0, high=1.0):
        return Tensor(rng.uniform(low, high, size=shape))

    def module_layer(module: Module, x: Tensor, pick: Optional[int] = None):
        forward = (lambda: module(x)[pick]) if pick is not None else (lambda: module(x))
        call = (lambda t: module(t)[pick]) if pick is not None else module
        return max(_module_check(module, forward, rng, h), _input_check(call, x, rng, h))

    checks: Dict[str, Callable[[], float]] = {}
    checks["add/sub/mul/div"] = lambda: _input_check(lambda x: (x + 2.0) * x - x / (x * x + 1.0), r(3, 4), rng, h)
    checks["matmul"] = lambda: _input_check(lambda x: x @ r(4, 2), r(3, 4), rng, h)
    checks["relu/elu"] = lambda: _input_check(lambda x: x.relu() + x.elu(), r(3, 5), rng, h)
    checks["exp/log/tanh/sqrt"] = lambda: _input_check(
        lambda x: x.exp() + x.log() + x.tanh() + x.sqrt(), r(2, 5, low=0.5, high=2.0), rng, h
    )
    checks["softmax"] = lambda: _input_check(lambda x: x.softmax(axis=-1), r(3, 6), rng, h)
    checks["reductions/reshape"] = lambda: _input_check(
        lambda x: x.reshape(4, 3).T.sum(axis=0) * x.mean(), r(3, 4), rng, h
    )
    checks["getitem/take/concat"] = lambda: _input_check(
        lambda x: concat([x[1:, ::2], take(x, [0, 0, 2], axis=0)[:, :2]], axis=0), r(3, 4), rng, h
    )
    checks["conv1d"] = lambda: _input_check(lambda x: conv1d(x, r(4, 3, 3), stride=2), r(3, 9), rng, h)
    checks["moments"] = lambda: _input_check(lambda x: sum(moments(x, axis=1), Tensor(0.0)), r(3, 6), rng, h)
    checks["instance_norm"] = lambda: _input_check(lambda x: instance_norm(x)[0], r(3, 7), rng, h)

    checks["linear"] = lambda: module_layer(Linear(5, 4, rng), r(3, 5))
    checks["layer_norm"] = lambda: module_layer(LayerNorm(6), r(4, 6))
    checks["multi_head_attention"] = lambda: module_layer(MultiHeadAttention(8, 2, rng, 0.0), r(5, 8))
    checks["transformer_block"] = lambda: module_layer(TransformerEncoderBlock(8, 2, 16, rng, 0.0), r(6, 8))
    checks["attention_pool"] = lambda: module_layer(AttentionPool(8, rng), r(2, 5, 8), pick=0)

    def saln_check():
        layer = StyleAdaptiveLayerNorm(8, 6, rng)
        i, s = r(5, 8), r(6)
        return max(_module_check(layer, lambda: layer(i, s), rng, h), _input_check(lambda t: layer(i, t), s, rng, h))

    checks["saln"] = saln_check

    def content_check():
        extractor = ContentExtractor(rng, n_mels=10, bank_channels=2, bank_kernels=3, channels=4, out_dim=4)
        mel = r(8, 10)
        extractor.eval()
        return max(_module_check(extractor, lambda: extractor(mel), rng, h), _input_check(extractor, mel, rng, h))

    checks["content_extractor"] = content_check

    def encoder_check():
        encoder = AudioEncoder(rng, channels=2, out_dim=4)
        samples = r(1600, low=-0.5, high=0.5)
        return _module_check(encoder, lambda: encoder(samples), rng, h)

    checks["audio_encoder"] = encoder_check

    def pipeline_check():
        pipeline = SpeakerPipeline(
            rng, dim=8, ffn_dim=16, dropout=0.0, encoder_channels=2, content_bank_channels=2,
            content_bank_kernels=3, content_channels=8,
        )
        samples = rng.uniform(-0.5, 0.5, 1600)
        return _module_check(pipeline, lambda: pipeline(samples), rng, h)

    checks["speaker_pipeline"] = pipeline_check

    def text_check():
        encoder = TextEncoder(12, rng, dim=8, n_layers=1, filter_size=16, kernel_sizes=(3, 1), dropout=0.0)
        return _module_check(encoder, lambda: encoder([1, 4, 4, 7, 2]), rng, h)

    checks["text_encoder"] = text_check

    def fusion_check():
        encoder = FusionEncoder(rng, dim=8, filter_size=16, kernel_sizes=(3, 1), dropout=0.0, style_dim=8)
        x, s = r(5, 8), r(8)
        return _module_check(encoder, lambda: encoder(x, s), rng, h)

    checks["fusion_encoder"] = fusion_check

    def variance_check():
        adapter = VarianceAdapter(8, rng, dropout=0.0)
        x = r(4, 8)
        targets = VarianceTargets(rng.normal(size=4), rng.normal(size=4), [2, 1, 3, 2])
        return _module_check(adapter, lambda: _variance_sum(adapter(x, targets)), rng, h)

    checks["variance_adapter"] = variance_check

    def decoder_check():
        decoder = MelDecoder(rng, dim=8, n_layers=1, filter_size=16, kernel_sizes=(3, 1), dropout=0.0, style_dim=8, n_mels=6)
        x, s = r(6, 8), r(8)
        return _module_check(decoder, lambda: decoder(x, s), rng, h)

    checks["mel_decoder"] = decoder_check

    def model_check():
        model = CifTts(tiny_config(), 12)
        model.eval()
        phonemes = [3, 1, 5, 9]
        targets = VarianceTargets(rng.normal(size=4), rng.normal(size=4), [2, 3, 1, 2])
        reference = rng.uniform(-0.5, 0.5, 1600)
        mel = rng.normal(size=(8, 80))

        def loss():
            out = model(phonemes, reference, targets)
            total, _ = reconstruction_loss(
                mel, out.mel, targets.pitch, out.pitch, targets.energy, out.energy, targets.durations, out.log_duration,
            )
            return total

        errors = grad_check_params(loss, model.parameters(), h, coords_per_param=2, rng=rng)
        name, error = worst(errors)
        logger.debug(f"end-to-end model: worst parameter {name} ({error:.3e})")
        return error

    checks["end_to_end_model"] = model_check

    return checks


def _variance_sum(result) -> Tensor:
    expanded, predictions, _ = result
    rng = np.random.default_rng(11)
    total = (expanded * rng.normal(size=expanded.shape)).sum()
    for prediction in predictions:
        total = total + (prediction * rng.normal(size=prediction.shape)).sum()
    return total


def run_gradient_suite(seed: int = 0, h: float = 1e-5) -> List[GradCheckRow]:
    """Grad-check every layer type and the end-to-end model at tiny shapes."""
    rng = np.random.default_rng(seed)
    rows = []
    for name, check in _checks(rng, h).items():
        error = float(check())
        passed = bool(error < TOLERANCE)
        rows.append(GradCheckRow(name, error, passed))
        log = logger.info if passed else logger.error
        log(f"grad-check {name}: max relative error {error:.3e}")
    return rows
