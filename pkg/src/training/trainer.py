import os
import numpy as np
from dataclasses import dataclass
from typing import Dict, List, Optional
from loguru import logger
from utils.errors import DataError, NumericalError
from utils.logging import log_manager
from autograd.tensor import Tape
from dsp.spectral import mel_spectrogram
from dsp.wav import AudioBuffer
from backbone.loss import LOSS_TERMS, reconstruction_loss
from backbone.model import CifTts
from training.checkpoint import read_checkpoint, restore, save_checkpoint
from training.config import Config
from training.dataset import SyntheticCorpus, Utterance
from training.optimizer import Adam, clip_grad_norm

METRIC_COLUMNS = ["step", "learning_rate", "total"] + list(LOSS_TERMS) + ["grad_norm"]
LATEST = "latest.ckpt"


@dataclass
class TrainResult:
    run_dir: str
    checkpoint_path: Optional[str]
    metrics_path: str
    losses: List[Dict[str, float]]


class ReferenceCache:
    """Cropped reference waveforms and their mels, computed once per utterance."""

    def __init__(self, max_samples: int):
        self.max_samples = max_samples
        self._cache: Dict[str, tuple] = {}

    def get(self, utterance: Utterance):
        if utterance.utterance_id not in self._cache:
            samples = utterance.reference(self.max_samples)
            self._cache[utterance.utterance_id] = (samples, mel_spectrogram(AudioBuffer(samples)))
        return self._cache[utterance.utterance_id]


def build_model(config: Config, vocab_size: int) -> CifTts:
    model = CifTts(config, vocab_size)
    logger.info(f"Built model with {model.num_parameters()} parameters (config {config.config_hash()[:12]})")
    return model


def load_model(config: Config, checkpoint_path: str, vocab_size: int) -> CifTts:
    """A model with checkpoint weights, refused when the checkpoint came from another config."""
    model = build_model(config, vocab_size)
    restore(read_checkpoint(checkpoint_path), config.config_hash(), model)
    model.eval()
    logger.info(f"Loaded weights from {checkpoint_path}")
    return model


def build_optimizer(config: Config, model: CifTts) -> Adam:
    return Adam(
        model.parameters(), config.hidden, config.beta1, config.beta2, config.eps,
        config.warmup_steps, config.lr_scale,
    )


def batch_indices(config: Config, step: int, pool_size: int) -> np.ndarray:
    """Batch for a step depends only on (seed, step), so every run and every resume sees the same order."""
    rng = np.random.default_rng([config.seed, step])
    return rng.choice(pool_size, size=config.batch_size, replace=pool_size < config.batch_size)


class Trainer:
    def __init__(self, config: Config, corpus: SyntheticCorpus, run_dir: Optional[str] = None):
        self.config = config
        self.corpus = corpus
        self.run_dir = run_dir or config.out_dir
        self.pool = corpus.split("train")
        if not self.pool:
            raise DataError(f"corpus in {corpus.data_dir} has no training utterances")
        self.model = build_model(config, len(corpus.vocab))
        self.optimizer = build_optimizer(config, self.model)
        self.references = ReferenceCache(config.ref_max_samples)
        self.step = 0
        self.last_checkpoint: Optional[str] = None

    def resume(self, checkpoint_path: str):
        checkpoint = read_checkpoint(checkpoint_path)
        restore(checkpoint, self.config.config_hash(), self.model, self.optimizer)
        self.step = checkpoint.step
        self.last_checkpoint = checkpoint_path
        logger.info(f"Resumed from {checkpoint_path} at step {self.step}")

    def utterance_loss(self, utterance: Utterance):
        samples, ref_mel = self.references.get(utterance)
        out = self.model(utterance.phonemes, samples, utterance.targets, ref_mel)
        targets = utterance.targets
        return reconstruction_loss(
            utterance.mel, out.mel, targets.pitch, out.pitch, targets.energy, out.energy,
            targets.durations, out.log_duration,
        )

    def train_step(self) -> Dict[str, float]:
        """One optimizer update on a seeded batch; returns the pre-update losses."""
        step = self.step
        self.model.train()
        self.model.reseed(np.random.default_rng([self.config.seed, step, 1]))
        batch = [self.pool[i] for i in batch_indices(self.config, step, len(self.pool))]

        with Tape() as tape:
            total = None
            sums = {name: 0.0 for name in LOSS_TERMS}
            for utterance in batch:
                loss, terms = self.utterance_loss(utterance)
                total = loss if total is None else total + loss
                for name in LOSS_TERMS:
                    sums[name] += terms[name].item()
            total = total / float(len(batch))

        value = total.item()
        if not np.isfinite(value):
            reference = self.last_checkpoint or "none (no checkpoint written yet)"
            logger.error(f"Non-finite loss at step {step}; last good checkpoint: {reference}")
            raise NumericalError(f"Loss became {value} at step {step}; last good checkpoint: {reference}")

        lr = self.optimizer.learning_rate
        tape.backward(total)
        grad_norm = clip_grad_norm(self.optimizer.params, self.config.grad_clip)
        self.optimizer.step()
        self.optimizer.zero_grad()
        self.step += 1

        row = {"step": step, "learning_rate": lr, "total": value, "grad_norm": grad_norm}
        row.update({name: sums[name] / len(batch) for name in LOSS_TERMS})
        return row

    def checkpoint(self) -> str:
        path = os.path.join(self.run_dir, f"step_{self.step:06d}.ckpt")
        save_checkpoint(path, self.config.config_hash(), self.step, self.model, self.optimizer)
        save_checkpoint(os.path.join(self.run_dir, LATEST), self.config.config_hash(), self.step, self.model, self.optimizer)
        self.last_checkpoint = path
        return path

    def run(self, max_steps: Optional[int] = None) -> TrainResult:
        max_steps = self.config.max_steps if max_steps is None else max_steps
        metrics_path = os.path.join(self.run_dir, "metrics.csv")
        resuming = self.step > 0
        log_manager.open_metrics(metrics_path, METRIC_COLUMNS, resume=resuming)
        if resuming:
            log_manager.truncate_metrics(self.step - 1)

        losses = []
        try:
            while self.step < max_steps:
                row = self.train_step()
                log_manager.log_metrics(row)
                losses.append(row)
                if row["step"] % 50 == 0:
                    logger.info(f"step {row['step']}: loss {row['total']:.4f} (mel {row['mel_l1']:.4f})")
                if self.config.checkpoint_every and self.step % self.config.checkpoint_every == 0:
                    self.checkpoint()
            if self.last_checkpoint is None or not self.config.checkpoint_every or self.step % self.config.checkpoint_every:
                self.checkpoint()
        finally:
            log_manager.close_metrics()
        return TrainResult(self.run_dir, self.last_checkpoint, metrics_path, losses)


def train(config: Config, resume: Optional[str] = None, corpus: Optional[SyntheticCorpus] = None) -> TrainResult:
    """Train on the corpus in config.data_dir, writing checkpoints and metrics.csv to config.out_dir."""
    corpus = corpus or SyntheticCorpus.load(config.data_dir)
    trainer = Trainer(config, corpus)
    log_manager.attach_run_dir(trainer.run_dir)
    if resume:
        trainer.resume(resume)
    return trainer.run()


def synthesize_mel(model: CifTts, phonemes, reference: np.ndarray, reference_mel: Optional[np.ndarray] = None):
    """Inference pass: predicted durations drive expansion; returns the (T, 80) mel and the durations."""
    model.eval()
    out = model(phonemes, reference, None, reference_mel)
    return out.mel.numpy(), out.durations