import numpy as np
from dataclasses import dataclass
from typing import NamedTuple, Optional
from utils.errors import DimensionError, UsageError
from autograd.tensor import Tensor
from autograd.functional import take
from layers import Conv1d, Dropout, LayerNorm, Linear, Module


@dataclass
class VarianceTargets:
    """Per-phoneme ground truth: log-f0 pitch, energy and integer frame durations."""
    pitch: np.ndarray
    energy: np.ndarray
    durations: np.ndarray

    def __post_init__(self):
        self.pitch = np.asarray(self.pitch, dtype=np.float64)
        self.energy = np.asarray(self.energy, dtype=np.float64)
        self.durations = np.asarray(self.durations, dtype=np.int64)

    @property
    def log_durations(self) -> np.ndarray:
        return np.log(self.durations.astype(np.float64))


class VariancePredictions(NamedTuple):
    pitch: Tensor
    energy: Tensor
    log_duration: Tensor


class VariancePredictor(Module):
    """conv(k=3) -> ReLU -> LN -> dropout, twice, then a linear map to one value per phoneme."""

    def __init__(self, dim: int, rng: np.random.Generator, kernel_size: int = 3, dropout: float = 0.5):
        self.first = Conv1d(dim, dim, kernel_size, rng)
        self.first_norm = LayerNorm(dim)
        self.second = Conv1d(dim, dim, kernel_size, rng)
        self.second_norm = LayerNorm(dim)
        self.dropout = Dropout(dropout)
        self.head = Linear(dim, 1, rng)

    def forward(self, h: Tensor) -> Tensor:
        x = self.dropout(self.first_norm(self.first(h.T).relu().T))
        x = self.dropout(self.second_norm(self.second(x.T).relu().T))
        return self.head(x).reshape(h.shape[0])


def durations_from_log(log_duration: np.ndarray) -> np.ndarray:
    """Inference durations: max(1, round(exp(log d)))."""
    return np.maximum(1, np.rint(np.exp(np.asarray(log_duration)))).astype(np.int64)


def length_regulate(h: Tensor, durations: np.ndarray) -> Tensor:
    """Repeat row l of h durations[l] times."""
    durations = np.asarray(durations, dtype=np.int64)
    if durations.shape != (h.shape[0],):
        raise DimensionError("one duration per phoneme is required", durations.shape, h.shape)
    if np.any(durations < 0):
        raise UsageError("durations must be non-negative")
    if durations.sum() == 0:
        raise UsageError("durations sum to zero frames")
    return take(h, np.repeat(np.arange(h.shape[0]), durations), axis=0)


class VarianceAdapter(Module):
    """
    Duration, pitch and energy predictors plus the length regulator.

    With targets, ground-truth pitch and energy are re-embedded and ground-truth durations
    drive expansion; the predictions are still returned for the loss. Without targets the
    predictions are used throughout.
    """

    def __init__(self, dim: int, rng: np.random.Generator, kernel_size: int = 3, dropout: float = 0.5):
        self.duration_predictor = VariancePredictor(dim, rng, kernel_size, dropout)
        self.pitch_predictor = VariancePredictor(dim, rng, kernel_size, dropout)
        self.energy_predictor = VariancePredictor(dim, rng, kernel_size, dropout)
        self.pitch_embedding = Linear(1, dim, rng)
        self.energy_embedding = Linear(1, dim, rng)

    def forward(self, h: Tensor, targets: Optional[VarianceTargets] = None):
        length = h.shape[0]
        if targets is not None:
            for name in ("pitch", "energy", "durations"):
                values = getattr(targets, name)
                if values.shape != (length,):
                    raise DimensionError(f"{name} targets must have one value per phoneme", values.shape, h.shape)

        log_duration = self.duration_predictor(h)

        pitch = self.pitch_predictor(h)
        pitch_used = Tensor(targets.pitch) if targets is not None else pitch.detach()
        h = h + self.pitch_embedding(pitch_used.reshape(length, 1))

        energy = self.energy_predictor(h)
        energy_used = Tensor(targets.energy) if targets is not None else energy.detach()
        h = h + self.energy_embedding(energy_used.reshape(length, 1))

        durations = targets.durations if targets is not None else durations_from_log(log_duration.values)
        expanded = length_regulate(h, durations)
        return expanded, VariancePredictions(pitch, energy, log_duration), durations


def variance_adapter(adapter: VarianceAdapter, h: Tensor, targets: Optional[VarianceTargets] = None):
    return adapter(h, targets)
