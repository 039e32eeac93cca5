import numpy as np
from typing import Dict, Tuple
from utils.errors import DimensionError
from autograd.tensor import Tensor, as_tensor

LOSS_TERMS = ("mel_l1", "pitch_l2", "energy_l2", "duration_l2")


def _checked(target, prediction: Tensor, name: str) -> Tensor:
    target = as_tensor(target)
    if target.shape != prediction.shape:
        raise DimensionError(f"{name} target and prediction shapes differ", target.shape, prediction.shape)
    return target


def reconstruction_loss(
    mel, mel_pred: Tensor,
    pitch, pitch_pred: Tensor,
    energy, energy_pred: Tensor,
    durations, log_duration_pred: Tensor,
) -> Tuple[Tensor, Dict[str, Tensor]]:
    """
    Unweighted sum of mean L1 on the mel and mean squared error on pitch, energy and log duration.

    Durations are given as integer frame counts and compared in the log domain.
    """
    mel = _checked(mel, mel_pred, "mel")
    pitch = _checked(pitch, pitch_pred, "pitch")
    energy = _checked(energy, energy_pred, "energy")
    log_durations = _checked(np.log(np.asarray(durations, dtype=np.float64)), log_duration_pred, "duration")

    pitch_diff = pitch_pred - pitch
    energy_diff = energy_pred - energy
    duration_diff = log_duration_pred - log_durations
    terms = {
        "mel_l1": (mel_pred - mel).abs().mean(),
        "pitch_l2": (pitch_diff * pitch_diff).mean(),
        "energy_l2": (energy_diff * energy_diff).mean(),
        "duration_l2": (duration_diff * duration_diff).mean(),
    }
    total = terms["mel_l1"] + terms["pitch_l2"] + terms["energy_l2"] + terms["duration_l2"]
    return total, terms
