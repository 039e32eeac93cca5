import librosa
import numpy as np
from dataclasses import dataclass
from typing import Optional
from scipy.spatial.distance import cdist
from utils.errors import UsageError

MCD_CONSTANT = 10.0 * np.sqrt(2.0) / np.log(10.0)


@dataclass
class McdResult:
    value: float
    path_length: int
    aligned: bool
    path: Optional[np.ndarray] = None


def _as_mfcc(matrix, name: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
        raise UsageError(f"{name} must be a non-empty (T, K) matrix, got shape {matrix.shape}")
    return matrix


def mcd_plain(reference, synthesized) -> McdResult:
    """Frame-by-frame MCD: constant * mean over t of the Euclidean distance between MFCC frames."""
    reference = _as_mfcc(reference, "reference")
    synthesized = _as_mfcc(synthesized, "synthesized")
    if reference.shape != synthesized.shape:
        raise UsageError(
            f"mcd_plain needs equal shapes, got {reference.shape} and {synthesized.shape}; use mcd_dtw for unequal lengths"
        )
    diff = reference - synthesized
    distances = np.sqrt(np.sum(diff * diff, axis=1))
    return McdResult(float(MCD_CONSTANT * distances.mean()), reference.shape[0], False)


def dtw_path(distance: np.ndarray):
    """
    Minimum-cost monotone path from (0, 0) to (n - 1, m - 1) with diagonal, up and right steps.

    @return: (total cost along the path, path as an (L, 2) index array)
    """
    accumulated, warp = librosa.sequence.dtw(C=np.ascontiguousarray(distance, dtype=np.float64))
    return float(accumulated[-1, -1]), np.asarray(warp[::-1], dtype=np.int64)


def mcd_dtw(reference, synthesized) -> McdResult:
    """MCD after DTW alignment, normalized by the alignment path length."""
    reference = _as_mfcc(reference, "reference")
    synthesized = _as_mfcc(synthesized, "synthesized")
    if reference.shape[1] != synthesized.shape[1]:
        raise UsageError(f"MFCC widths differ: {reference.shape[1]} vs {synthesized.shape[1]}")
    total, path = dtw_path(cdist(reference, synthesized, metric="euclidean"))
    return McdResult(float(MCD_CONSTANT * total / len(path)), len(path), True, path)
