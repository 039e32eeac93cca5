import os
import shutil
import struct
import numpy as np
import pandas as pd
from loguru import logger
from utils.errors import DataError, FormatError
from dsp.spectral import N_MELS

MEL_MAGIC = b"MEL0"
_HEADER = struct.Struct("<4sI")


def write_mel(path: str, mel: np.ndarray):
    """Write a (T, 80) matrix as MEL0: magic, u32 frame count, little-endian float64 rows."""
    mel = np.asarray(mel, dtype="<f8")
    if mel.ndim != 2 or mel.shape[1] != N_MELS:
        raise DataError(f"Refusing to write mel of shape {mel.shape} to {path}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    temp_file = f"{path}.tmp"
    with open(temp_file, "wb") as f:
        f.write(_HEADER.pack(MEL_MAGIC, mel.shape[0]))
        f.write(mel.tobytes(order="C"))
    shutil.move(temp_file, path)


def read_mel(path: str) -> np.ndarray:
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        logger.error(f"Error reading {path}: {str(e)}")
        raise DataError(f"Cannot read {path}: {e}")

    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: file too short for a MEL0 header", len(blob))
    magic, frames = _HEADER.unpack_from(blob, 0)
    if magic != MEL_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}", 0)
    expected = _HEADER.size + frames * N_MELS * 8
    if len(blob) != expected:
        raise FormatError(f"{path}: header declares {frames} frames but payload ends", min(len(blob), expected))
    return np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(frames, N_MELS).astype(np.float64)


def write_mel_csv(path: str, mel: np.ndarray):
    """One frame per row, one column per mel band."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame = pd.DataFrame(np.asarray(mel), columns=[f"mel_{i}" for i in range(mel.shape[1])])
    frame.to_csv(path, index=False, float_format="%.17g")
