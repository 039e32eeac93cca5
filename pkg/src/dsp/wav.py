import os
import shutil
import struct
import numpy as np
from dataclasses import dataclass
from scipy.io import wavfile
from loguru import logger
from utils.errors import DataError, FormatError

SAMPLE_RATE = 22050


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __len__(self):
        return len(self.samples)

    @property
    def seconds(self) -> float:
        return len(self.samples) / self.sample_rate


def _validate_header(blob: bytes, path: str):
    """Walk the RIFF chunks and make sure the file is 16-bit PCM with one or two channels."""
    if len(blob) < 12:
        raise FormatError(f"{path}: file too short for a RIFF header", 0)
    if blob[0:4] != b"RIFF":
        raise FormatError(f"{path}: missing RIFF magic", 0)
    if blob[8:12] != b"WAVE":
        raise FormatError(f"{path}: missing WAVE tag", 8)

    offset = 12
    seen_fmt = False
    while offset + 8 <= len(blob):
        chunk_id = blob[offset:offset + 4]
        (chunk_size,) = struct.unpack_from("<I", blob, offset + 4)
        body = offset + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body + 16 > len(blob):
                raise FormatError(f"{path}: truncated fmt chunk", body)
            audio_format, channels, _, _, _, bits = struct.unpack_from("<HHIIHH", blob, body)
            if audio_format != 1:
                raise FormatError(f"{path}: audio format {audio_format} is not PCM", body)
            if channels not in (1, 2):
                raise FormatError(f"{path}: {channels} channels are not supported", body + 2)
            if bits != 16:
                raise FormatError(f"{path}: {bits}-bit samples are not supported", body + 14)
            seen_fmt = True
        elif chunk_id == b"data":
            if not seen_fmt:
                raise FormatError(f"{path}: data chunk precedes fmt chunk", offset)
            if body + chunk_size > len(blob):
                raise FormatError(f"{path}: data chunk declares {chunk_size} bytes past end of file", offset + 4)
            return
        offset = body + chunk_size + (chunk_size & 1)
    raise FormatError(f"{path}: no data chunk found", offset)


def resample_linear(samples: np.ndarray, source_rate: int, target_rate: int = SAMPLE_RATE) -> np.ndarray:
    if source_rate == target_rate or len(samples) == 0:
        return samples
    n_out = max(1, int(round(len(samples) * target_rate / source_rate)))
    positions = np.arange(n_out) * (source_rate / target_rate)
    return np.interp(positions, np.arange(len(samples)), samples)


def load_wav(path: str) -> AudioBuffer:
    """Read a 16-bit PCM WAV, downmix to mono and resample to 22050 Hz."""
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        logger.error(f"Error reading {path}: {str(e)}")
        raise DataError(f"Cannot read {path}: {e}")

    _validate_header(blob, path)
    try:
        rate, data = wavfile.read(path)
    except ValueError as e:
        raise FormatError(f"{path}: {e}")

    samples = data.astype(np.float64) / 32768.0
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    samples = resample_linear(samples, rate)
    return AudioBuffer(np.clip(samples, -1.0, 1.0), SAMPLE_RATE)


def save_wav(path: str, audio: AudioBuffer):
    """Write a mono 16-bit PCM WAV via a temp file."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    pcm = np.round(np.clip(audio.samples, -1.0, 1.0) * 32767.0).astype("<i2")
    temp_file = f"{path}.tmp"
    wavfile.write(temp_file, audio.sample_rate, pcm)
    shutil.move(temp_file, path)
