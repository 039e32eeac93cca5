import librosa
import numpy as np
from functools import lru_cache
from scipy.fft import dct
from utils.errors import UsageError
from dsp.wav import SAMPLE_RATE, AudioBuffer

N_FFT = 1024
HOP_LENGTH = 256
WIN_LENGTH = 1024
N_MELS = 80
F_MIN = 0.0
F_MAX = 8000.0
LOG_FLOOR = 1e-5

TRIM_FRAME = 2048
TRIM_HOP = 512
N_MFCC = 13


def _trim_once(samples: np.ndarray, top_db: float) -> np.ndarray:
    n_blocks = -(-len(samples) // TRIM_HOP)
    padded = np.pad(samples, (0, n_blocks * TRIM_HOP + TRIM_FRAME - len(samples)))
    rms = librosa.feature.rms(y=padded, frame_length=TRIM_FRAME, hop_length=TRIM_HOP, center=False)[0, :n_blocks]
    # amin sits below the 16-bit quantization step
    level = librosa.amplitude_to_db(rms, ref=np.max, amin=1e-10, top_db=None)
    loud = level > -top_db
    span = TRIM_FRAME // TRIM_HOP
    # block b lies inside frames b - span + 1 .. b
    active = np.array([loud[max(0, b - span + 1):b + 1].all() for b in range(n_blocks)])
    if not active.any():
        return samples[:0]
    blocks = np.flatnonzero(active)
    start = int(librosa.frames_to_samples(blocks[0], hop_length=TRIM_HOP))
    end = min(len(samples), int(librosa.frames_to_samples(blocks[-1] + 1, hop_length=TRIM_HOP)))
    return samples[start:end]


def trim_silence(audio: AudioBuffer, top_db: float = 60.0) -> AudioBuffer:
    """
    Strip leading and trailing silence.

    Frames of 2048 samples every 512 are silent when their RMS sits more than top_db below
    the loudest frame (librosa's trim criterion). A hop-sized block is kept only when every
    frame covering it is loud, so at most one hop of silence survives on either side.
    Trimming is repeated until it no longer changes, so trim_silence is idempotent. A fully
    silent buffer becomes empty.
    """
    if top_db <= 0:
        raise UsageError(f"top_db must be positive, got {top_db}")
    samples = audio.samples
    if not np.any(samples):
        return AudioBuffer(samples[:0].copy(), audio.sample_rate)
    while len(samples):
        trimmed = _trim_once(samples, top_db)
        if len(trimmed) == len(samples):
            break
        samples = trimmed
    return AudioBuffer(samples.copy(), audio.sample_rate)


def stft(audio: AudioBuffer) -> np.ndarray:
    """Hann-windowed, reflect-centered STFT as a complex (T, 513) matrix, T = 1 + len // 256."""
    if len(audio.samples) < 1:
        raise UsageError("stft needs at least one sample")
    spectrum = librosa.stft(
        np.asarray(audio.samples, dtype=np.float64),
        n_fft=N_FFT,
        hop_length=HOP_LENGTH,
        win_length=WIN_LENGTH,
        window="hann",
        center=True,
        pad_mode="reflect",
    )
    return spectrum.T


@lru_cache(maxsize=1)
def mel_filterbank() -> np.ndarray:
    """(80, 513) triangular filters on the Slaney mel scale, peak height 1."""
    bank = librosa.filters.mel(
        sr=SAMPLE_RATE, n_fft=N_FFT, n_mels=N_MELS, fmin=F_MIN, fmax=F_MAX, htk=False, norm=None,
    )
    bank = bank.astype(np.float64)
    bank.setflags(write=False)
    return bank


def mel_spectrogram(audio: AudioBuffer) -> np.ndarray:
    """Natural-log mel power spectrogram of shape (T, 80), floored at 1e-5 before the log."""
    power = np.abs(stft(audio)) ** 2
    return np.log(np.maximum(power @ mel_filterbank().T, LOG_FLOOR))


def mfcc(mel: np.ndarray, n_mfcc: int = N_MFCC) -> np.ndarray:
    """Orthonormal DCT-II over the mel axis, keeping coefficients 1..n_mfcc."""
    if not 1 <= n_mfcc <= N_MELS - 1:
        raise UsageError(f"n_mfcc must lie in [1, {N_MELS - 1}], got {n_mfcc}")
    cepstrum = dct(np.asarray(mel, dtype=np.float64), type=2, norm="ortho", axis=-1)
    return cepstrum[:, 1:n_mfcc + 1]
