import os
import shutil
import numpy as np
import pandas as pd
from dataclasses import dataclass
from typing import List, Optional
from loguru import logger
from utils.errors import DataError, UsageError
from utils.parallel import parallel_map
from dsp.wav import SAMPLE_RATE, AudioBuffer, load_wav, save_wav
from dsp.spectral import HOP_LENGTH, mel_spectrogram
from dsp.melio import read_mel, write_mel
from backbone.variance import VarianceTargets
from backbone.vocab import DEFAULT_PHONEMES, PhonemeVocabulary

N_HARMONICS = 24
MIN_DURATION = 3
MAX_DURATION = 10
OUTPUT_GAIN = 0.25
MANIFEST = "manifest.csv"
VOCAB_FILE = "vocab.txt"
SPEAKERS_FILE = "speakers.csv"


@dataclass
class SyntheticSpeaker:
    id: str
    f0_base: float
    harmonic_amplitudes: np.ndarray
    vibrato_rate: float
    vibrato_depth: float


@dataclass
class Utterance:
    utterance_id: str
    speaker_id: str
    split: str
    phonemes: np.ndarray
    targets: VarianceTargets
    mel: np.ndarray
    samples: np.ndarray

    def reference(self, max_samples: int) -> np.ndarray:
        return self.samples[:max_samples]


def make_speaker(index: int, seed: int) -> SyntheticSpeaker:
    """Timbre = unit-norm harmonic amplitudes with a random spectral tilt and ripple."""
    rng = np.random.default_rng([seed, 1, index])
    tilt = rng.uniform(0.05, 0.35)
    harmonics = np.arange(1, N_HARMONICS + 1)
    amplitudes = np.exp(-tilt * harmonics) * rng.uniform(0.2, 1.0, N_HARMONICS)
    amplitudes /= np.linalg.norm(amplitudes)
    return SyntheticSpeaker(
        id=f"spk{index:02d}",
        f0_base=float(rng.uniform(80.0, 400.0)),
        harmonic_amplitudes=amplitudes,
        vibrato_rate=float(rng.uniform(4.0, 7.0)),
        vibrato_depth=float(rng.uniform(0.005, 0.02)),
    )


def phoneme_envelopes(vocab_size: int, seed: int) -> np.ndarray:
    """(V, 3, 2) formant centers and bandwidths per phoneme, shared by every speaker."""
    rng = np.random.default_rng([seed, 2])
    centers = np.sort(rng.uniform([200.0, 800.0, 2000.0], [900.0, 2400.0, 3800.0], size=(vocab_size, 3)), axis=1)
    widths = rng.uniform(80.0, 300.0, size=(vocab_size, 3))
    return np.stack([centers, widths], axis=-1)


def _envelope(formants: np.ndarray, frequencies: np.ndarray) -> np.ndarray:
    gain = np.zeros_like(frequencies)
    for center, width in formants:
        gain += np.exp(-0.5 * ((frequencies - center) / width) ** 2)
    return 0.1 + gain / gain.max() if gain.max() > 0 else np.full_like(frequencies, 0.1)


def synthesize(
    speaker: SyntheticSpeaker,
    phonemes: np.ndarray,
    pitch_factors: np.ndarray,
    gains: np.ndarray,
    durations: np.ndarray,
    envelopes: np.ndarray,
) -> np.ndarray:
    """
    Harmonic oscillator driven per phoneme.

    Produces (sum(durations) - 1) * 256 samples so that the centered STFT yields exactly
    sum(durations) frames; sample i belongs to the phoneme of frame round(i / 256).
    """
    n_frames = int(durations.sum())
    n_samples = (n_frames - 1) * HOP_LENGTH
    frame_owner = np.repeat(np.arange(len(phonemes)), durations)
    owner = frame_owner[np.minimum(np.rint(np.arange(n_samples) / HOP_LENGTH).astype(int), n_frames - 1)]

    t = np.arange(n_samples) / SAMPLE_RATE
    f0 = speaker.f0_base * pitch_factors[owner] * (1.0 + speaker.vibrato_depth * np.sin(2 * np.pi * speaker.vibrato_rate * t))
    phase = 2 * np.pi * np.cumsum(f0) / SAMPLE_RATE

    signal = np.zeros(n_samples)
    for position, phoneme in enumerate(phonemes):
        mask = owner == position
        if not mask.any():
            continue
        for h in range(1, N_HARMONICS + 1):
            frequency = h * f0[mask]
            shaped = speaker.harmonic_amplitudes[h - 1] * _envelope(envelopes[phoneme], frequency)
            shaped = np.where(frequency < 0.45 * SAMPLE_RATE, shaped, 0.0)
            signal[mask] += shaped * np.sin(h * phase[mask])
        signal[mask] *= gains[position]
    return np.clip(OUTPUT_GAIN * signal, -1.0, 1.0)


def _generate_utterance(job):
    speaker, speaker_index, utterance_index, split, vocab_size, envelopes, seed, min_len, max_len, out_dir = job
    rng = np.random.default_rng([seed, 3, speaker_index, utterance_index])
    length = int(rng.integers(min_len, max_len + 1))
    phonemes = rng.integers(1, vocab_size, size=length)
    pitch_factors = rng.uniform(0.85, 1.15, size=length)
    gains = rng.uniform(0.3, 0.9, size=length)
    durations = rng.integers(MIN_DURATION, MAX_DURATION + 1, size=length)

    utterance_id = f"{speaker.id}_{utterance_index:03d}"
    wav_path = os.path.join(out_dir, "wavs", f"{utterance_id}.wav")
    mel_path = os.path.join(out_dir, "mels", f"{utterance_id}.mel")
    samples = synthesize(speaker, phonemes, pitch_factors, gains, durations, envelopes)
    save_wav(wav_path, AudioBuffer(samples))
    mel = mel_spectrogram(load_wav(wav_path))
    if mel.shape[0] != durations.sum():
        raise DataError(f"{utterance_id}: mel has {mel.shape[0]} frames but durations sum to {durations.sum()}")
    write_mel(mel_path, mel)

    return {
        "utterance_id": utterance_id,
        "speaker_id": speaker.id,
        "split": split,
        "phonemes": " ".join(str(p) for p in phonemes),
        "pitch": " ".join(repr(float(v)) for v in np.log(speaker.f0_base * pitch_factors)),
        "energy": " ".join(repr(float(v)) for v in gains),
        "durations": " ".join(str(int(d)) for d in durations),
        "n_frames": int(durations.sum()),
        "wav_path": os.path.relpath(wav_path, out_dir),
        "mel_path": os.path.relpath(mel_path, out_dir),
    }


def generate_dataset(
    out_dir: str,
    n_speakers: int = 4,
    n_utterances: int = 8,
    vocab: Optional[PhonemeVocabulary] = None,
    seed: int = 1234,
    n_heldout_speakers: int = 0,
    min_phonemes: int = 4,
    max_phonemes: int = 10,
) -> pd.DataFrame:
    """
    Write a seeded synthetic multi-speaker corpus: WAVs, MEL0 mels, vocab.txt, speakers.csv and
    manifest.csv. Held-out speakers are tagged split=heldout and never used for training.
    """
    if n_speakers < 2 or n_utterances < 2:
        raise UsageError("generate_dataset needs at least 2 speakers and 2 utterances per speaker")
    vocab = vocab or PhonemeVocabulary(DEFAULT_PHONEMES)
    envelopes = phoneme_envelopes(len(vocab), seed)
    speakers = [make_speaker(i, seed) for i in range(n_speakers + n_heldout_speakers)]

    jobs = []
    for index, speaker in enumerate(speakers):
        split = "train" if index < n_speakers else "heldout"
        for utterance_index in range(n_utterances):
            jobs.append((speaker, index, utterance_index, split, len(vocab), envelopes, seed,
                         min_phonemes, max_phonemes, out_dir))

    try:
        os.makedirs(out_dir, exist_ok=True)
        rows = parallel_map(_generate_utterance, jobs)
        vocab.save(os.path.join(out_dir, VOCAB_FILE))
        _write_csv(pd.DataFrame([{
            "speaker_id": s.id,
            "f0_base": s.f0_base,
            "vibrato_rate": s.vibrato_rate,
            "vibrato_depth": s.vibrato_depth,
            "harmonic_amplitudes": " ".join(repr(float(a)) for a in s.harmonic_amplitudes),
        } for s in speakers]), os.path.join(out_dir, SPEAKERS_FILE))
        manifest = pd.DataFrame(rows)
        _write_csv(manifest, os.path.join(out_dir, MANIFEST))
    except OSError as e:
        logger.error(f"Error writing dataset to {out_dir}: {str(e)}")
        raise DataError(f"Cannot write dataset under {out_dir}: {e}")

    logger.info(f"Generated {len(manifest)} utterances from {len(speakers)} speakers in {out_dir}")
    return manifest


def _write_csv(frame: pd.DataFrame, path: str):
    temp_file = f"{path}.tmp"
    frame.to_csv(temp_file, index=False)
    shutil.move(temp_file, path)


def _floats(field: str) -> np.ndarray:
    return np.array([float(v) for v in str(field).split()])


class SyntheticCorpus:
    """Utterances of a generated corpus, loaded from its manifest."""

    def __init__(self, data_dir: str, utterances: List[Utterance], vocab: PhonemeVocabulary):
        self.data_dir = data_dir
        self.utterances = utterances
        self.vocab = vocab

    def __len__(self):
        return len(self.utterances)

    @classmethod
    def load(cls, data_dir: str) -> "SyntheticCorpus":
        manifest_path = os.path.join(data_dir, MANIFEST)
        if not os.path.exists(manifest_path):
            raise DataError(f"No manifest at {manifest_path}; run gen-data first")
        manifest = pd.read_csv(manifest_path, dtype={"phonemes": str, "durations": str})
        vocab = PhonemeVocabulary.load(os.path.join(data_dir, VOCAB_FILE))

        def load_row(row) -> Utterance:
            durations = _floats(row.durations).astype(np.int64)
            mel = read_mel(os.path.join(data_dir, row.mel_path))
            if mel.shape[0] != durations.sum():
                raise DataError(f"{row.utterance_id}: durations sum to {durations.sum()} but mel has {mel.shape[0]} frames")
            return Utterance(
                utterance_id=row.utterance_id,
                speaker_id=row.speaker_id,
                split=row.split,
                phonemes=vocab.encode(str(row.phonemes).split()),
                targets=VarianceTargets(_floats(row.pitch), _floats(row.energy), durations),
                mel=mel,
                samples=load_wav(os.path.join(data_dir, row.wav_path)).samples,
            )

        utterances = parallel_map(load_row, list(manifest.itertuples(index=False)))
        logger.info(f"Loaded {len(utterances)} utterances from {data_dir}")
        return cls(data_dir, utterances, vocab)

    def split(self, name: str) -> List[Utterance]:
        return [u for u in self.utterances if u.split == name]


def corpus_vocabulary(data_dir: str) -> PhonemeVocabulary:
    """The corpus inventory when data_dir holds one, the default inventory otherwise."""
    path = os.path.join(data_dir, VOCAB_FILE)
    if os.path.exists(path):
        return PhonemeVocabulary.load(path)
    logger.warning(f"No {VOCAB_FILE} in {data_dir}; using the default phoneme inventory")
    return PhonemeVocabulary(DEFAULT_PHONEMES)
