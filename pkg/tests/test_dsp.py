import struct
import numpy as np
import pytest
from scipy.io import wavfile
from dsp import (
    AudioBuffer, HOP_LENGTH, N_FFT, N_MELS, SAMPLE_RATE, load_wav, mel_filterbank, mel_spectrogram, mfcc,
    read_mel, save_wav, stft, trim_silence, write_mel, write_mel_csv,
)
from dsp.spectral import LOG_FLOOR, N_MFCC
from utils.errors import DataError, FormatError, UsageError


def write_pcm(path, samples, rate=SAMPLE_RATE):
    wavfile.write(path, rate, np.asarray(samples, dtype=np.int16))
    return str(path)


class TestWav:
    def test_one_second(self, tmp_path):
        audio = load_wav(write_pcm(tmp_path / "a.wav", np.zeros(SAMPLE_RATE)))
        assert len(audio) == SAMPLE_RATE
        assert audio.sample_rate == SAMPLE_RATE
        assert not audio.samples.any()

    def test_full_scale_square_wave(self, tmp_path):
        square = np.where(np.arange(2000) % 100 < 50, 32767, -32767)
        samples = load_wav(write_pcm(tmp_path / "sq.wav", square)).samples
        assert np.allclose(np.abs(samples), 1.0, atol=1e-4)

    def test_stereo_is_averaged(self, tmp_path):
        stereo = np.stack([np.full(100, 1000), np.full(100, 3000)], axis=1)
        samples = load_wav(write_pcm(tmp_path / "st.wav", stereo)).samples
        assert np.allclose(samples, 2000 / 32768.0)

    def test_resampled_to_target_rate(self, tmp_path):
        audio = load_wav(write_pcm(tmp_path / "r.wav", np.zeros(16000), rate=16000))
        assert audio.sample_rate == SAMPLE_RATE
        assert len(audio) == SAMPLE_RATE

    def test_save_then_load(self, tmp_path, tone):
        samples = tone(3000)
        path = str(tmp_path / "t.wav")
        save_wav(path, AudioBuffer(samples))
        assert np.allclose(load_wav(path).samples, samples, atol=2.0 / 32767)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_wav(str(tmp_path / "missing.wav"))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"RIFX" + bytes(40))
        with pytest.raises(FormatError) as excinfo:
            load_wav(str(path))
        assert excinfo.value.offset == 0

    def test_not_pcm16(self, tmp_path):
        path = str(tmp_path / "f.wav")
        wavfile.write(path, SAMPLE_RATE, np.zeros(100, dtype=np.float32))
        with pytest.raises(FormatError):
            load_wav(path)

    def test_truncated_data_chunk(self, tmp_path):
        path = write_pcm(tmp_path / "t.wav", np.zeros(100))
        blob = open(path, "rb").read()
        with open(path, "wb") as f:
            f.write(blob[:-50])
        with pytest.raises(FormatError) as excinfo:
            load_wav(path)
        assert excinfo.value.offset is not None


class TestTrim:
    def test_tone_unchanged(self, tone):
        samples = tone(8192)
        assert np.array_equal(trim_silence(AudioBuffer(samples)).samples, samples)

    def test_surrounding_silence_removed(self, tone):
        lead, body = 2048, tone(8192)
        padded = np.concatenate([np.zeros(lead), body, np.zeros(lead)])
        trimmed = trim_silence(AudioBuffer(padded)).samples
        assert abs(len(trimmed) - len(body)) <= 512
        assert np.array_equal(trimmed[:len(body)], body[:len(trimmed)])

    def test_half_second_silence(self, tone):
        half = SAMPLE_RATE // 2
        body = tone(SAMPLE_RATE)
        trimmed = trim_silence(AudioBuffer(np.concatenate([np.zeros(half), body, np.zeros(half)]))).samples
        assert abs(len(trimmed) - len(body)) <= 2 * 512

    def test_all_zero_becomes_empty(self):
        assert len(trim_silence(AudioBuffer(np.zeros(5000)))) == 0

    def test_idempotent(self, tone, rng):
        samples = np.concatenate([np.zeros(3000), tone(7000) * np.linspace(0.01, 1.0, 7000), 1e-6 * rng.normal(size=4000)])
        once = trim_silence(AudioBuffer(samples)).samples
        twice = trim_silence(AudioBuffer(once)).samples
        assert np.array_equal(once, twice)

    def test_threshold_is_relative_to_loudest_frame(self, tone):
        lead = 4096
        body = tone(8192, amplitude=1e-4)
        trimmed = trim_silence(AudioBuffer(np.concatenate([np.zeros(lead), body, np.zeros(lead)]))).samples
        assert abs(len(trimmed) - len(body)) <= 2 * 512
        assert np.abs(trimmed).max() == pytest.approx(1e-4, rel=1e-2)

    def test_top_db_sets_the_cut(self, tone):
        loud, faint = tone(8192), tone(8192, amplitude=0.005)
        samples = np.concatenate([loud, faint])
        assert len(trim_silence(AudioBuffer(samples), top_db=60.0)) == len(samples)
        trimmed = trim_silence(AudioBuffer(samples), top_db=30.0).samples
        assert abs(len(trimmed) - len(loud)) <= 512
        assert np.array_equal(trimmed, samples[:len(trimmed)])

    def test_top_db_must_be_positive(self, tone):
        with pytest.raises(UsageError):
            trim_silence(AudioBuffer(tone(1000)), top_db=0)


class TestStft:
    def test_zero_signal(self):
        spectrum = stft(AudioBuffer(np.zeros(2560)))
        assert spectrum.shape == (11, N_FFT // 2 + 1)
        assert not np.abs(spectrum).any()

    def test_frame_count_formula(self, rng):
        for n in rng.integers(600, 20000, size=100):
            assert stft(AudioBuffer(rng.normal(size=int(n)))).shape[0] == 1 + int(n) // HOP_LENGTH

    def test_bin_centred_sine(self):
        k = 40
        samples = np.sin(2 * np.pi * k * SAMPLE_RATE / N_FFT * np.arange(8192) / SAMPLE_RATE)
        magnitude = np.abs(stft(AudioBuffer(samples)))
        interior = magnitude[4:-4]
        assert (interior.argmax(axis=1) == k).all()

    def test_energy_matches_windowed_frames(self, rng):
        samples = rng.normal(size=4096)
        spectrum = stft(AudioBuffer(samples))
        padded = np.pad(samples, N_FFT // 2, mode="reflect")
        window = np.hanning(N_FFT + 1)[:-1]
        energy = 0.0
        for t in range(spectrum.shape[0]):
            frame = padded[t * HOP_LENGTH:t * HOP_LENGTH + N_FFT] * window
            full = np.fft.fft(frame)
            energy += np.sum(frame ** 2)
            two_sided = np.abs(spectrum[t]) ** 2
            assert np.isclose(two_sided[0] + 2 * two_sided[1:-1].sum() + two_sided[-1], np.sum(np.abs(full) ** 2), rtol=1e-6)
        one_sided = np.abs(spectrum) ** 2
        total = (one_sided[:, 0] + 2 * one_sided[:, 1:-1].sum(axis=1) + one_sided[:, -1]).sum() / N_FFT
        assert total == pytest.approx(energy, rel=1e-6)


class TestMel:
    def test_zero_signal_hits_floor(self):
        mel = mel_spectrogram(AudioBuffer(np.zeros(2560)))
        assert mel.shape == (11, N_MELS)
        assert np.all(mel == np.log(LOG_FLOOR))

    def test_filterbank_shape_and_support(self):
        bank = mel_filterbank()
        assert bank.shape == (N_MELS, N_FFT // 2 + 1)
        assert (bank.sum(axis=1) > 0).all()
        assert all((row > 0).sum() < bank.shape[1] // 4 for row in bank)
        assert (bank @ np.ones(bank.shape[1]) > 0).all()

    def test_monotone_centres(self):
        centres = mel_filterbank().argmax(axis=1)
        assert (np.diff(centres) >= 0).all()
        assert centres[-1] > centres[0]

    def test_floor_and_determinism(self, tone):
        audio = AudioBuffer(tone(5000))
        first, second = mel_spectrogram(audio), mel_spectrogram(audio)
        assert (first >= np.log(LOG_FLOOR)).all()
        assert np.array_equal(mfcc(first), mfcc(second))


class TestMfcc:
    def test_constant_frame(self):
        assert np.allclose(mfcc(np.full((3, N_MELS), 2.5)), 0.0, atol=1e-12)

    def test_default_width(self, rng):
        assert mfcc(rng.normal(size=(7, N_MELS))).shape == (7, N_MFCC)

    def test_orthonormal_reconstruction(self, rng):
        from scipy.fft import dct, idct
        mel = rng.normal(size=(5, N_MELS))
        full = dct(mel, type=2, norm="ortho", axis=-1)
        assert np.array_equal(mfcc(mel, N_MELS - 1), full[:, 1:])
        assert np.allclose(idct(full, type=2, norm="ortho", axis=-1), mel, atol=1e-9)

    def test_width_bounds(self, rng):
        with pytest.raises(UsageError):
            mfcc(rng.normal(size=(2, N_MELS)), 0)
        with pytest.raises(UsageError):
            mfcc(rng.normal(size=(2, N_MELS)), N_MELS)


class TestMelFiles:
    def test_write_read(self, tmp_path, rng):
        mel = rng.normal(size=(9, N_MELS))
        path = str(tmp_path / "x.mel")
        write_mel(path, mel)
        assert np.array_equal(read_mel(path), mel)
        assert open(path, "rb").read(4) == b"MEL0"

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.mel"
        path.write_bytes(b"MEL1" + struct.pack("<I", 0))
        with pytest.raises(FormatError) as excinfo:
            read_mel(str(path))
        assert excinfo.value.offset == 0

    def test_truncated_payload(self, tmp_path, rng):
        path = str(tmp_path / "x.mel")
        write_mel(path, rng.normal(size=(3, N_MELS)))
        blob = open(path, "rb").read()
        with open(path, "wb") as f:
            f.write(blob[:-8])
        with pytest.raises(FormatError):
            read_mel(path)

    def test_wrong_width_refused(self, tmp_path, rng):
        with pytest.raises(DataError):
            write_mel(str(tmp_path / "x.mel"), rng.normal(size=(3, 40)))

    def test_csv(self, tmp_path, rng):
        import pandas as pd
        mel = rng.normal(size=(4, N_MELS))
        path = str(tmp_path / "x.csv")
        write_mel_csv(path, mel)
        frame = pd.read_csv(path, float_precision="round_trip")
        assert list(frame.columns[:2]) == ["mel_0", "mel_1"]
        assert np.array_equal(frame.to_numpy(), mel)
