import os
import numpy as np
import pandas as pd
import pytest
from backbone import PhonemeVocabulary
from dsp import HOP_LENGTH, mel_spectrogram, AudioBuffer
from training import SyntheticCorpus, generate_dataset
from training.dataset import MANIFEST, corpus_vocabulary, make_speaker
from utils.errors import DataError, UsageError


class TestGenerateDataset:
    def test_counts_and_layout(self, corpus_dir):
        manifest = pd.read_csv(os.path.join(corpus_dir, MANIFEST))
        assert len(manifest) == 6
        assert (manifest["split"] == "train").sum() == 4
        assert set(manifest.loc[manifest["split"] == "heldout", "speaker_id"]) == {"spk02"}
        for name in ("vocab.txt", "speakers.csv"):
            assert os.path.exists(os.path.join(corpus_dir, name))
        assert all(os.path.exists(os.path.join(corpus_dir, p)) for p in manifest["wav_path"])

    def test_durations_match_mel_frames(self, corpus):
        for utterance in corpus.utterances:
            assert utterance.targets.durations.sum() == utterance.mel.shape[0]
            assert len(utterance.phonemes) == len(utterance.targets.durations)
            assert 4 <= len(utterance.phonemes) <= 5
            assert len(utterance.samples) == (utterance.mel.shape[0] - 1) * HOP_LENGTH

    def test_stored_mels_match_audio(self, corpus):
        utterance = corpus.utterances[0]
        assert np.array_equal(mel_spectrogram(AudioBuffer(utterance.samples)), utterance.mel)

    def test_seeded(self, tmp_path, corpus_dir):
        again = str(tmp_path / "again")
        generate_dataset(again, n_speakers=2, n_utterances=2, seed=3, n_heldout_speakers=1, min_phonemes=4, max_phonemes=5)
        for name in ("manifest.csv", "wavs/spk00_000.wav", "mels/spk01_001.mel"):
            first = open(os.path.join(corpus_dir, name), "rb").read()
            assert open(os.path.join(again, name), "rb").read() == first

    def test_speakers_differ(self):
        a, b = make_speaker(0, 1), make_speaker(1, 1)
        assert a.f0_base != b.f0_base
        assert np.linalg.norm(a.harmonic_amplitudes) == pytest.approx(1.0)

    def test_custom_vocabulary(self, tmp_path):
        vocab = PhonemeVocabulary(["<pad>", "x", "y", "z"])
        manifest = generate_dataset(str(tmp_path / "small"), n_speakers=2, n_utterances=2, vocab=vocab, seed=1,
                                    min_phonemes=2, max_phonemes=3)
        ids = {int(p) for row in manifest["phonemes"] for p in row.split()}
        assert ids <= {1, 2, 3}
        assert corpus_vocabulary(str(tmp_path / "small")).symbols == vocab.symbols

    def test_too_small(self, tmp_path):
        with pytest.raises(UsageError):
            generate_dataset(str(tmp_path / "x"), n_speakers=1)


class TestSyntheticCorpus:
    def test_splits(self, corpus):
        assert len(corpus) == 6
        assert {u.speaker_id for u in corpus.split("train")} == {"spk00", "spk01"}
        assert {u.speaker_id for u in corpus.split("heldout")} == {"spk02"}

    def test_reference_is_cropped(self, corpus):
        utterance = corpus.utterances[0]
        assert len(utterance.reference(500)) == 500

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DataError):
            SyntheticCorpus.load(str(tmp_path))

    def test_inconsistent_durations(self, tmp_path, corpus_dir):
        import shutil
        copy = str(tmp_path / "copy")
        shutil.copytree(corpus_dir, copy)
        manifest = pd.read_csv(os.path.join(copy, MANIFEST), dtype=str)
        durations = manifest.loc[0, "durations"].split()
        durations[0] = str(int(durations[0]) + 1)
        manifest.loc[0, "durations"] = " ".join(durations)
        manifest.to_csv(os.path.join(copy, MANIFEST), index=False)
        with pytest.raises(DataError):
            SyntheticCorpus.load(copy)

    def test_default_vocabulary_fallback(self, tmp_path):
        assert len(corpus_vocabulary(str(tmp_path))) == len(PhonemeVocabulary())
