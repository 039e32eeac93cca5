import numpy as np
import pytest
from dsp.wav import SAMPLE_RATE
from evaluation.gradient_suite import tiny_config
from training.dataset import SyntheticCorpus, generate_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tone():
    """Sine generator: tone(n_samples, frequency=440.0, amplitude=0.5)."""

    def make(n_samples: int, frequency: float = 440.0, amplitude: float = 0.5) -> np.ndarray:
        return amplitude * np.sin(2 * np.pi * frequency * np.arange(n_samples) / SAMPLE_RATE)

    return make


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Two training speakers and one held-out speaker, two short utterances each."""
    path = tmp_path_factory.mktemp("corpus")
    generate_dataset(
        str(path), n_speakers=2, n_utterances=2, seed=3, n_heldout_speakers=1, min_phonemes=4, max_phonemes=5,
    )
    return str(path)


@pytest.fixture(scope="session")
def corpus(corpus_dir):
    return SyntheticCorpus.load(corpus_dir)


@pytest.fixture
def small_config(tmp_path, corpus_dir):
    return tiny_config(
        data_dir=corpus_dir,
        out_dir=str(tmp_path / "run"),
        batch_size=2,
        max_steps=4,
        checkpoint_every=2,
        n_speakers=2,
        n_utterances=2,
        n_heldout_speakers=1,
        min_phonemes=4,
        max_phonemes=5,
        ref_max_samples=1600,
        seed=11,
    )


@pytest.fixture
def write_config():
    return _write_config


def _write_config(path, config) -> str:
    """Dump a Config as a key=value file readable by Config.load."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("# generated for a test\n")
        for key, value in config.to_dict().items():
            f.write(f"{key}={value}\n")
    return str(path)


@pytest.fixture
def config_file(tmp_path, small_config):
    return _write_config(tmp_path / "small.cfg", small_config)


@pytest.fixture(autouse=True)
def thread_cap(monkeypatch):
    monkeypatch.setenv("CIF_TTS_THREADS", "2")
