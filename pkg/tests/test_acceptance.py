import os
import numpy as np
import pandas as pd
import pytest
from backbone import InjectionSite
from evaluation import similarity_report
from evaluation.gradient_suite import tiny_config
from training import Config, SyntheticCorpus, Trainer, ablation_configs, generate_dataset
from training.trainer import ReferenceCache

pytestmark = pytest.mark.slow

DESK_CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "desk.cfg")


@pytest.fixture(scope="module")
def desk_config(tmp_path_factory):
    return Config.load(
        DESK_CONFIG,
        data_dir=str(tmp_path_factory.mktemp("desk")),
        out_dir=str(tmp_path_factory.mktemp("overfit")),
    )


@pytest.fixture(scope="module")
def desk_corpus(desk_config):
    generate_dataset(
        desk_config.data_dir,
        n_speakers=desk_config.n_speakers,
        n_utterances=desk_config.n_utterances,
        seed=desk_config.seed,
        n_heldout_speakers=desk_config.n_heldout_speakers,
        min_phonemes=desk_config.min_phonemes,
        max_phonemes=desk_config.max_phonemes,
    )
    return SyntheticCorpus.load(desk_config.data_dir)


@pytest.fixture(scope="module")
def overfit_run(desk_config, desk_corpus):
    trainer = Trainer(desk_config, desk_corpus)
    result = trainer.run()
    return trainer, result


class TestToyOverfit:
    def test_shipped_configuration(self, desk_config):
        assert (desk_config.hidden, desk_config.encoder_layers, desk_config.decoder_layers) == (128, 4, 4)
        assert desk_config.negation_enabled
        assert desk_config.max_steps == 2000

    def test_loss_halves(self, overfit_run):
        _, result = overfit_run
        frame = pd.read_csv(result.metrics_path)
        assert len(frame) == 2000
        first, last = frame.iloc[0], frame.iloc[-1]
        assert last["total"] < 0.5 * first["total"]
        assert last["mel_l1"] < 0.5 * first["mel_l1"]

    def test_heldout_speakers_cluster(self, overfit_run, desk_corpus):
        trainer, _ = overfit_run
        references = ReferenceCache(trainer.config.ref_max_samples)
        heldout = desk_corpus.split("heldout")
        assert len(heldout) == 16
        embeddings = []
        for utterance in heldout:
            samples, mel = references.get(utterance)
            embeddings.append((utterance.speaker_id, trainer.model.speaker.embed(samples, mel)))
        report = similarity_report(embeddings)
        assert report.margin >= 0.1


class TestConfigGrid:
    def test_every_configuration_trains_one_step(self, desk_corpus, tmp_path):
        base = tiny_config(data_dir=desk_corpus.data_dir, max_steps=1, batch_size=1, ref_max_samples=1600)
        configs = ablation_configs(base, "heads-depth")
        configs += [base.with_overrides(injection_site=site.value) for site in InjectionSite]
        hashes = set()
        for index, config in enumerate(configs):
            trainer = Trainer(config, desk_corpus, str(tmp_path / str(index)))
            row = trainer.train_step()
            assert np.isfinite(row["total"])
            assert all(p.grad is None for p in trainer.model.parameters().values())
            hashes.add(config.config_hash())
        assert len(hashes) == 9 + 2
