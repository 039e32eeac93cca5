import argparse
import os
import shutil
import numpy as np
import pandas as pd
from loguru import logger
from cli.cli import Cli, Cog
from cogs.common import add_common_arguments, load_config, print_table
from utils.errors import UsageError
from utils.parallel import parallel_map
from dsp.wav import AudioBuffer
from dsp.spectral import mel_spectrogram
from evaluation.similarity import similarity_report
from training.dataset import SyntheticCorpus
from training.trainer import LATEST, load_model

SPLITS = ("heldout", "train", "all")


def embedding_frame(ids, speakers, embeddings: np.ndarray) -> pd.DataFrame:
    """Rows of utterance_id, speaker_id, e0..e{D-1}."""
    frame = pd.DataFrame(embeddings, columns=[f"e{i}" for i in range(embeddings.shape[1])])
    frame.insert(0, "speaker_id", list(speakers))
    frame.insert(0, "utterance_id", list(ids))
    return frame


class SpeakerEmbedCog(Cog):
    name = "speaker-embed"
    help = "Export speaker embeddings of corpus utterances and summarize their clustering"

    def add_arguments(self, parser: argparse.ArgumentParser):
        add_common_arguments(parser, checkpoint=True)
        parser.add_argument("--split", choices=SPLITS, default="heldout", help="which manifest split to embed")

    def run(self, args: argparse.Namespace) -> int:
        config = load_config(args)
        corpus = SyntheticCorpus.load(config.data_dir)
        utterances = corpus.utterances if args.split == "all" else corpus.split(args.split)
        if not utterances:
            raise UsageError(f"No utterances in split {args.split!r} of {config.data_dir}")

        model = load_model(config, args.checkpoint or os.path.join(config.out_dir, LATEST), len(corpus.vocab))

        def embed(utterance) -> np.ndarray:
            samples = utterance.reference(config.ref_max_samples)
            return model.speaker.embed(samples, mel_spectrogram(AudioBuffer(samples)))

        embeddings = np.stack(parallel_map(embed, utterances))
        frame = embedding_frame([u.utterance_id for u in utterances], [u.speaker_id for u in utterances], embeddings)
        path = os.path.join(config.out_dir, f"embeddings_{args.split}.csv")
        os.makedirs(config.out_dir, exist_ok=True)
        temp_file = f"{path}.tmp"
        frame.to_csv(temp_file, index=False, float_format="%.17g")
        shutil.move(temp_file, path)
        logger.info(f"Wrote {len(frame)} embeddings to {path}")

        try:
            report = similarity_report([(u.speaker_id, e) for u, e in zip(utterances, embeddings)])
        except UsageError as e:
            logger.warning(f"Skipping similarity summary: {str(e)}")
            print(path)
            return 0
        rows = [{"speaker": s, "intra_cosine": report.intra[s]} for s in report.speakers]
        rows.append({"speaker": "(mean intra)", "intra_cosine": report.intra_mean})
        print_table(rows, ["speaker", "intra_cosine"])
        print(f"inter-speaker cosine: {report.inter:.6g}")
        print(f"margin: {report.margin:.6g}")
        print(path)
        return 0


def setup(cli: Cli):
    cli.add_cog(SpeakerEmbedCog(cli))
