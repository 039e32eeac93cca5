import argparse
from loguru import logger
from cli.cli import Cli, Cog
from cogs.common import add_common_arguments, load_config
from backbone.vocab import PhonemeVocabulary
from training.dataset import generate_dataset


class GenDataCog(Cog):
    name = "gen-data"
    help = "Generate the seeded synthetic multi-speaker corpus"

    def add_arguments(self, parser: argparse.ArgumentParser):
        add_common_arguments(parser)
        parser.add_argument("--vocab", metavar="PATH", help="phoneme inventory, one symbol per line")

    def run(self, args: argparse.Namespace) -> int:
        config = load_config(args, out_field="data_dir")
        vocab = PhonemeVocabulary.load(args.vocab) if args.vocab else None
        manifest = generate_dataset(
            config.data_dir,
            n_speakers=config.n_speakers,
            n_utterances=config.n_utterances,
            vocab=vocab,
            seed=config.seed,
            n_heldout_speakers=config.n_heldout_speakers,
            min_phonemes=config.min_phonemes,
            max_phonemes=config.max_phonemes,
        )
        counts = manifest.groupby("split").size().to_dict()
        logger.info(f"Corpus written to {config.data_dir}: {counts}")
        print(f"{len(manifest)} utterances written to {config.data_dir}")
        return 0


def setup(cli: Cli):
    cli.add_cog(GenDataCog(cli))
