import argparse
from cli.cli import Cli, Cog
from cogs.common import add_common_arguments, load_config
from training.trainer import train


class TrainCog(Cog):
    name = "train"
    help = "Train the acoustic model on the synthetic corpus"

    def add_arguments(self, parser: argparse.ArgumentParser):
        add_common_arguments(parser, checkpoint=True)

    def run(self, args: argparse.Namespace) -> int:
        """--checkpoint resumes an earlier run of the same config."""
        config = load_config(args)
        result = train(config, resume=args.checkpoint)
        if result.losses:
            first, last = result.losses[0], result.losses[-1]
            print(f"steps {first['step']}..{last['step']}: total {first['total']:.4f} -> {last['total']:.4f}")
        print(f"checkpoint: {result.checkpoint_path}")
        print(f"metrics: {result.metrics_path}")
        return 0


def setup(cli: Cli):
    cli.add_cog(TrainCog(cli))
