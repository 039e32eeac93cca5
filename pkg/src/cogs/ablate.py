import argparse
from cli.cli import Cli, Cog
from cogs.common import add_common_arguments, load_config, print_table
from utils.logging import log_manager
from training.ablation import GRIDS, ablation_matrix


class AblateCog(Cog):
    name = "ablate"
    help = "Train and evaluate a grid of ablation configurations with a shared seed and data order"

    def add_arguments(self, parser: argparse.ArgumentParser):
        add_common_arguments(parser)
        parser.add_argument("--grid", choices=GRIDS, default="one-factor", help="which configurations to compare")

    def run(self, args: argparse.Namespace) -> int:
        config = load_config(args)
        log_manager.attach_run_dir(config.out_dir)
        report, path = ablation_matrix(config, grid=args.grid)
        print_table(
            report.to_dict("records"),
            ["name", "final_mel_l1", "mcd_dtw_seen", "mcd_dtw_unseen", "similarity_margin"],
        )
        print(path)
        return 0


def setup(cli: Cli):
    cli.add_cog(AblateCog(cli))
