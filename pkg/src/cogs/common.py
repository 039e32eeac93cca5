import argparse
from typing import Dict, List, Sequence
from tabulate import tabulate
from training.config import Config


def add_common_arguments(parser: argparse.ArgumentParser, checkpoint: bool = False):
    """Flags shared by every subcommand; --seed, --out and --steps override the config file."""
    parser.add_argument("--config", metavar="PATH", help="key=value config file (see configs/desk.cfg)")
    parser.add_argument("--seed", type=int, metavar="U64", help="override the config seed")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--steps", type=int, metavar="N", help="override max_steps")
    if checkpoint:
        parser.add_argument("--checkpoint", metavar="PATH", help="checkpoint file to load")


def load_config(args: argparse.Namespace, out_field: str = "out_dir") -> Config:
    """
    Config from --config with the CLI overrides applied.

    @param out_field: The config field that --out overrides (data_dir for gen-data).
    """
    overrides = {"seed": args.seed, "max_steps": args.steps, out_field: args.out}
    return Config.load(args.config, **overrides)


def print_table(rows: Sequence[Dict[str, object]], headers: List[str], floatfmt: str = ".6g"):
    print(tabulate([[row[h] for h in headers] for row in rows], headers=headers, floatfmt=floatfmt))
