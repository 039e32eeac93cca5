import argparse
from dataclasses import asdict
from cli.cli import Cli, Cog
from cogs.common import add_common_arguments, print_table
from utils.errors import NumericalError
from evaluation.gradient_suite import TOLERANCE, run_gradient_suite


class GradCheckCog(Cog):
    name = "grad-check"
    help = "Finite-difference check of every layer type and the end-to-end model"

    def add_arguments(self, parser: argparse.ArgumentParser):
        add_common_arguments(parser)
        parser.add_argument("--step-size", type=float, default=1e-5, help="central-difference step h")

    def run(self, args: argparse.Namespace) -> int:
        rows = run_gradient_suite(seed=args.seed or 0, h=args.step_size)
        print_table([asdict(row) for row in rows], ["component", "max_relative_error", "passed"], floatfmt=".3e")
        failed = [row.component for row in rows if not row.passed]
        if failed:
            raise NumericalError(f"Gradient check above {TOLERANCE:g} for: {', '.join(failed)}")
        return 0


def setup(cli: Cli):
    cli.add_cog(GradCheckCog(cli))
