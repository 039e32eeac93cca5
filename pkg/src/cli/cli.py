import argparse
import importlib
from typing import Dict, List, Optional
from loguru import logger
from utils.errors import CifTtsError, UsageError

EXTENSIONS = (
    "cogs.gen_data",
    "cogs.train",
    "cogs.synth",
    "cogs.speaker_embed",
    "cogs.eval_mcd",
    "cogs.grad_check",
    "cogs.ablate",
)


class Cog:
    """One subcommand: declares its flags and runs with the parsed arguments."""

    name: str = ""
    help: str = ""

    def __init__(self, cli: "Cli"):
        self.cli = cli

    def add_arguments(self, parser: argparse.ArgumentParser):
        pass

    def run(self, args: argparse.Namespace) -> int:
        raise NotImplementedError


class Cli:
    """Argument parser whose subcommands are contributed by extension modules."""

    def __init__(self, prog: str = "cif-tts"):
        self.parser = argparse.ArgumentParser(prog=prog, description="Zero-shot TTS acoustic model toolkit")
        self.subparsers = self.parser.add_subparsers(dest="command", metavar="COMMAND")
        self.subparsers.required = True
        self.cogs: Dict[str, Cog] = {}

    def load_extension(self, module_name: str):
        module = importlib.import_module(module_name)
        module.setup(self)

    def add_cog(self, cog: Cog):
        parser = self.subparsers.add_parser(cog.name, help=cog.help, description=cog.help)
        cog.add_arguments(parser)
        self.cogs[cog.name] = cog

    def run(self, argv: Optional[List[str]] = None) -> int:
        """Dispatch to a subcommand and map failures to exit codes (2 usage, 3 data, 4 numerical)."""
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            return int(e.code or 0) and 2
        try:
            return self.cogs[args.command].run(args) or 0
        except CifTtsError as e:
            logger.error(f"{args.command} failed: {str(e)}")
            return e.exit_code
        except KeyboardInterrupt:
            logger.warning("Interrupted")
            return UsageError.exit_code


def create_cli() -> Cli:
    """Create the command-line application with every subcommand loaded"""
    cli = Cli()
    for extension in EXTENSIONS:
        cli.load_extension(extension)
    return cli
