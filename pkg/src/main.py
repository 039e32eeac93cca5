import sys
from dotenv import load_dotenv
from loguru import logger
from cli.cli import create_cli
from utils.logging import log_manager

load_dotenv()


def main(argv=None) -> int:
    """
    Runs one cif-tts subcommand by performing the following:

    1. Configures the loguru sinks (level from CIF_TTS_LOG_LEVEL).
    2. Creates the CLI and loads one cog per subcommand.
    3. Dispatches and maps typed failures to exit codes.

    @param argv: Arguments without the program name; defaults to sys.argv[1:].
    @return int: 0 success, 2 usage error, 3 data/format error, 4 numerical failure.
    """
    log_manager.setup()
    cli = create_cli()
    code = cli.run(argv)
    if code:
        logger.debug(f"Exiting with status {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
