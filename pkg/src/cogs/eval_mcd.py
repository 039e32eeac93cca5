import argparse
import os
import shutil
import numpy as np
import pandas as pd
from typing import Dict, List, Tuple
from loguru import logger
from cli.cli import Cli, Cog
from cogs.common import add_common_arguments, load_config, print_table
from utils.errors import DataError, UsageError
from utils.parallel import parallel_map
from dsp.wav import load_wav
from dsp.spectral import mel_spectrogram, mfcc
from dsp.melio import read_mel
from evaluation.mcd import mcd_dtw, mcd_plain

MCD_COLUMNS = ["ref_path", "syn_path", "mcd_dtw", "mcd_plain", "path_length"]


def load_mel(path: str) -> np.ndarray:
    """A (T, 80) log-mel from a MEL0 file, or computed from a WAV."""
    if path.lower().endswith(".wav"):
        return mel_spectrogram(load_wav(path))
    return read_mel(path)


def score_pair(pair: Tuple[str, str]) -> Dict[str, object]:
    ref_path, syn_path = pair
    reference, synthesized = mfcc(load_mel(ref_path)), mfcc(load_mel(syn_path))
    aligned = mcd_dtw(reference, synthesized)
    plain = mcd_plain(reference, synthesized).value if reference.shape == synthesized.shape else None
    return {
        "ref_path": ref_path,
        "syn_path": syn_path,
        "mcd_dtw": aligned.value,
        "mcd_plain": plain,
        "path_length": aligned.path_length,
    }


def read_pairs(path: str) -> List[Tuple[str, str]]:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        logger.error(f"Error reading pairs file {path}: {str(e)}")
        raise DataError(f"Cannot read pairs file {path}: {e}")
    if not {"ref_path", "syn_path"} <= set(frame.columns):
        raise DataError(f"{path} needs ref_path and syn_path columns, found {list(frame.columns)}")
    base = os.path.dirname(os.path.abspath(path))
    resolve = lambda p: p if os.path.isabs(p) else os.path.join(base, p)
    return [(resolve(str(r)), resolve(str(s))) for r, s in zip(frame["ref_path"], frame["syn_path"])]


class EvalMcdCog(Cog):
    name = "eval-mcd"
    help = "Mel cepstral distortion (DTW-aligned and frame-by-frame) between reference and synthesized mels"

    def add_arguments(self, parser: argparse.ArgumentParser):
        add_common_arguments(parser)
        parser.add_argument("--ref", metavar="PATH", help="reference MEL0 or WAV")
        parser.add_argument("--syn", metavar="PATH", help="synthesized MEL0 or WAV")
        parser.add_argument("--pairs", metavar="CSV", help="CSV with ref_path and syn_path columns")

    def run(self, args: argparse.Namespace) -> int:
        config = load_config(args)
        if args.pairs:
            pairs = read_pairs(args.pairs)
        elif args.ref and args.syn:
            pairs = [(args.ref, args.syn)]
        else:
            raise UsageError("eval-mcd needs --ref and --syn, or --pairs")

        rows = parallel_map(score_pair, pairs)
        frame = pd.DataFrame(rows, columns=MCD_COLUMNS)
        os.makedirs(config.out_dir, exist_ok=True)
        path = os.path.join(config.out_dir, "mcd.csv")
        temp_file = f"{path}.tmp"
        frame.to_csv(temp_file, index=False)
        shutil.move(temp_file, path)

        print_table(
            [{**row, "mcd_plain": "" if row["mcd_plain"] is None else row["mcd_plain"]} for row in rows],
            MCD_COLUMNS,
        )
        print(f"mean mcd_dtw: {frame['mcd_dtw'].mean():.6g} over {len(frame)} pair(s)")
        print(path)
        return 0


def setup(cli: Cli):
    cli.add_cog(EvalMcdCog(cli))
