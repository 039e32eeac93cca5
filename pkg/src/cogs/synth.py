import argparse
import os
from loguru import logger
from cli.cli import Cli, Cog
from cogs.common import add_common_arguments, load_config
from utils.errors import UsageError
from dsp.wav import AudioBuffer, load_wav
from dsp.spectral import mel_spectrogram, trim_silence
from dsp.melio import write_mel, write_mel_csv
from backbone.vocab import read_phoneme_file
from training.dataset import corpus_vocabulary
from training.trainer import LATEST, load_model, synthesize_mel


def reference_audio(path: str, max_samples: int) -> AudioBuffer:
    """Load a reference WAV, trim its leading and trailing silence and crop it like training references."""
    audio = trim_silence(load_wav(path))
    return AudioBuffer(audio.samples[:max_samples], audio.sample_rate)


class SynthCog(Cog):
    name = "synth"
    help = "Zero-shot synthesis of a mel-spectrogram from phonemes and one reference WAV"

    def add_arguments(self, parser: argparse.ArgumentParser):
        add_common_arguments(parser, checkpoint=True)
        parser.add_argument("--phonemes", required=True, metavar="PATH", help="phoneme ids or symbols, whitespace separated")
        parser.add_argument("--ref", required=True, metavar="WAV", help="reference speaker audio")
        parser.add_argument("--name", metavar="STEM", help="output file stem (defaults to the phoneme file name)")

    def run(self, args: argparse.Namespace) -> int:
        config = load_config(args)
        checkpoint = args.checkpoint or os.path.join(config.out_dir, LATEST)
        vocab = corpus_vocabulary(config.data_dir)
        phonemes = read_phoneme_file(args.phonemes, vocab)
        if len(phonemes) == 0:
            raise UsageError(f"{args.phonemes} holds no phonemes")

        model = load_model(config, checkpoint, len(vocab))
        reference = reference_audio(args.ref, config.ref_max_samples)
        mel, durations = synthesize_mel(model, phonemes, reference.samples, mel_spectrogram(reference))

        stem = args.name or os.path.splitext(os.path.basename(args.phonemes))[0]
        mel_path = os.path.join(config.out_dir, f"{stem}.mel")
        csv_path = os.path.join(config.out_dir, f"{stem}.csv")
        write_mel(mel_path, mel)
        write_mel_csv(csv_path, mel)
        logger.info(f"Synthesized {mel.shape[0]} frames for {len(phonemes)} phonemes (durations {list(durations)})")
        print(mel_path)
        print(csv_path)
        return 0


def setup(cli: Cli):
    cli.add_cog(SynthCog(cli))
