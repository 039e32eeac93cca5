import os
import shutil
import numpy as np
import pandas as pd
from itertools import product
from typing import Dict, List, Optional, Tuple
from loguru import logger
from utils.errors import UsageError
from dsp.spectral import mfcc
from evaluation.mcd import mcd_dtw
from evaluation.similarity import similarity_report
from speaker.pipeline import StreamFusion
from backbone.model import CifTts, InjectionSite
from training.config import Config
from training.dataset import SyntheticCorpus, Utterance
from training.trainer import ReferenceCache, Trainer, synthesize_mel

GRIDS = ("one-factor", "full", "heads-depth")
REPORT_COLUMNS = [
    "name", "negation_enabled", "n_streams", "stream_fusion", "injection_site", "n_heads", "depth",
    "config_hash", "steps", "final_total", "final_mel_l1", "mcd_dtw_seen", "mcd_dtw_unseen", "similarity_margin",
]


def _name(config: Config) -> str:
    return (
        f"neg{'on' if config.negation_enabled else 'off'}_s{config.n_streams}_{config.stream_fusion.value}"
        f"_{config.injection_site.value}_h{config.n_heads}d{config.depth}"
    )


def ablation_configs(base: Config, grid: str = "one-factor") -> List[Config]:
    """
    Configurations to compare, all sharing the base seed and step count.

    one-factor: the base plus one-factor changes (negation off, single stream, concat fusion,
    encoder-only and decoder-only injection). full: the complete product of those axes.
    heads-depth: heads {2, 4, 8} x depth {1, 2, 4}.
    """
    if grid == "one-factor":
        variants = [
            {},
            {"negation_enabled": False},
            {"n_streams": 1},
            {"stream_fusion": StreamFusion.CONCAT},
            {"injection_site": InjectionSite.ENCODER},
            {"injection_site": InjectionSite.DECODER},
        ]
    elif grid == "full":
        variants = []
        for negation, streams, fusion, site in product(
            (True, False), (1, 2), (StreamFusion.CONCAT, StreamFusion.ATTENTION), tuple(InjectionSite)
        ):
            if streams == 1 and fusion is not base.stream_fusion:
                continue
            variants.append({"negation_enabled": negation, "n_streams": streams, "stream_fusion": fusion, "injection_site": site})
    elif grid == "heads-depth":
        variants = [{"n_heads": heads, "depth": depth} for heads, depth in product((2, 4, 8), (1, 2, 4))]
    else:
        raise UsageError(f"Unknown ablation grid {grid!r}; choose one of {', '.join(GRIDS)}")

    configs, seen = [], set()
    for variant in variants:
        config = base.with_overrides(**{k: (v.value if hasattr(v, "value") else v) for k, v in variant.items()})
        if config.config_hash() not in seen:
            seen.add(config.config_hash())
            configs.append(config)
    return configs


def _mcd_over(model: CifTts, utterances: List[Utterance], references: ReferenceCache) -> float:
    values = []
    for utterance in utterances:
        samples, ref_mel = references.get(utterance)
        mel, _ = synthesize_mel(model, utterance.phonemes, samples, ref_mel)
        values.append(mcd_dtw(mfcc(utterance.mel), mfcc(mel)).value)
    return float(np.mean(values)) if values else float("nan")


def speaker_margin(model: CifTts, utterances: List[Utterance], references: ReferenceCache) -> float:
    embeddings = []
    for utterance in utterances:
        samples, ref_mel = references.get(utterance)
        embeddings.append((utterance.speaker_id, model.speaker.embed(samples, ref_mel)))
    try:
        return similarity_report(embeddings).margin
    except UsageError as e:
        logger.warning(f"Similarity margin unavailable: {str(e)}")
        return float("nan")


def evaluate_run(model: CifTts, corpus: SyntheticCorpus, references: ReferenceCache) -> Dict[str, float]:
    """Seen-speaker MCD, unseen-speaker MCD and held-out embedding margin for a trained model."""
    seen = corpus.split("train")
    unseen = corpus.split("heldout")
    return {
        "mcd_dtw_seen": _mcd_over(model, seen, references),
        "mcd_dtw_unseen": _mcd_over(model, unseen, references),
        "similarity_margin": speaker_margin(model, unseen or seen, references),
    }


def ablation_matrix(
    base: Config,
    corpus: Optional[SyntheticCorpus] = None,
    grid: str = "one-factor",
    out_dir: Optional[str] = None,
) -> Tuple[pd.DataFrame, str]:
    """
    Train and evaluate every configuration of a grid; writes ablation.csv under out_dir.

    The report lists the trend columns only; it makes no claim about which direction wins.
    """
    corpus = corpus or SyntheticCorpus.load(base.data_dir)
    out_dir = out_dir or base.out_dir
    rows = []
    for config in ablation_configs(base, grid):
        name = _name(config)
        logger.info(f"Ablation run {name} ({config.max_steps} steps)")
        trainer = Trainer(config, corpus, os.path.join(out_dir, name))
        result = trainer.run()
        last = result.losses[-1] if result.losses else {"total": float("nan"), "mel_l1": float("nan")}
        row = {
            "name": name,
            "negation_enabled": config.negation_enabled,
            "n_streams": config.n_streams,
            "stream_fusion": config.stream_fusion.value,
            "injection_site": config.injection_site.value,
            "n_heads": config.n_heads,
            "depth": config.depth,
            "config_hash": config.config_hash(),
            "steps": trainer.step,
            "final_total": last["total"],
            "final_mel_l1": last["mel_l1"],
        }
        row.update(evaluate_run(trainer.model, corpus, trainer.references))
        rows.append(row)

    report = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "ablation.csv")
    temp_file = f"{path}.tmp"
    report.to_csv(temp_file, index=False)
    shutil.move(temp_file, path)
    logger.info(f"Ablation report written to {path}")
    return report, path
