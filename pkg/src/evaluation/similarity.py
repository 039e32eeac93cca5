import numpy as np
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple
from loguru import logger
from sklearn.metrics.pairwise import cosine_similarity
from utils.errors import UsageError


@dataclass
class SimilarityReport:
    intra: Dict[str, float]
    intra_mean: float
    inter: float
    margin: float
    n_excluded: int = 0
    speakers: List[str] = field(default_factory=list)


def similarity_report(embeddings: Sequence[Tuple[str, np.ndarray]]) -> SimilarityReport:
    """
    Cosine-similarity clustering summary for speaker embeddings.

    intra[speaker] is the mean cosine over distinct utterance pairs of that speaker;
    inter is the mean over all cross-speaker pairs; margin = mean(intra) - inter.
    Zero vectors are excluded and counted in n_excluded.
    """
    kept, excluded = [], 0
    for speaker_id, vector in embeddings:
        vector = np.asarray(vector, dtype=np.float64).reshape(-1)
        if not np.any(vector):
            excluded += 1
            continue
        kept.append((str(speaker_id), vector))
    if excluded:
        logger.warning(f"Excluded {excluded} zero embedding(s) from the similarity report")

    speakers = sorted({s for s, _ in kept})
    counts = {s: sum(1 for k, _ in kept if k == s) for s in speakers}
    if len(speakers) < 2 or min(counts.values()) < 2:
        raise UsageError(f"similarity_report needs >= 2 speakers with >= 2 utterances each, got {counts}")

    labels = np.array([s for s, _ in kept])
    cosines = np.clip(cosine_similarity(np.stack([v for _, v in kept])), -1.0, 1.0)
    upper = np.triu(np.ones_like(cosines, dtype=bool), k=1)
    same = labels[:, None] == labels[None, :]

    intra = {}
    for speaker in speakers:
        mask = upper & same & (labels[:, None] == speaker)
        intra[speaker] = float(cosines[mask].mean())
    inter = float(cosines[upper & ~same].mean())
    intra_mean = float(np.mean(list(intra.values())))
    return SimilarityReport(intra, intra_mean, inter, intra_mean - inter, excluded, speakers)
