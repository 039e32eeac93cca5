import os
import shutil
import numpy as np
from typing import List, Sequence, Union
from loguru import logger
from utils.errors import DataError, UsageError

DEFAULT_PHONEMES = [
    "<pad>", "AA", "AE", "AH", "AO", "EH", "ER", "IH", "IY", "OW", "UH", "UW",
    "B", "D", "F", "G", "K", "L", "M", "N", "P", "R", "S", "T", "V", "Z", "sp",
]


class PhonemeVocabulary:
    """Symbol table where a symbol's id is its zero-based line number in the vocabulary file."""

    def __init__(self, symbols: Sequence[str] = DEFAULT_PHONEMES):
        if len(set(symbols)) != len(symbols):
            raise DataError("Vocabulary contains duplicate symbols")
        self.symbols = list(symbols)
        self.index = {symbol: i for i, symbol in enumerate(self.symbols)}

    def __len__(self):
        return len(self.symbols)

    @classmethod
    def load(cls, path: str) -> "PhonemeVocabulary":
        try:
            with open(path, "r", encoding="utf-8") as f:
                symbols = [line.strip() for line in f if line.strip()]
        except OSError as e:
            logger.error(f"Error reading vocabulary {path}: {str(e)}")
            raise DataError(f"Cannot read vocabulary {path}: {e}")
        return cls(symbols)

    def save(self, path: str):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        temp_file = f"{path}.tmp"
        with open(temp_file, "w", encoding="utf-8") as f:
            f.write("\n".join(self.symbols) + "\n")
        shutil.move(temp_file, path)

    def encode(self, tokens: Sequence[Union[str, int]]) -> np.ndarray:
        """Resolve integer ids or symbol names to ids, rejecting anything outside the vocabulary."""
        ids: List[int] = []
        for token in tokens:
            token = str(token)
            if token.lstrip("-").isdigit():
                value = int(token)
                if not 0 <= value < len(self):
                    raise UsageError(f"Phoneme id {value} is outside the vocabulary of size {len(self)}")
                ids.append(value)
            elif token in self.index:
                ids.append(self.index[token])
            else:
                raise UsageError(f"Unknown phoneme symbol: {token}")
        if not ids:
            raise UsageError("Phoneme sequence is empty")
        return np.array(ids, dtype=np.int64)

    def decode(self, ids: Sequence[int]) -> List[str]:
        return [self.symbols[int(i)] for i in ids]


def read_phoneme_file(path: str, vocabulary: PhonemeVocabulary) -> np.ndarray:
    """Whitespace-separated ids or symbol names."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            tokens = f.read().split()
    except OSError as e:
        logger.error(f"Error reading phoneme file {path}: {str(e)}")
        raise DataError(f"Cannot read phoneme file {path}: {e}")
    return vocabulary.encode(tokens)
