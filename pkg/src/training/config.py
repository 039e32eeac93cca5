import hashlib
import json
import os
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Dict, Optional
from dotenv import dotenv_values
from loguru import logger
from utils.errors import ConfigError
from speaker.pipeline import StreamFusion, TemporalPooling
from backbone.model import InjectionSite

# fields that never change a computed value
NON_COMPUTATIONAL = ("data_dir", "out_dir", "max_steps", "checkpoint_every")


@dataclass(frozen=True)
class Config:
    # ablation axes
    negation_enabled: bool = True
    n_streams: int = 2
    n_heads: int = 2
    depth: int = 1
    stream_fusion: StreamFusion = StreamFusion.ATTENTION
    temporal_pooling: TemporalPooling = TemporalPooling.ATTENTION
    injection_site: InjectionSite = InjectionSite.BOTH

    # architecture
    hidden: int = 128
    ffn_dim: int = 512
    encoder_layers: int = 4
    decoder_layers: int = 4
    fusion_layers: int = 1
    fft_heads: int = 2
    fft_filter: int = 256
    fft_kernel: int = 9
    dropout: float = 0.1
    variance_dropout: float = 0.5
    encoder_channels: int = 32
    content_bank_channels: int = 32
    content_bank_kernels: int = 8
    content_channels: int = 128

    # optimizer and schedule
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9
    lr_scale: float = 0.5
    warmup_steps: int = 400
    grad_clip: float = 1.0
    batch_size: int = 4
    ref_max_samples: int = 12800
    seed: int = 1234

    # synthetic corpus
    n_speakers: int = 4
    n_utterances: int = 8
    n_heldout_speakers: int = 2
    min_phonemes: int = 4
    max_phonemes: int = 10

    # run bookkeeping
    max_steps: int = 2000
    checkpoint_every: int = 500
    data_dir: str = "data"
    out_dir: str = "runs/desk"

    def __post_init__(self):
        for name in ("n_streams", "n_heads", "depth", "hidden", "ffn_dim", "encoder_layers", "decoder_layers",
                     "fft_heads", "fft_filter", "fft_kernel", "encoder_channels", "content_bank_channels",
                     "content_bank_kernels", "content_channels", "warmup_steps", "batch_size",
                     "ref_max_samples", "min_phonemes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("fusion_layers", "max_steps", "checkpoint_every", "n_heldout_speakers", "seed"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.hidden % self.n_heads or self.hidden % self.fft_heads:
            raise ConfigError(f"hidden width {self.hidden} must be divisible by the head counts")
        if not 0.0 <= self.dropout < 1.0 or not 0.0 <= self.variance_dropout < 1.0:
            raise ConfigError("dropout rates must lie in [0, 1)")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0) or self.eps <= 0 or self.lr_scale <= 0:
            raise ConfigError("invalid optimizer settings")
        if self.grad_clip < 0:
            raise ConfigError(f"grad_clip must be >= 0, got {self.grad_clip}")
        if self.n_speakers < 2 or self.n_utterances < 2:
            raise ConfigError("the synthetic corpus needs at least 2 speakers with 2 utterances each")
        if self.max_phonemes < self.min_phonemes:
            raise ConfigError("max_phonemes must be >= min_phonemes")
        if self.ref_max_samples < 320:
            raise ConfigError("ref_max_samples must cover at least one encoder frame (320 samples)")

    def to_dict(self) -> Dict[str, object]:
        return {k: (v.value if isinstance(v, Enum) else v) for k, v in asdict(self).items()}

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON of every field that affects computation."""
        payload = {k: v for k, v in self.to_dict().items() if k not in NON_COMPUTATIONAL}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()

    def with_overrides(self, **overrides) -> "Config":
        return replace(self, **coerce_values(overrides))

    @classmethod
    def load(cls, path: Optional[str] = None, **overrides) -> "Config":
        """Read a key=value file (``#`` comments allowed) and apply CLI overrides on top."""
        values: Dict[str, object] = {}
        if path is not None:
            if not os.path.exists(path):
                raise ConfigError(f"Config file not found: {path}")
            values.update(dotenv_values(path))
            logger.info(f"Loaded config from {path}")
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**coerce_values(values))


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw}")


def coerce_values(values: Dict[str, object]) -> Dict[str, object]:
    """Coerce raw strings onto the Config field types, rejecting unknown keys."""
    types = {f.name: f.default for f in fields(Config)}
    coerced = {}
    for key, raw in values.items():
        if key not in types:
            raise ConfigError(f"Unknown config key: {key}")
        default = types[key]
        try:
            if raw is None:
                raise ValueError("missing value")
            if not isinstance(raw, str):
                value = type(default)(raw) if not isinstance(default, bool) else bool(raw)
            elif isinstance(default, bool):
                value = _parse_bool(raw)
            else:
                value = type(default)(raw.strip())
        except ValueError as e:
            raise ConfigError(f"Invalid value for {key}: {raw!r} ({e})")
        coerced[key] = value
    return coerced
