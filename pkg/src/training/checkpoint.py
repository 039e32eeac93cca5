import os
import shutil
import struct
import numpy as np
from dataclasses import dataclass, field
from typing import Dict, Optional
from loguru import logger
from utils.errors import CheckpointMismatchError, DataError, FormatError
from layers import Module
from training.optimizer import Adam

MAGIC = b"CIFT"
VERSION = 1


@dataclass
class Checkpoint:
    config_hash: str
    step: int
    params: Dict[str, np.ndarray]
    adam_step: int = 0
    adam_m: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: Dict[str, np.ndarray] = field(default_factory=dict)


def _pack_array(out: bytearray, array: np.ndarray):
    out += struct.pack("<B", array.ndim)
    out += struct.pack(f"<{array.ndim}I", *array.shape)
    out += np.ascontiguousarray(array, dtype="<f8").tobytes()


class _Reader:
    def __init__(self, blob: bytes, path: str):
        self.blob = blob
        self.path = path
        self.offset = 0

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.blob):
            raise FormatError(f"{self.path}: truncated checkpoint", self.offset)
        values = struct.unpack_from(fmt, self.blob, self.offset)
        self.offset += size
        return values

    def raw(self, size: int) -> bytes:
        if self.offset + size > len(self.blob):
            raise FormatError(f"{self.path}: truncated checkpoint", self.offset)
        chunk = self.blob[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def array(self) -> np.ndarray:
        (ndim,) = self.unpack("<B")
        shape = self.unpack(f"<{ndim}I")
        count = int(np.prod(shape)) if ndim else 1
        return np.frombuffer(self.raw(8 * count), dtype="<f8").reshape(shape).astype(np.float64)


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    """
    Layout (little-endian): "CIFT", u32 version, 32-byte config hash, u64 step, u32 count,
    then per parameter in name order: u16 name length, name, u8 ndim, u32 dims, float64 values;
    then u64 Adam step followed by the first and second moments in the same order.
    """
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    out += bytes.fromhex(checkpoint.config_hash)
    out += struct.pack("<QI", checkpoint.step, len(checkpoint.params))
    names = sorted(checkpoint.params)
    for name in names:
        encoded = name.encode("utf-8")
        out += struct.pack("<H", len(encoded)) + encoded
        _pack_array(out, checkpoint.params[name])
    out += struct.pack("<Q", checkpoint.adam_step)
    for name in names:
        _pack_array(out, checkpoint.adam_m.get(name, np.zeros_like(checkpoint.params[name])))
        _pack_array(out, checkpoint.adam_v.get(name, np.zeros_like(checkpoint.params[name])))
    return bytes(out)


def decode_checkpoint(blob: bytes, path: str = "<memory>") -> Checkpoint:
    reader = _Reader(blob, path)
    if reader.raw(4) != MAGIC:
        raise FormatError(f"{path}: not a checkpoint (bad magic)", 0)
    (version,) = reader.unpack("<I")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}", 4)
    config_hash = reader.raw(32).hex()
    step, count = reader.unpack("<QI")
    params = {}
    for _ in range(count):
        (length,) = reader.unpack("<H")
        name = reader.raw(length).decode("utf-8")
        params[name] = reader.array()
    (adam_step,) = reader.unpack("<Q")
    adam_m, adam_v = {}, {}
    for name in sorted(params):
        adam_m[name] = reader.array()
        adam_v[name] = reader.array()
    if reader.offset != len(blob):
        raise FormatError(f"{path}: trailing bytes after checkpoint payload", reader.offset)
    return Checkpoint(config_hash, step, params, adam_step, adam_m, adam_v)


def save_checkpoint(path: str, config_hash: str, step: int, model: Module, optimizer: Optional[Adam] = None):
    params = {name: p.values for name, p in model.named_parameters()}
    checkpoint = Checkpoint(
        config_hash, step, params,
        optimizer.step_count if optimizer else 0,
        dict(optimizer.m) if optimizer else {},
        dict(optimizer.v) if optimizer else {},
    )
    write_checkpoint(path, checkpoint)


def write_checkpoint(path: str, checkpoint: Checkpoint):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    temp_file = f"{path}.tmp"
    with open(temp_file, "wb") as f:
        f.write(encode_checkpoint(checkpoint))
    shutil.move(temp_file, path)
    logger.info(f"Saved checkpoint at step {checkpoint.step} to {path}")


def read_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        logger.error(f"Error reading checkpoint {path}: {str(e)}")
        raise DataError(f"Cannot read checkpoint {path}: {e}")
    return decode_checkpoint(blob, path)


def restore(checkpoint: Checkpoint, expected_hash: str, model: Module, optimizer: Optional[Adam] = None):
    """Copy checkpoint values into the model (and optimizer) after checking the config hash."""
    if checkpoint.config_hash != expected_hash:
        raise CheckpointMismatchError(expected_hash, checkpoint.config_hash)
    params = dict(model.named_parameters())
    if set(params) != set(checkpoint.params):
        missing = sorted(set(params) ^ set(checkpoint.params))
        raise DataError(f"Checkpoint parameter set differs from the model: {missing[:5]}")
    for name, param in params.items():
        stored = checkpoint.params[name]
        if stored.shape != param.shape:
            raise DataError(f"Parameter {name} has shape {stored.shape} in checkpoint, {param.shape} in model")
        param.values[...] = stored
    if optimizer is not None:
        optimizer.step_count = checkpoint.adam_step
        for name in params:
            optimizer.m[name] = checkpoint.adam_m[name].copy()
            optimizer.v[name] = checkpoint.adam_v[name].copy()
