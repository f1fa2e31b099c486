"""``TAFM`` model checkpoints.

Layout: magic ``TAFM``; u32 length + UTF-8 JSON of the model config; u32
tensor count; per tensor u32 ndim, u32 dims, little-endian float32 data;
CRC32 (u32) of everything before it.
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .model import ModelConfig, ModelParams, xavier_init

MAGIC = b"TAFM"


def _tensor_bytes(params: ModelParams) -> bytes:
    parts = []
    for _, t in params.tensors():
        parts.append(struct.pack("<I", t.ndim))
        parts.append(struct.pack(f"<{t.ndim}I", *t.shape))
        parts.append(np.ascontiguousarray(t, dtype="<f4").tobytes())
    return b"".join(parts)


def params_checksum(params: ModelParams) -> int:
    return zlib.crc32(_tensor_bytes(params))


def dumps(params: ModelParams, config: ModelConfig) -> bytes:
    cfg = config.to_json().encode("utf-8")
    n = len(params.weights) + len(params.stats)
    body = MAGIC + struct.pack("<I", len(cfg)) + cfg + struct.pack("<I", n) + _tensor_bytes(params)
    return body + struct.pack("<I", zlib.crc32(body))


def save(path, params: ModelParams, config: ModelConfig) -> None:
    Path(path).write_bytes(dumps(params, config))


def loads(buf: bytes) -> tuple[ModelParams, ModelConfig]:
    if buf[:4] != MAGIC:
        raise FormatError("not a TAFM checkpoint")
    body, (crc,) = buf[:-4], struct.unpack("<I", buf[-4:])
    if zlib.crc32(body) != crc:
        raise FormatError("checkpoint CRC mismatch")
    (n,) = struct.unpack_from("<I", body, 4)
    config = ModelConfig.from_json(body[8:8 + n].decode("utf-8"))
    pos = 8 + n
    (count,) = struct.unpack_from("<I", body, pos)
    pos += 4
    template = xavier_init(config)
    names = list(template.weights) + list(template.stats)
    if count != len(names):
        raise FormatError(f"checkpoint holds {count} tensors, config implies {len(names)}")
    arrays = []
    for name in names:
        (ndim,) = struct.unpack_from("<I", body, pos)
        shape = struct.unpack_from(f"<{ndim}I", body, pos + 4)
        pos += 4 + 4 * ndim
        size = int(np.prod(shape)) * 4
        arrays.append(np.frombuffer(body, dtype="<f4", count=size // 4, offset=pos).reshape(shape).astype(np.float32))
        pos += size
    if pos != len(body):
        raise FormatError("trailing bytes in checkpoint")
    nw = len(template.weights)
    return ModelParams(dict(zip(names[:nw], arrays[:nw])), dict(zip(names[nw:], arrays[nw:]))), config


def load(path) -> tuple[ModelParams, ModelConfig]:
    return loads(Path(path).read_bytes())
