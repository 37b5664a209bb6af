"""Versioned binary checkpoints for ParamSet contents.

Layout (all integers little-endian):
  magic "IVQA-CKPT" | u32 format version | u32 kind length | kind bytes |
  u32 record count | records sorted by name.
Record: u32 name length | name bytes | u8 trainable | u32 ndim |
  u64 per dim | raw float64 little-endian values.
Save then load restores every value bit-exactly.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import FormatError
from .params import ParamSet

MAGIC = b"IVQA-CKPT"
FORMAT_VERSION = 1


def save_checkpoint(path, params: ParamSet, kind: str) -> None:
    chunks = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    kind_b = kind.encode("utf-8")
    chunks.append(struct.pack("<I", len(kind_b)))
    chunks.append(kind_b)
    names = sorted(params.names())
    chunks.append(struct.pack("<I", len(names)))
    for name in names:
        p = params[name]
        name_b = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name_b)))
        chunks.append(name_b)
        chunks.append(struct.pack("<B", 1 if p.requires_grad else 0))
        chunks.append(struct.pack("<I", p.data.ndim))
        for d in p.data.shape:
            chunks.append(struct.pack("<Q", d))
        chunks.append(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise FormatError("truncated checkpoint")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]


def load_checkpoint(path) -> tuple[ParamSet, str]:
    """Read a checkpoint; returns (params, kind)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    r = _Reader(blob)
    if r.take(len(MAGIC)) != MAGIC:
        raise FormatError(f"{path}: bad magic, not an IVQA-CKPT file")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    kind = r.take(r.u32()).decode("utf-8")
    params = ParamSet()
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode("utf-8")
        trainable = bool(r.u8())
        ndim = r.u32()
        shape = tuple(r.u64() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(shape)
        params.add(name, data.astype(np.float64), trainable=trainable)
    if r.pos != len(blob):
        raise FormatError(f"{path}: trailing bytes after last record")
    return params, kind
