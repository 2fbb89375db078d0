"""GSPT binary tensor container.

Byte layout (all integers little-endian):

    magic   4 bytes  "GSPT"
    version u32      1
    count   u32      number of tensors
    per tensor:
        name_len u32
        name     UTF-8 bytes
        rank     u32
        dims     rank x u64
        dtype    u32   (0 = float32 LE, the only tag accepted in v1)
        payload  4 * prod(dims) bytes, float32 LE
"""

import io
import struct

import numpy as np

from .errors import FormatError, InputError
from .tensor import Tensor

MAGIC = b"GSPT"
VERSION = 1
DTYPE_F32 = 0


def save_container(tensors: list[Tensor]) -> bytes:
    names = [t.name for t in tensors]
    if len(set(names)) != len(names):
        raise InputError("save_container: tensor names must be unique")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(tensors)))
    for t in tensors:
        name = t.name.encode("utf-8")
        buf.write(struct.pack("<I", len(name)))
        buf.write(name)
        buf.write(struct.pack("<I", len(t.dims)))
        for d in t.dims:
            buf.write(struct.pack("<Q", d))
        buf.write(struct.pack("<I", DTYPE_F32))
        payload = np.ascontiguousarray(t.data, dtype="<f4")
        buf.write(payload.tobytes())
    return buf.getvalue()


def _read(buf: memoryview, offset: int, size: int) -> tuple[memoryview, int]:
    if offset + size > len(buf):
        raise FormatError(f"truncated container: need {size} bytes", offset=offset)
    return buf[offset : offset + size], offset + size


def load_container(data: bytes) -> list[Tensor]:
    buf = memoryview(data)
    chunk, off = _read(buf, 0, 4)
    if bytes(chunk) != MAGIC:
        raise FormatError(f"bad magic {bytes(chunk)!r}, expected {MAGIC!r}", offset=0)
    chunk, off = _read(buf, off, 8)
    version, count = struct.unpack("<II", chunk)
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}", offset=4)
    tensors: list[Tensor] = []
    seen: set[str] = set()
    for _ in range(count):
        chunk, off = _read(buf, off, 4)
        (name_len,) = struct.unpack("<I", chunk)
        chunk, off = _read(buf, off, name_len)
        name_off = off - name_len
        try:
            name = bytes(chunk).decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError("tensor name is not valid UTF-8", offset=name_off) from e
        if name in seen:
            raise FormatError(f"duplicate tensor name {name!r}", offset=name_off)
        seen.add(name)
        chunk, off = _read(buf, off, 4)
        (rank,) = struct.unpack("<I", chunk)
        chunk, off = _read(buf, off, 8 * rank)
        dims = struct.unpack(f"<{rank}Q", chunk)
        chunk, off = _read(buf, off, 4)
        (dtype_tag,) = struct.unpack("<I", chunk)
        if dtype_tag != DTYPE_F32:
            raise FormatError(f"unknown dtype tag {dtype_tag}", offset=off - 4)
        n = int(np.prod(dims)) if dims else 1
        chunk, off = _read(buf, off, 4 * n)
        arr = np.frombuffer(chunk, dtype="<f4").copy()
        if not np.all(np.isfinite(arr)):
            raise FormatError(f"tensor {name!r} has non-finite values", offset=off - 4 * n)
        tensors.append(Tensor(name=name, dims=tuple(int(d) for d in dims), data=arr))
    return tensors


def save_container_file(tensors: list[Tensor], path) -> None:
    with open(path, "wb") as f:
        f.write(save_container(tensors))


def load_container_file(path) -> list[Tensor]:
    with open(path, "rb") as f:
        return load_container(f.read())
