"""Binary weight snapshots.

Layout (all integers little-endian uint32, floats little-endian float64):

    "TFW1" | tensor count | per tensor:
        name length | name (utf-8) | ndim | dims... | values row-major
"""

from __future__ import annotations

import struct

import numpy as np

from topicflow.errors import ParseError

MAGIC = b"TFW1"


def write_snapshot(path: str, tensors: dict[str, np.ndarray]) -> None:
    chunks = [MAGIC, struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"tensor {name!r} contains non-finite values")
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def read_snapshot(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ParseError("not a TFW1 snapshot", path=path)
    pos = 4

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise ParseError("truncated snapshot", path=path)
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    (count,) = struct.unpack("<I", take(4))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        n_vals = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(take(8 * n_vals), dtype="<f8").reshape(shape)
        tensors[name] = arr.astype(np.float64)
    if pos != len(data):
        raise ParseError("trailing bytes after last tensor", path=path)
    return tensors
