"""Parameter checkpoints: one binary file, name -> (shape, raw data).

Layout (all integers little-endian):
  magic   8 bytes  b"SSUMCKPT"
  version u32      currently 1
  count   u32      number of entries
  entry   name_len u16, name utf-8, dtype u8 (0=float64, 1=float32),
          ndim u8, dims u32 x ndim, raw row-major data
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"SSUMCKPT"
VERSION = 1
_DTYPE_CODES = {np.dtype(np.float64): 0, np.dtype(np.float32): 1}
_CODE_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}


class CheckpointFormatError(ValueError):
    """File is not a readable checkpoint."""


def save_checkpoint(path: str | Path, arrays: Mapping[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(arrays)))
        for name, arr in arrays.items():
            # asarray, not ascontiguousarray: the latter turns 0-d into 1-d
            arr = np.asarray(arr, order="C")
            if arr.dtype not in _DTYPE_CODES:
                raise CheckpointFormatError(f"{name}: unsupported dtype {arr.dtype}")
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic")
    version, count = struct.unpack_from("<II", data, 8)
    if version != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported version {version}")
    out: dict[str, np.ndarray] = {}
    offset = 16
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset:offset + name_len].decode("utf-8")
        offset += name_len
        code, ndim = struct.unpack_from("<BB", data, offset)
        offset += 2
        shape = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        if code not in _CODE_DTYPES:
            raise CheckpointFormatError(f"{path}: unknown dtype code {code} for {name}")
        dtype = _CODE_DTYPES[code]
        n_bytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if ndim else dtype.itemsize
        raw = data[offset:offset + n_bytes]
        if len(raw) != n_bytes:
            raise CheckpointFormatError(f"{path}: truncated data for {name}")
        offset += n_bytes
        out[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    return out
