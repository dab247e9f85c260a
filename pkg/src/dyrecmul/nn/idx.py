"""Reader and writer for the IDX container (MNIST-style images and labels).

Header: two zero bytes, a type code, the number of dimensions, then one
big-endian uint32 per dimension.  Payload follows in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_TYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}
_CODES = {np.dtype(v).newbyteorder("="): k for k, v in _TYPES.items()}


def decode_idx(raw: bytes) -> np.ndarray:
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise ValueError("not an IDX file (bad magic)")
    code, ndim = raw[2], raw[3]
    if code not in _TYPES:
        raise ValueError(f"unknown IDX type code 0x{code:02x}")
    head = 4 + 4 * ndim
    if len(raw) < head:
        raise ValueError("truncated IDX header")
    dims = struct.unpack(f">{ndim}I", raw[4:head])
    dtype = _TYPES[code]
    count = int(np.prod(dims)) if dims else 1
    if len(raw) - head != count * dtype.itemsize:
        raise ValueError(f"IDX payload has {len(raw) - head} bytes, dims {dims} need {count * dtype.itemsize}")
    return np.frombuffer(raw, dtype=dtype, offset=head).reshape(dims).astype(dtype.newbyteorder("="))


def encode_idx(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr)
    key = arr.dtype.newbyteorder("=")
    if key not in _CODES:
        raise ValueError(f"dtype {arr.dtype} has no IDX type code")
    code = _CODES[key]
    head = bytes([0, 0, code, arr.ndim]) + struct.pack(f">{arr.ndim}I", *arr.shape)
    return head + arr.astype(_TYPES[code]).tobytes()


def read_idx(path) -> np.ndarray:
    return decode_idx(Path(path).read_bytes())


def write_idx(path, arr: np.ndarray):
    Path(path).write_bytes(encode_idx(arr))
