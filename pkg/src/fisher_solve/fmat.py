"""FMAT v1: a minimal binary matrix format for bit-exact interchange.

Layout, all little-endian:

    bytes 0-3   magic ``FMAT``
    byte  4     version, 0x01
    byte  5     scalar kind: 0x00 = float64, 0x01 = complex128 (re/im interleaved)
    bytes 6-13  rows, uint64
    bytes 14-21 cols, uint64
    payload     rows*cols scalars, row-major, IEEE-754 binary64

No compression, no alignment tricks, no dependencies; a round trip preserves
every bit of the payload.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"FMAT"
VERSION = 1
SCALAR_REAL = 0
SCALAR_COMPLEX = 1

_HEADER = struct.Struct("<4sBBQQ")
_MAX_ELEMENTS = 1 << 40  # refuse absurd headers before allocating


class FmatError(ValueError):
    """Malformed or truncated FMAT data."""


def write_matrix(path, a) -> None:
    """Write a 2-D array as FMAT; real arrays become float64, complex become complex128."""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise FmatError(f"FMAT stores 2-D matrices, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise FmatError(f"FMAT needs at least one row and column, got shape {arr.shape}")
    if np.iscomplexobj(arr):
        payload = np.ascontiguousarray(arr, dtype="<c16")
        scalar = SCALAR_COMPLEX
    elif np.issubdtype(arr.dtype, np.number) or arr.dtype == np.bool_:
        payload = np.ascontiguousarray(arr, dtype="<f8")
        scalar = SCALAR_REAL
    else:
        raise FmatError(f"FMAT stores numeric matrices, got dtype {arr.dtype}")
    rows, cols = arr.shape
    header = _HEADER.pack(MAGIC, VERSION, scalar, rows, cols)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def write_vector(path, v) -> None:
    """Write a 1-D array as a single-column FMAT matrix."""
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise FmatError(f"expected a 1-D vector, got shape {arr.shape}")
    write_matrix(path, arr.reshape(-1, 1))


def read_matrix(path) -> np.ndarray:
    """Read an FMAT file into a fresh native-endian 2-D array."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise FmatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, scalar, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FmatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FmatError(f"{path}: unsupported version {version}")
    if scalar == SCALAR_REAL:
        dtype, native = "<f8", np.float64
    elif scalar == SCALAR_COMPLEX:
        dtype, native = "<c16", np.complex128
    else:
        raise FmatError(f"{path}: unknown scalar kind {scalar}")
    count = rows * cols
    if rows < 1 or cols < 1 or count > _MAX_ELEMENTS:
        raise FmatError(f"{path}: implausible dimensions {rows}x{cols}")
    expected = _HEADER.size + count * np.dtype(dtype).itemsize
    if len(blob) != expected:
        raise FmatError(f"{path}: payload is {len(blob) - _HEADER.size} bytes, expected {expected - _HEADER.size}")
    data = np.frombuffer(blob, dtype=dtype, count=count, offset=_HEADER.size)
    return data.astype(native).reshape(rows, cols)


def read_vector(path) -> np.ndarray:
    """Read an FMAT file holding a single row or column and flatten it."""
    arr = read_matrix(path)
    if arr.shape[0] != 1 and arr.shape[1] != 1:
        raise FmatError(f"{path}: expected a vector, got shape {arr.shape}")
    return arr.reshape(-1)
