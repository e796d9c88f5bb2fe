"""Import/export of :class:`~mmcvqkd.montecarlo.QuadratureBatch`.

CSV layout: header ``shot_index,alice_virtual,bob_joint``, one row per shot,
floats written with ``repr`` so a round trip is lossless.

Binary layout (all little-endian)::

    offset  size  field
    0       8     magic  b"MMCVQKDB"
    8       4     format version (uint32, currently 1)
    12      8     N, number of shots (uint64)
    20      4     m, mode count (uint32)
    24      8N    alice_virtual (float64)
    24+8N   8N    bob_joint (float64)
"""

from __future__ import annotations

import io
import struct
from os import PathLike

import numpy as np

from .errors import DomainError
from .montecarlo import QuadratureBatch

__all__ = ["MAGIC", "VERSION", "write_batch_csv", "read_batch_csv", "write_batch_binary", "read_batch_binary"]

MAGIC = b"MMCVQKDB"
VERSION = 1
_HEADER = struct.Struct("<8sIQI")
CSV_HEADER = "shot_index,alice_virtual,bob_joint"


def write_batch_csv(batch: QuadratureBatch, path: str | PathLike[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for k, (a, b) in enumerate(zip(batch.alice_virtual.tolist(), batch.bob_joint.tolist())):
            fh.write(f"{k},{a!r},{b!r}\n")


def read_batch_csv(path: str | PathLike[str], mode_count: int = 1) -> QuadratureBatch:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise DomainError(f"expected header {CSV_HEADER!r}, got {header!r}")
        body = fh.read()
    if not body.strip():
        return QuadratureBatch(np.empty(0), np.empty(0), mode_count)
    data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    if not np.array_equal(data[:, 0], np.arange(data.shape[0])):
        raise DomainError("shot_index column must be 0, 1, 2, ...")
    return QuadratureBatch(data[:, 1].copy(), data[:, 2].copy(), mode_count)


def write_batch_binary(batch: QuadratureBatch, path: str | PathLike[str]) -> None:
    n = len(batch)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, batch.mode_count))
        fh.write(batch.alice_virtual.astype("<f8").tobytes())
        fh.write(batch.bob_joint.astype("<f8").tobytes())


def read_batch_binary(path: str | PathLike[str]) -> QuadratureBatch:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise DomainError("file too short for a batch header")
    magic, version, n, m = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DomainError(f"bad magic {magic!r}")
    if version != VERSION:
        raise DomainError(f"unsupported batch format version {version}")
    expected = _HEADER.size + 16 * n
    if len(raw) != expected:
        raise DomainError(f"expected {expected} bytes for N={n}, got {len(raw)}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return QuadratureBatch(body[:n].astype(np.float64), body[n:].astype(np.float64), int(m))
