"""Binary wave-function snapshot records.

File layout (all little-endian), one record per stored state:

    uint32   N          basis halfwidth
    float64  hbar_eff
    uint32   step       map step the state was captured at
    float64  x 2(2N+1)  amplitudes, interleaved re, im for n = -N..N

Records are concatenated back to back; a file may hold any number.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<IdI")


def write_snapshots(path, states: np.ndarray, N: int, hbar_eff: float, step: int):
    """Append records for each row of `states` ((ntraj, 2N+1) complex)."""
    if states.ndim == 1:
        states = states[None, :]
    if states.shape[1] != 2 * N + 1:
        raise ValueError("state length must be 2N + 1")
    with open(path, "ab") as fh:
        for row in states:
            fh.write(_HEADER.pack(N, hbar_eff, step))
            inter = np.empty(2 * row.size)
            inter[0::2] = row.real
            inter[1::2] = row.imag
            fh.write(inter.astype("<f8").tobytes())


def read_snapshots(path):
    """Yield (N, hbar_eff, step, amplitudes) for every record in the file."""
    data = Path(path).read_bytes()
    off = 0
    while off < len(data):
        if off + _HEADER.size > len(data):
            raise ValueError("truncated snapshot header")
        N, hbar_eff, step = _HEADER.unpack_from(data, off)
        off += _HEADER.size
        count = 2 * (2 * N + 1)
        nbytes = 8 * count
        if off + nbytes > len(data):
            raise ValueError("truncated snapshot payload")
        inter = np.frombuffer(data, dtype="<f8", count=count, offset=off)
        off += nbytes
        yield N, hbar_eff, step, (inter[0::2] + 1j * inter[1::2]).copy()
