"""QSF1 binary container for fields and initial data.

Layout: 4 magic bytes "QSF1"; little-endian u32 nx, u32 nt, f64 xlen,
f64 tlen, u8 domain tag (0 physical, 1 spectral), 7 zero pad bytes; then
nx*nt complex values as little-endian f64 (re, im) pairs, row-major with
space/frequency as the slow index.  Initial data uses nt = 1.
"""

import struct

import numpy as np

from .spacetime import PHYSICAL, SPECTRAL, Field, InitialData, PhaseGrid

MAGIC = b"QSF1"
_HEADER = struct.Struct("<4sII dd B 7x")

_TAG = {PHYSICAL: 0, SPECTRAL: 1}
_UNTAG = {0: PHYSICAL, 1: SPECTRAL}


def write_qsf(path, obj):
    """Write a Field or InitialData; initial data is stored with nt = 1."""
    if isinstance(obj, InitialData):
        nt, tag, vals = 1, 0, obj.values[:, None]
    elif isinstance(obj, Field):
        nt, tag, vals = obj.grid.nt, _TAG[obj.domain], obj.values
    else:
        raise TypeError("write_qsf expects a Field or InitialData")
    grid = obj.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, grid.nx, nt, grid.xlen, grid.tlen, tag))
        flat = np.ascontiguousarray(vals, dtype=np.complex128)
        fh.write(flat.astype("<c16").tobytes())


def read_qsf(path):
    """Read a QSF1 file; returns InitialData when nt == 1, else a Field."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ValueError("truncated QSF1 header")
        magic, nx, nt, xlen, tlen, tag = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if tag not in _UNTAG:
            raise ValueError(f"unknown domain tag {tag}")
        raw = fh.read()
    expected = nx * nt * 16
    if len(raw) != expected:
        raise ValueError(f"payload is {len(raw)} bytes, expected {expected}")
    vals = np.frombuffer(raw, dtype="<c16").reshape(nx, nt).astype(np.complex128)
    if nt == 1:
        # nt is not meaningful for initial data; rebuild with the default
        # time resolution so the data can be evolved right away.
        grid = PhaseGrid(nx=nx, nt=1024, xlen=xlen, tlen=tlen)
        return InitialData(grid, vals[:, 0])
    grid = PhaseGrid(nx=nx, nt=nt, xlen=xlen, tlen=tlen)
    return Field(grid, _UNTAG[tag], vals)
