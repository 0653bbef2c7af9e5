import struct

import numpy as np
import pytest

from qslab.qsf import MAGIC, read_qsf, write_qsf
from qslab.spacetime import Field, InitialData, PhaseGrid


def test_field_round_trip(tmp_path):
    grid = PhaseGrid(nx=32, nt=16, xlen=4 * np.pi, tlen=8.0)
    rng = np.random.default_rng(0)
    vals = rng.standard_normal((32, 16)) + 1j * rng.standard_normal((32, 16))
    for domain in ("physical", "spectral"):
        path = tmp_path / f"{domain}.qsf"
        write_qsf(path, Field(grid, domain, vals))
        back = read_qsf(path)
        assert back.domain == domain
        assert back.grid.nx == 32 and back.grid.nt == 16
        assert back.grid.xlen == pytest.approx(grid.xlen)
        assert np.array_equal(back.values, vals)


def test_initial_data_round_trip(tmp_path):
    grid = PhaseGrid(nx=64, nt=64, xlen=8 * np.pi, tlen=8.0)
    vals = np.exp(-grid.x**2 / 2).astype(complex)
    path = tmp_path / "phi.qsf"
    write_qsf(path, InitialData(grid, vals))
    back = read_qsf(path)
    assert isinstance(back, InitialData)
    assert np.array_equal(back.values, vals)
    assert back.grid.nx == 64


def test_exact_byte_layout(tmp_path):
    grid = PhaseGrid(nx=8, nt=8, xlen=1.0, tlen=8.0)
    vals = np.zeros(8, dtype=complex)
    vals[0] = 1.0 + 2.0j
    path = tmp_path / "tiny.qsf"
    write_qsf(path, InitialData(grid, vals))
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    nx, nt = struct.unpack_from("<II", raw, 4)
    assert (nx, nt) == (8, 1)
    xlen, tlen = struct.unpack_from("<dd", raw, 12)
    assert (xlen, tlen) == (1.0, 8.0)
    assert raw[28] == 0  # physical tag
    assert raw[29:36] == b"\x00" * 7
    re, im = struct.unpack_from("<dd", raw, 36)
    assert (re, im) == (1.0, 2.0)
    assert len(raw) == 36 + 8 * 16


def test_reader_rejects_garbage(tmp_path):
    path = tmp_path / "bad.qsf"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError, match="magic"):
        read_qsf(path)
    path.write_bytes(b"QS")
    with pytest.raises(ValueError, match="truncated"):
        read_qsf(path)
    grid = PhaseGrid(nx=8, nt=8, xlen=1.0, tlen=8.0)
    good = tmp_path / "good.qsf"
    write_qsf(good, InitialData(grid, np.zeros(8, dtype=complex)))
    raw = bytearray(good.read_bytes())
    short = tmp_path / "short.qsf"
    short.write_bytes(bytes(raw[:-8]))
    with pytest.raises(ValueError, match="payload"):
        read_qsf(short)
