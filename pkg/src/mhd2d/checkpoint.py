"""Binary checkpoint files.

Layout (all little-endian)::

    b"MHD2"            4-byte magic
    version            uint8 (currently 1)
    nx, ny             uint32 each
    t                  float64
    omega_hat          nx * (ny//2 + 1) complex coefficients as (re, im) float64 pairs
    j_hat              same shape, same encoding

Arrays are written row-major in the solver's stored half-spectrum layout.
Domain lengths are not part of the file; pass them to :func:`read_checkpoint`
when they differ from ``2*pi``.
"""

import math
import struct

import numpy as np

from .solver import MhdState
from .spectral import make_grid

MAGIC = b"MHD2"
VERSION = 1
_HEADER = struct.Struct("<4sBIId")
_DTYPE = np.dtype("<c16")


class CheckpointError(ValueError):
    pass


def encode_checkpoint(state):
    grid = state.grid
    header = _HEADER.pack(MAGIC, VERSION, grid.nx, grid.ny, state.t)
    w = np.ascontiguousarray(state.omega_hat.coeffs, dtype=_DTYPE)
    j = np.ascontiguousarray(state.j_hat.coeffs, dtype=_DTYPE)
    return header + w.tobytes() + j.tobytes()


def decode_checkpoint(data, Lx=2 * math.pi, Ly=2 * math.pi, grid=None):
    if len(data) < _HEADER.size:
        raise CheckpointError("truncated checkpoint header")
    magic, version, nx, ny, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if grid is None:
        grid = make_grid(nx, ny, Lx, Ly)
    elif (grid.nx, grid.ny) != (nx, ny):
        raise CheckpointError(f"checkpoint is {nx}x{ny}, grid is {grid.nx}x{grid.ny}")
    count = nx * (ny // 2 + 1)
    expected = _HEADER.size + 2 * count * _DTYPE.itemsize
    if len(data) != expected:
        raise CheckpointError(f"checkpoint size {len(data)} != expected {expected}")
    body = np.frombuffer(data, dtype=_DTYPE, offset=_HEADER.size)
    shape = grid.spectral_shape
    w = body[:count].reshape(shape).astype(np.complex128)
    j = body[count:].reshape(shape).astype(np.complex128)
    return MhdState.from_coeffs(grid, w, j, t)


def write_checkpoint(path, state):
    with open(path, "wb") as fh:
        fh.write(encode_checkpoint(state))


def read_checkpoint(path, Lx=2 * math.pi, Ly=2 * math.pi, grid=None):
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read(), Lx=Lx, Ly=Ly, grid=grid)
