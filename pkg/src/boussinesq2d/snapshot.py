"""
Binary state snapshots.

Layout, all little-endian::

    b"ABSQ"                      magic
    u32 version                  currently 1
    u32 nx, u32 ny
    f64 Lx, f64 Ly, f64 t
    u32 len + utf-8 bytes        case id ("case7", "custom", ...)
    u32 len + utf-8 bytes        buoyancy law id
    f64[nx*ny] x3                u^x, u^y, theta physical samples, row-major
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from boussinesq2d.errors import FormatError
from boussinesq2d.model import State
from boussinesq2d.spectral import Grid

MAGIC = b"ABSQ"
VERSION = 1
_HEAD = struct.Struct("<4sIII3d")


@dataclass(frozen=True, eq=False)
class Snapshot:
    grid: Grid
    t: float
    case_id: str
    buoyancy: str
    ux: np.ndarray
    uy: np.ndarray
    theta: np.ndarray

    @classmethod
    def from_state(cls, state, case_id, buoyancy):
        ux, uy, th = state.physical()
        return cls(state.grid, float(state.t), str(case_id), str(buoyancy), ux, uy, th)

    def to_state(self):
        """Spectral state, re-projected and dealiased."""
        return State.from_physical(self.grid, self.ux, self.uy, self.theta, self.t)

    def to_bytes(self):
        g = self.grid
        parts = [_HEAD.pack(MAGIC, VERSION, g.nx, g.ny, g.Lx, g.Ly, self.t)]
        for s in (self.case_id, self.buoyancy):
            b = s.encode("utf-8")
            parts += [struct.pack("<I", len(b)), b]
        for a in (self.ux, self.uy, self.theta):
            parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data):
        """Decode a snapshot.

        Raises:
            FormatError: bad magic, unsupported version, or truncated data.
        """
        if len(data) < _HEAD.size:
            raise FormatError("snapshot is truncated")
        magic, version, nx, ny, lx, ly, t = _HEAD.unpack_from(data, 0)
        if magic != MAGIC:
            raise FormatError(f"bad magic bytes {magic!r}; not a snapshot file")
        if version != VERSION:
            raise FormatError(f"unsupported snapshot version {version}; expected {VERSION}")
        pos = _HEAD.size
        strings = []
        for _ in range(2):
            if pos + 4 > len(data):
                raise FormatError("snapshot is truncated")
            (n,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if pos + n > len(data):
                raise FormatError("snapshot is truncated")
            try:
                strings.append(data[pos:pos + n].decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise FormatError(f"snapshot header string is not UTF-8: {exc}") from None
            pos += n
        size = nx * ny * 8
        if len(data) != pos + 3 * size:
            raise FormatError(f"snapshot payload has {len(data) - pos} bytes, expected {3 * size}")
        try:
            grid = Grid(nx, ny, lx, ly)
        except ValueError as exc:
            raise FormatError(f"invalid grid in snapshot header: {exc}") from None
        arrays = [
            np.frombuffer(data, "<f8", nx * ny, pos + i * size).reshape(nx, ny).astype(np.float64)
            for i in range(3)
        ]
        return cls(grid, t, strings[0], strings[1], *arrays)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())
