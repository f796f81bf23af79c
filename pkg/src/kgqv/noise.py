"""Reproducible space-time white noise on the rotated lattice.

A realization holds one Gaussian increment per lattice cell (variance
eps^2, the cell area; the rotation preserves area) and one per layer-1
seed triangle (variance eps^2/2, the triangle area).  Values are a pure
function of (master_seed, index, kind), so regeneration, sub-window
generation, and any evaluation order give bit-identical draws.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .coords import RotatedGrid
from .errors import UsageError

_SQRT2 = math.sqrt(2.0)

_MAGIC = int.from_bytes(b"kgqvwn01", "little")
_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class NoiseField:
    """White-noise increments over cells and layer-1 triangles.

    ``cells[ii, jj]`` is the increment over the cell whose bottom vertex
    is lattice index (i_min + ii, j_min + jj); entries below the initial
    anti-diagonal are zero and never read.  ``tris[k]`` belongs to the
    layer-1 point (i_min + 1 + k, -i_min - k).  Arrays are read-only.
    """

    grid: RotatedGrid
    master_seed: int
    cells: np.ndarray
    tris: np.ndarray

    def increment_over_cell(self, i: int, j: int) -> float:
        if not self.grid.contains_index(i, j):
            raise IndexError(
                f"cell bottom ({i}, {j}) outside the window or below the initial line"
            )
        return float(self.cells[i - self.grid.i_min, j - self.grid.j_min])

    def increment_over_seed_triangle(self, i: int) -> float:
        k = i - (self.grid.i_min + 1)
        if not 0 <= k < self.tris.shape[0]:
            raise IndexError(f"no layer-1 point with first index {i} in the window")
        return float(self.tris[k])


def generate(grid: RotatedGrid, master_seed: int) -> NoiseField:
    """Draw the full noise realization for a window, deterministically."""
    rows, cols = grid.shape
    z = _kernels.lattice_normals(grid.i_min, grid.j_min, (rows, cols), 0, master_seed)
    cells = grid.eps * z
    ii = np.arange(rows)[:, None]
    jj = np.arange(cols)[None, :]
    cells[ii + jj < rows - 1] = 0.0
    tris = (grid.eps / _SQRT2) * _kernels.triangle_normals(
        grid.i_min + 1, rows - 1, master_seed
    )
    cells.setflags(write=False)
    tris.setflags(write=False)
    return NoiseField(grid=grid, master_seed=int(master_seed), cells=cells, tris=tris)


def dump(field: NoiseField, path) -> None:
    """Write a field to a flat binary file (debugging aid).

    Header: magic, format version, n, master_seed as little-endian
    unsigned 64-bit integers; then the cell increments row-major and the
    triangle increments, all little-endian float64.  Only default
    windows (i_max = j_max = n) round-trip, since the header carries n
    alone.
    """
    g = field.grid
    if g.i_max != g.n or g.j_max != g.n:
        raise UsageError("only default-window fields can be dumped")
    with open(path, "wb") as fh:
        fh.write(
            struct.pack(
                "<QQQQ", _MAGIC, _FORMAT_VERSION, g.n, field.master_seed
            )
        )
        fh.write(np.ascontiguousarray(field.cells, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(field.tris, dtype="<f8").tobytes())


def load(path) -> NoiseField:
    with open(path, "rb") as fh:
        head = fh.read(32)
        if len(head) != 32:
            raise UsageError(f"{path}: truncated header")
        magic, version, n, seed = struct.unpack("<QQQQ", head)
        if magic != _MAGIC:
            raise UsageError(f"{path}: not a noise dump")
        if version != _FORMAT_VERSION:
            raise UsageError(f"{path}: unsupported format version {version}")
        grid = RotatedGrid(int(n))
        rows, cols = grid.shape
        body = fh.read()
    want = (rows * cols + rows - 1) * 8
    if len(body) != want:
        raise UsageError(f"{path}: expected {want} payload bytes, got {len(body)}")
    flat = np.frombuffer(body, dtype="<f8")
    cells = flat[: rows * cols].reshape(rows, cols).copy()
    tris = flat[rows * cols :].copy()
    cells.setflags(write=False)
    tris.setflags(write=False)
    return NoiseField(grid=grid, master_seed=int(seed), cells=cells, tris=tris)
