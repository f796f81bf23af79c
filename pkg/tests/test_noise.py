"""Noise field generation, accessors, scaling, and the binary container."""

import math

import numpy as np
import pytest

from kgqv import noise
from kgqv.coords import RotatedGrid
from kgqv.errors import UsageError


@pytest.fixture
def small():
    grid = RotatedGrid(8)
    return noise.generate(grid, 12345)


class TestGenerate:
    def test_shapes_and_flags(self, small):
        L = 2 * 8 + 1
        assert small.cells.shape == (L, L)
        assert small.tris.shape == (L - 1,)
        assert not small.cells.flags.writeable
        assert not small.tris.flags.writeable

    def test_below_initial_line_is_zero(self, small):
        L = small.cells.shape[0]
        for ii in range(L):
            for jj in range(L):
                if ii + jj < L - 1:
                    assert small.cells[ii, jj] == 0.0

    def test_deterministic(self, small):
        again = noise.generate(small.grid, small.master_seed)
        assert np.array_equal(again.cells, small.cells)
        assert np.array_equal(again.tris, small.tris)

    def test_seed_changes_values(self, small):
        other = noise.generate(small.grid, 54321)
        assert not np.array_equal(other.cells, small.cells)

    def test_window_coherence(self):
        # same n, smaller window: shared lattice sites agree bitwise
        full = noise.generate(RotatedGrid(8), 7)
        g = RotatedGrid(8, i_max=3, j_max=5)
        part = noise.generate(g, 7)
        for i in range(g.i_min, 4):
            for j in range(g.j_min, 6):
                if not g.contains_index(i, j):
                    continue
                if full.grid.contains_index(i, j):
                    assert part.increment_over_cell(i, j) == full.increment_over_cell(i, j)


class TestAccessors:
    def test_cell_indexing(self, small):
        g = small.grid
        assert small.increment_over_cell(0, 0) == small.cells[-g.i_min, -g.j_min]
        assert small.increment_over_cell(g.i_max, g.j_max) == small.cells[-1, -1]

    def test_cell_out_of_window(self, small):
        with pytest.raises(IndexError):
            small.increment_over_cell(9, 0)
        with pytest.raises(IndexError):
            small.increment_over_cell(-5, -5)

    def test_triangle_indexing(self, small):
        g = small.grid
        # triangle k sits at lattice point (i_min+1+k, -(i_min+k))
        assert small.increment_over_seed_triangle(g.i_min + 1) == small.tris[0]
        assert small.increment_over_seed_triangle(g.i_max) == small.tris[-1]

    def test_triangle_out_of_range(self, small):
        with pytest.raises(IndexError):
            small.increment_over_seed_triangle(small.grid.i_min)
        with pytest.raises(IndexError):
            small.increment_over_seed_triangle(small.grid.i_max + 1)


class TestScaling:
    def test_cell_variance(self):
        n = 64
        f = noise.generate(RotatedGrid(n), 99)
        eps = 1.0 / n
        L = 2 * n + 1
        vals = [
            f.cells[ii, jj]
            for ii in range(L)
            for jj in range(L)
            if ii + jj >= L - 1
        ]
        z = np.array(vals) / eps
        k = z.size
        assert abs(z.mean()) < 4.0 / math.sqrt(k)
        assert abs(z.var() - 1.0) < 4.0 * math.sqrt(2.0 / k)

    def test_triangle_variance(self):
        # pool triangles across seeds; each grid only has 2n of them
        n = 32
        g = RotatedGrid(n)
        z = np.concatenate(
            [noise.generate(g, s).tris for s in range(40)]
        ) / (1.0 / n / math.sqrt(2.0))
        k = z.size
        assert abs(z.mean()) < 4.0 / math.sqrt(k)
        assert abs(z.var() - 1.0) < 4.0 * math.sqrt(2.0 / k)

    def test_neighbour_independence(self):
        f = noise.generate(RotatedGrid(128), 3)
        c = f.cells
        L = c.shape[0]
        mask = np.add.outer(np.arange(L), np.arange(L)) >= L - 1
        pairs_h = mask[:, 1:] & mask[:, :-1]
        x = c[:, 1:][pairs_h]
        y = c[:, :-1][pairs_h]
        k = x.size
        corr = np.corrcoef(x, y)[0, 1]
        assert abs(corr) < 4.0 / math.sqrt(k)
        pairs_v = mask[1:, :] & mask[:-1, :]
        corr_v = np.corrcoef(c[1:, :][pairs_v], c[:-1, :][pairs_v])[0, 1]
        assert abs(corr_v) < 4.0 / math.sqrt(k)


class TestContainer:
    def test_roundtrip(self, tmp_path, small):
        p = tmp_path / "field.kgn"
        noise.dump(small, p)
        back = noise.load(p)
        assert back.master_seed == small.master_seed
        assert back.grid.n == small.grid.n
        assert np.array_equal(back.cells, small.cells)
        assert np.array_equal(back.tris, small.tris)
        assert not back.cells.flags.writeable

    def test_dump_rejects_non_default_window(self, tmp_path):
        f = noise.generate(RotatedGrid(8, i_max=3, j_max=8), 1)
        with pytest.raises(UsageError):
            noise.dump(f, tmp_path / "x.kgn")

    def test_load_rejects_bad_magic(self, tmp_path, small):
        p = tmp_path / "field.kgn"
        noise.dump(small, p)
        raw = bytearray(p.read_bytes())
        raw[0] ^= 0xFF
        p.write_bytes(bytes(raw))
        with pytest.raises(UsageError):
            noise.load(p)

    def test_load_rejects_truncation(self, tmp_path, small):
        p = tmp_path / "field.kgn"
        noise.dump(small, p)
        raw = p.read_bytes()
        p.write_bytes(raw[:-8])
        with pytest.raises(UsageError):
            noise.load(p)

    def test_load_rejects_trailing_junk(self, tmp_path, small):
        p = tmp_path / "field.kgn"
        noise.dump(small, p)
        p.write_bytes(p.read_bytes() + b"\x00" * 8)
        with pytest.raises(UsageError):
            noise.load(p)
