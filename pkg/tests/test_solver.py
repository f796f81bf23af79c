"""Marching scheme, field splitting, and the fixed-point oracle.

The main oracle here is a deliberately naive dictionary-based replay of
the defining recursion, written once in this file and compared against
the production kernels.  Variance checks for the linear field use the
exact discrete weight sums and, in the critically damped case, the
closed form (1/4)(1 - e^(-cS)(1 + cS))/c^2 with c = a/sqrt(2) and
S = tau + lambda.
"""

import math

import numpy as np
import pytest

from kgqv import _kernels, noise
from kgqv.coords import PhysPoint, RotatedGrid
from kgqv.errors import DomainError, OracleError, UsageError
from kgqv.greens import PhysParams
from kgqv.solver import (
    FieldSample,
    affine,
    clipped_linear,
    coefficient_from_id,
    constant_one,
    march,
    march_linear,
    march_split,
    picard_deltas,
    picard_oracle,
    shifted_sine,
)

SQRT2 = math.sqrt(2.0)


def brute_march(params, F, nf):
    """Replay the recursion pointwise, matching the kernel's grouping."""
    g = nf.grid
    eps = g.eps
    beta = math.exp(-params.a * eps / (2.0 * SQRT2))
    beta2 = beta * beta
    th2 = 0.5 * params.theta
    drh = 0.5 * (0.25 * params.a * params.a - params.m * params.m) * eps * eps
    vals = {}
    for i in range(g.i_min, g.i_max + 1):
        if g.contains_index(i, -i):
            vals[(i, -i)] = 0.0
    seed_coef = th2 * F(0.0)
    for i in range(g.i_min + 1, g.i_max + 1):
        if g.contains_index(i, 1 - i):
            vals[(i, 1 - i)] = seed_coef * nf.increment_over_seed_triangle(i)
    for s in range(2, g.i_max + g.j_max + 1):
        for i in range(max(g.i_min, s - g.j_max), g.i_max + 1):
            j = s - i
            if not g.contains_index(i, j):
                continue
            bot = vals[(i - 1, j - 1)]
            vals[(i, j)] = (
                beta * (vals[(i - 1, j)] + vals[(i, j - 1)])
                - beta2 * bot
                + th2 * F(bot) * nf.increment_over_cell(i - 1, j - 1)
                + drh * bot
            )
    return vals


class TestCoefficients:
    def test_menu_values(self):
        assert constant_one()(1.7) == 1.0
        assert affine(2.0, 3.0)(0.5) == 3.5
        f = shifted_sine()
        assert f(0.0) == 2.0
        assert f(math.pi / 2) == pytest.approx(3.0)
        g = clipped_linear()
        assert g(0.5) == 2.5
        assert g(5.0) == 3.0  # clipped at m0=1, then +2
        assert g(-5.0) == 1.0

    def test_defaults_and_lipschitz(self):
        assert shifted_sine().id == "shifted_sine"
        assert clipped_linear().lipschitz_constant == 1.0
        assert affine(1.0, 2.5).lipschitz_constant == 2.5
        assert constant_one().lipschitz_constant == 0.0

    def test_array_and_scalar_agree(self):
        x = np.array([-2.0, -0.3, 0.0, 0.7, 3.1])
        for f in (constant_one(), affine(0.2, -1.1), shifted_sine(), clipped_linear()):
            arr = f(x)
            assert arr.shape == x.shape
            for k, xv in enumerate(x):
                assert arr[k] == f(float(xv))

    def test_factory_validation(self):
        with pytest.raises(UsageError):
            clipped_linear(m0=0.0)
        with pytest.raises(UsageError):
            coefficient_from_id("quadratic")
        assert coefficient_from_id("shifted_sine").fid == _kernels.FID_SHIFTED_SINE


class TestMarchAgainstReplay:
    def test_affine_bitwise(self):
        params = PhysParams(a=1.5, m=0.4, theta=1.3, diffusion_id="affine")
        F = affine(0.7, 0.9)
        nf = noise.generate(RotatedGrid(8), 21)
        v = march(params, F, nf)
        ref = brute_march(params, F, nf)
        for (i, j), want in ref.items():
            assert v.value(i, j) == want

    def test_shifted_sine_close(self):
        # sin() may come from different libm implementations per path
        params = PhysParams(a=1.0, m=0.5, theta=1.0, diffusion_id="shifted_sine")
        F = shifted_sine()
        nf = noise.generate(RotatedGrid(8), 22)
        v = march(params, F, nf)
        ref = brute_march(params, F, nf)
        for (i, j), want in ref.items():
            assert v.value(i, j) == pytest.approx(want, rel=1e-12, abs=1e-15)

    def test_asymmetric_window(self):
        params = PhysParams(a=0.7, m=0.2, theta=2.0, diffusion_id="clipped_linear")
        F = clipped_linear()
        nf = noise.generate(RotatedGrid(8, i_max=5, j_max=11), 23)
        v = march(params, F, nf)
        ref = brute_march(params, F, nf)
        for (i, j), want in ref.items():
            assert v.value(i, j) == pytest.approx(want, rel=1e-13, abs=1e-16)

    def test_zero_noise_gives_zero_field(self):
        g = RotatedGrid(8)
        rows, cols = g.shape
        zero = noise.NoiseField(
            grid=g,
            master_seed=0,
            cells=np.zeros((rows, cols)),
            tris=np.zeros(rows - 1),
        )
        params = PhysParams(a=1.0, m=0.5, theta=1.0, diffusion_id="shifted_sine")
        v = march(params, shifted_sine(), zero)
        assert np.all(v.values == 0.0)

    def test_layer_one_identity(self):
        params = PhysParams(a=2.0, m=0.3, theta=1.7, diffusion_id="shifted_sine")
        F = shifted_sine()
        nf = noise.generate(RotatedGrid(16), 5)
        v = march(params, F, nf)
        g = nf.grid
        for i in range(g.i_min + 1, g.i_max + 1):
            want = (0.5 * params.theta * F(0.0)) * nf.increment_over_seed_triangle(i)
            assert v.value(i, 1 - i) == want

    def test_theta_linearity_when_constant(self):
        nf = noise.generate(RotatedGrid(16), 9)
        p1 = PhysParams(a=1.0, m=0.5, theta=1.0, diffusion_id="constant_one")
        p2 = PhysParams(a=1.0, m=0.5, theta=2.0, diffusion_id="constant_one")
        F = constant_one()
        v1 = march(p1, F, nf)
        v2 = march(p2, F, nf)
        assert np.array_equal(v2.values, 2.0 * v1.values)

    def test_march_linear_is_constant_one_theta_one(self):
        nf = noise.generate(RotatedGrid(8), 10)
        params = PhysParams(a=1.0, m=0.5, theta=3.0, diffusion_id="shifted_sine")
        V = march_linear(params, nf)
        ref = march(
            PhysParams(a=1.0, m=0.5, theta=1.0, diffusion_id="constant_one"),
            constant_one(),
            nf,
        )
        assert np.array_equal(V.values, ref.values)
        assert V.params.theta == 1.0
        assert V.field_kind == "linear"

    def test_subwindow_matches_full(self):
        params = PhysParams(a=1.0, m=0.5, theta=1.0, diffusion_id="shifted_sine")
        F = shifted_sine()
        full = march(params, F, noise.generate(RotatedGrid(16), 77))
        part = march(params, F, noise.generate(RotatedGrid(16, i_max=6, j_max=9), 77))
        g = part.grid
        for i in range(g.i_min, g.i_max + 1):
            for j in range(g.j_min, g.j_max + 1):
                if g.contains_index(i, j):
                    assert part.value(i, j) == full.value(i, j)

    def test_twin_paths_agree(self):
        params = PhysParams(a=1.0, m=0.5, theta=1.0, diffusion_id="shifted_sine")
        F = shifted_sine()
        nf = noise.generate(RotatedGrid(16), 4)
        v = march(params, F, nf)
        g = nf.grid
        beta = math.exp(-params.a * g.eps / (2.0 * SQRT2))
        drh = 0.5 * params.drift_coef * g.eps * g.eps
        ref = _kernels._march_window_np(
            nf.cells, nf.tris, beta, beta * beta, 0.5, 0.5 * F(0.0),
            F.fid, F.p0, F.p1, drh,
        )
        np.testing.assert_allclose(v.values, ref, rtol=1e-12, atol=1e-18)


class TestFieldSample:
    def test_value_requires_window(self):
        nf = noise.generate(RotatedGrid(8), 1)
        v = march(PhysParams(), constant_one(), nf)
        with pytest.raises(DomainError):
            v.value(9, 0)

    def test_rot_and_phys_functions(self):
        nf = noise.generate(RotatedGrid(8), 1)
        v = march(PhysParams(), constant_one(), nf)
        f = v.rot_function()
        g = nf.grid
        assert f(g.point(3, 2)) == v.value(3, 2)
        fp = v.phys_function()
        q = g.point(4, 1)
        t = (q.tau + q.lam) / SQRT2
        x = (q.lam - q.tau) / SQRT2
        assert fp(PhysPoint(t, x)) == v.value(4, 1)

    def test_to_csv(self, tmp_path):
        nf = noise.generate(RotatedGrid(4), 1)
        v = march(PhysParams(), constant_one(), nf)
        p = tmp_path / "field.csv"
        v.to_csv(p)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "i,j,tau,lambda,value"
        rows = [l.split(",") for l in lines[1:]]
        by_ij = {(int(r[0]), int(r[1])): float(r[4]) for r in rows}
        assert by_ij[(2, 1)] == v.value(2, 1)
        assert len(by_ij) == sum(
            nf.grid.contains_index(i, j)
            for i in range(nf.grid.i_min, nf.grid.i_max + 1)
            for j in range(nf.grid.j_min, nf.grid.j_max + 1)
        )


def linear_variance_closed(a, s):
    if a == 0.0:
        return s * s / 8.0
    c = a / SQRT2
    return 0.25 * (1.0 - math.exp(-c * s) * (1.0 + c * s)) / (c * c)


def linear_variance_discrete(a, eps, big_m):
    # exact second moment of the marched linear field at i+j = big_m,
    # critically damped case (drift term zero)
    beta = math.exp(-a * eps / (2.0 * SQRT2))
    r = np.arange(big_m - 1)
    cells = 0.25 * eps * eps * float(np.sum((r + 1) * beta ** (2.0 * r)))
    tris = big_m * 0.25 * beta ** (2.0 * (big_m - 1)) * eps * eps / 2.0
    return cells + tris


class TestLinearFieldVariance:
    @pytest.mark.parametrize("a", [0.0, 1.0, 2.0])
    def test_discrete_sum_approaches_closed_form(self, a):
        s = 1.0
        prev = None
        for n in (16, 32, 64, 128):
            disc = linear_variance_discrete(a, 1.0 / n, n)
            err = abs(disc - linear_variance_closed(a, s))
            if a == 0.0:
                assert err < 1e-15
            else:
                assert err < 2.0 * a * (1.0 / n)
                if prev is not None:
                    assert err < 0.7 * prev
                prev = err

    @pytest.mark.parametrize("a,m", [(0.0, 0.0), (1.0, 0.5), (2.0, 1.0)])
    def test_mc_variance_matches_discrete(self, a, m):
        n = 16
        reps = 40000
        grid = RotatedGrid(n, i_max=n // 2, j_max=n // 2)
        rows, _ = grid.shape
        seeds = np.uint64(1000) + np.arange(reps, dtype=np.uint64)
        pts_i = np.array([n // 2], dtype=np.int64)
        pts_j = np.array([n // 2], dtype=np.int64)
        out = _kernels.march_points(
            seeds, rows, grid.i_min, grid.eps, a, m, 1.0,
            _kernels.FID_CONSTANT_ONE, 0.0, 0.0, 1.0, pts_i, pts_j,
        )
        var_mc = float(np.mean(out[:, 0] ** 2))
        disc = linear_variance_discrete(a, grid.eps, n)
        assert abs(var_mc - disc) < 4.0 * disc * math.sqrt(2.0 / reps)

    def test_damping_shrinks_variance(self):
        assert linear_variance_closed(2.0, 1.0) < 0.5 * linear_variance_closed(0.0, 1.0)
        # and the simulation agrees pathwise on average
        nf = noise.generate(RotatedGrid(64), 31)
        v0 = march_linear(PhysParams(a=0.0, m=0.0), nf)
        v2 = march_linear(PhysParams(a=2.0, m=1.0), nf)
        assert np.mean(v2.values**2) < np.mean(v0.values**2)

    def test_single_increments_are_hoelder_like(self):
        n = 256
        nf = noise.generate(RotatedGrid(n), 5)
        V = march_linear(PhysParams(a=1.0, m=0.5), nf)
        d1 = np.abs(np.diff(V.values, axis=0))
        bound = 3.0 * math.sqrt((1.0 / n) * math.log(n))
        assert float(d1.max()) < bound


class TestSplit:
    def test_split_reassembles_field(self):
        for a, m, n in ((1.0, 0.5, 16), (2.0, 0.3, 32), (0.0, 1.0, 16)):
            params = PhysParams(a=a, m=m, theta=1.0, diffusion_id="shifted_sine")
            F = shifted_sine()
            nf = noise.generate(RotatedGrid(n), 13)
            v = march(params, F, nf)
            v_l, v_c = march_split(params, F, nf)
            dev = float(np.max(np.abs(v.values - v_l.values - v_c.values)))
            assert dev <= 5.0 / n**2
            assert dev <= 1e-12

    def test_critically_damped_has_no_drift_part(self):
        params = PhysParams(a=1.0, m=0.5, theta=1.0, diffusion_id="shifted_sine")
        assert params.critically_damped
        nf = noise.generate(RotatedGrid(16), 14)
        v_l, v_c = march_split(params, shifted_sine(), nf)
        assert np.all(v_l.values == 0.0)
        v = march(params, shifted_sine(), nf)
        assert np.array_equal(v.values, v_c.values)

    def test_zero_coefficient_kills_everything(self):
        params = PhysParams(a=1.0, m=0.7, theta=1.0, diffusion_id="affine")
        F = affine(0.0, 0.0)
        nf = noise.generate(RotatedGrid(8), 15)
        v = march(params, F, nf)
        v_l, v_c = march_split(params, F, nf)
        assert np.all(v.values == 0.0)
        assert np.all(v_c.values == 0.0)
        assert np.all(v_l.values == 0.0)

    def test_drift_part_second_difference_order(self):
        # smooth component: rectangular double increments scale like eps^2
        params = PhysParams(a=2.0, m=0.3, theta=1.0, diffusion_id="shifted_sine")
        F = shifted_sine()
        means = []
        sizes = (8, 16, 32)
        for n in sizes:
            acc = 0.0
            for seed in range(20):
                nf = noise.generate(RotatedGrid(n), 100 + seed)
                v_l, _ = march_split(params, F, nf)
                i = j = n // 2
                dd = (
                    v_l.value(i + 1, j + 1)
                    - v_l.value(i + 1, j)
                    - v_l.value(i, j + 1)
                    + v_l.value(i, j)
                )
                acc += abs(dd)
            means.append(acc / 20)
        lo = np.log2(np.array(means))
        slope = np.polyfit(np.log2(1.0 / np.array(sizes, dtype=float)), lo, 1)[0]
        assert 1.7 < slope < 2.5


class TestPicardOracle:
    def test_exact_when_kernel_alignment_is_exact(self):
        # at a = m = 0 both kernels are the plain cone indicator
        params = PhysParams(a=0.0, m=0.0, theta=1.0, diffusion_id="shifted_sine")
        F = shifted_sine()
        nf = noise.generate(RotatedGrid(8), 3)
        v = march(params, F, nf)
        u = picard_oracle(params, F, nf)
        assert float(np.max(np.abs(v.values - u.values))) < 1e-12

    def test_oracle_tracks_march_at_order_eps(self):
        params = PhysParams(a=1.0, m=0.5, theta=1.0, diffusion_id="shifted_sine")
        F = shifted_sine()
        sups = []
        for n in (8, 16):
            nf = noise.generate(RotatedGrid(n), 3)
            v = march(params, F, nf)
            u = picard_oracle(params, F, nf)
            sup = float(np.max(np.abs(v.values - u.values)))
            sups.append(sup)
            assert sup < 10.0 / n**2 * n  # O(eps) alignment gap
        assert sups[1] < 0.75 * sups[0]

    def test_deltas_contract_then_vanish(self):
        params = PhysParams(a=1.0, m=0.5, theta=1.0, diffusion_id="shifted_sine")
        F = shifted_sine()
        nf = noise.generate(RotatedGrid(8), 3)
        d = picard_deltas(params, F, nf)
        assert d.shape[0] == 10
        for k in range(3, len(d)):
            assert d[k] <= 0.5 * d[k - 1] or d[k] == 0.0
        assert d[-1] == 0.0

    def test_divergence_raises(self):
        params = PhysParams(a=1.0, m=0.5, theta=1.0, diffusion_id="affine")
        F = affine(1.0, 1e9)
        nf = noise.generate(RotatedGrid(8), 3)
        with pytest.raises(OracleError):
            picard_oracle(params, F, nf)

    def test_size_and_iteration_guards(self):
        params = PhysParams()
        F = shifted_sine()
        with pytest.raises(UsageError):
            picard_oracle(params, F, noise.generate(RotatedGrid(32), 1))
        nf = noise.generate(RotatedGrid(8), 1)
        with pytest.raises(UsageError):
            picard_oracle(params, F, nf, iterations=4)
