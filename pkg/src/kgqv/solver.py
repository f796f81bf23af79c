"""Characteristic-grid marching and a brute-force fixed-point oracle.

The damped stochastic wave equation in rotated coordinates is solved on
anti-diagonal layers: layer 0 carries the zero initial data, layer 1 is
seeded directly from the mild equation over the boundary triangles, and
every later value follows the cell recurrence

    v(i+1,j+1) = b v(i+1,j) + b v(i,j+1) - b^2 v(i,j)
                 + (theta/2) F(v(i,j)) dW(i,j) + (1/2) b(v(i,j)) eps^2

with b = exp(-a eps / (2 sqrt 2)), the exact kernel decay across one
rotated step.  The same weights make the drift component v_L a closed
cone quadrature: the recurrence telescopes to the kernel-weighted sum
sum_cells (1/2) e^{-a (t_P - t_top)/2} b(v(bottom)) eps^2 with the
kernel frozen at each cell's top vertex, so marching it costs O(n^2)
instead of the literal O(n^4) sum.

The Picard oracle iterates the discretized mild equation instead, with
the kernel held at cell centers, a deliberately different alignment, so
scheme/oracle agreement is an O(eps) external check rather than a
shared-code tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from . import _kernels
from .coords import RotPoint, RotatedGrid, to_rotated
from .errors import OracleError, UsageError
from .greens import PhysParams
from .noise import NoiseField

_SQRT2 = math.sqrt(2.0)

FIELD_KINDS = ("nonlinear", "linear", "drift_part", "critical_part")


@dataclass(frozen=True)
class DiffusionCoefficient:
    """One entry of the multiplicative-coefficient menu.

    All menu members are globally Lipschitz; `lipschitz_constant` is the
    analytic constant, checked empirically in the tests.
    """

    id: str
    p0: float
    p1: float
    lipschitz_constant: float
    fid: int

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return _kernels._f_eval_np(self.fid, self.p0, self.p1, x)
        return float(_kernels._f_eval(self.fid, self.p0, self.p1, float(x)))


def constant_one() -> DiffusionCoefficient:
    return DiffusionCoefficient("constant_one", 0.0, 0.0, 0.0, _kernels.FID_CONSTANT_ONE)


def affine(alpha: float = 1.0, beta: float = 1.0) -> DiffusionCoefficient:
    """F(u) = alpha + beta u."""
    return DiffusionCoefficient("affine", alpha, beta, abs(beta), _kernels.FID_AFFINE)


def shifted_sine(c0: float = 2.0, c1: float = 1.0) -> DiffusionCoefficient:
    """F(u) = c0 + c1 sin(u); bounded away from 0 when c0 > |c1|."""
    return DiffusionCoefficient("shifted_sine", c0, c1, abs(c1), _kernels.FID_SHIFTED_SINE)


def clipped_linear(m0: float = 1.0, c2: float = 2.0) -> DiffusionCoefficient:
    """F(u) = clip(u, -m0, m0) + c2."""
    if m0 <= 0:
        raise UsageError(f"clip bound must be positive, got {m0}")
    return DiffusionCoefficient("clipped_linear", m0, c2, 1.0, _kernels.FID_CLIPPED_LINEAR)


_FACTORIES = {
    "constant_one": constant_one,
    "affine": affine,
    "shifted_sine": shifted_sine,
    "clipped_linear": clipped_linear,
}


def coefficient_from_id(name: str) -> DiffusionCoefficient:
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise UsageError(
            f"unknown diffusion id {name!r}, expected one of {sorted(_FACTORIES)}"
        ) from None


@dataclass(frozen=True, eq=False)
class FieldSample:
    """Lattice samples of one field on a window, zeros off-window."""

    grid: RotatedGrid
    values: np.ndarray
    params: PhysParams
    field_kind: str

    def value(self, i: int, j: int) -> float:
        self.grid.require_index(i, j)
        return float(self.values[i - self.grid.i_min, j - self.grid.j_min])

    def rot_function(self):
        """Callable on grid-aligned RotPoints (for stencil helpers)."""

        def f(q: RotPoint) -> float:
            i, j = self.grid.index_of(q)
            return self.value(i, j)

        return f

    def phys_function(self):
        rot = self.rot_function()

        def f(p) -> float:
            return rot(to_rotated(p))

        return f

    def to_csv(self, path) -> None:
        g = self.grid
        with open(path, "w", newline="") as fh:
            fh.write("i,j,tau,lambda,value\n")
            for i in range(g.i_min, g.i_max + 1):
                for j in range(max(g.j_min, -i), g.j_max + 1):
                    fh.write(
                        "%d,%d,%.17g,%.17g,%.17g\n"
                        % (i, j, i * g.eps, j * g.eps, self.value(i, j))
                    )


def _check_noise(noise: NoiseField) -> None:
    rows, cols = noise.grid.shape
    if noise.cells.shape != (rows, cols) or noise.tris.shape != (rows - 1,):
        raise UsageError("noise arrays do not match their grid window")


def march(params: PhysParams, F: DiffusionCoefficient, noise: NoiseField) -> FieldSample:
    """March the full nonlinear field over one noise realization."""
    _check_noise(noise)
    g = noise.grid
    vals = _kernels.march_window(
        noise.cells, noise.tris, g.eps, params.a, params.m, params.theta,
        F.fid, F.p0, F.p1, F(0.0),
    )
    vals.setflags(write=False)
    return FieldSample(g, vals, params, "nonlinear")


def march_linear(params: PhysParams, noise: NoiseField) -> FieldSample:
    """March with F ident 1 and theta = 1 on the same noise (coupled)."""
    _check_noise(noise)
    g = noise.grid
    lin = PhysParams(a=params.a, m=params.m, theta=1.0, diffusion_id="constant_one")
    vals = _kernels.march_window(
        noise.cells, noise.tris, g.eps, lin.a, lin.m, 1.0,
        _kernels.FID_CONSTANT_ONE, 0.0, 0.0, 1.0,
    )
    vals.setflags(write=False)
    return FieldSample(g, vals, lin, "linear")


def march_split(params: PhysParams, F: DiffusionCoefficient, noise: NoiseField):
    """Split the marched field into drift and stochastic components.

    v_C carries the noise term, replaying F along the full field's
    bottom values; v_L carries the drift quadrature.  By linearity of
    the homogeneous recurrence, v_L + v_C reproduces v to round-off.
    Returns (v_L, v_C).
    """
    v = march(params, F, noise)
    g = noise.grid
    L = g.shape[0]
    eps = g.eps
    beta = math.exp(-params.a * eps / (2.0 * _SQRT2))
    beta2 = beta * beta
    th2 = 0.5 * params.theta
    bcoef = params.drift_coef
    vv = v.values
    v_c = np.zeros_like(vv)
    v_l = np.zeros_like(vv)
    ks = np.arange(L - 1)
    v_c[1 + ks, L - 1 - ks] = th2 * F(0.0) * noise.tris
    for s in range(2, L):
        k = np.arange(L - s)
        ii = s + k
        jj = L - 1 - k
        bot = vv[ii - 1, jj - 1]
        v_c[ii, jj] = (
            beta * (v_c[ii - 1, jj] + v_c[ii, jj - 1])
            - beta2 * v_c[ii - 1, jj - 1]
            + th2 * F(bot) * noise.cells[ii - 1, jj - 1]
        )
        v_l[ii, jj] = (
            beta * (v_l[ii - 1, jj] + v_l[ii, jj - 1])
            - beta2 * v_l[ii - 1, jj - 1]
            + 0.5 * (bcoef * bot) * eps * eps
        )
    v_l.setflags(write=False)
    v_c.setflags(write=False)
    return (
        FieldSample(g, v_l, params, "drift_part"),
        FieldSample(g, v_c, params, "critical_part"),
    )


def _picard_iterate(params, F, noise, iterations):
    g = noise.grid
    L = g.shape[0]
    eps = g.eps
    beta = math.exp(-params.a * eps / (2.0 * _SQRT2))
    bcoef = params.drift_coef
    di = np.arange(L + 1, dtype=float)[:, None]
    dj = np.arange(L + 1, dtype=float)[None, :]
    # mild-equation kernel, held at cell centers: time offset (di+dj-1) steps
    w_cell = 0.5 * beta ** (di + dj - 1.0) * ((di >= 1) & (dj >= 1))
    # triangles are represented by their lattice point: offset (di+dj) steps
    w_tri = 0.5 * beta ** (di + dj)
    tri_src = np.zeros((L, L))
    ks = np.arange(L - 1)
    tri_src[1 + ks, L - 1 - ks] = params.theta * F(0.0) * noise.tris
    tri_part = signal.convolve2d(tri_src, w_tri)[:L, :L]
    u = np.zeros((L, L))
    deltas = []
    for _ in range(iterations):
        src = (bcoef * u) * eps * eps + params.theta * F(u) * noise.cells
        u_next = signal.convolve2d(src, w_cell)[:L, :L] + tri_part
        deltas.append(float(np.max(np.abs(u_next - u))))
        if len(deltas) >= 2:
            floor = 1e-10 * (1.0 + float(np.max(np.abs(u_next))))
            if deltas[-1] > 4.0 * deltas[-2] and deltas[-1] > floor:
                raise OracleError(
                    f"fixed-point iteration diverging: successive sup-differences "
                    f"{deltas[-2]:.3g} -> {deltas[-1]:.3g}"
                )
        u = u_next
    return u, np.asarray(deltas)


def picard_oracle(
    params: PhysParams, F: DiffusionCoefficient, noise: NoiseField, iterations=None
) -> FieldSample:
    """Fixed-point iteration of the discretized mild equation.

    O(n^4) per sweep via full-window convolution; restricted to tiny
    grids.  With K at least n+2 sweeps the iteration is an exact fixed
    point: sweep k is already exact on layers up to 2k because each
    sweep only reads strictly earlier layers.
    """
    _check_noise(noise)
    if noise.grid.n > 16:
        raise UsageError(f"oracle restricted to n <= 16, got n={noise.grid.n}")
    if iterations is None:
        iterations = max(8, noise.grid.n + 2)
    if iterations < 8:
        raise UsageError(f"need at least 8 iterations, got {iterations}")
    u, _ = _picard_iterate(params, F, noise, iterations)
    u.setflags(write=False)
    return FieldSample(noise.grid, u, params, "nonlinear")


def picard_deltas(
    params: PhysParams, F: DiffusionCoefficient, noise: NoiseField, iterations=None
) -> np.ndarray:
    """Successive sup-norm differences of the oracle sweeps (diagnostics)."""
    _check_noise(noise)
    if noise.grid.n > 16:
        raise UsageError(f"oracle restricted to n <= 16, got n={noise.grid.n}")
    if iterations is None:
        iterations = max(8, noise.grid.n + 2)
    _, deltas = _picard_iterate(params, F, noise, iterations)
    return deltas
