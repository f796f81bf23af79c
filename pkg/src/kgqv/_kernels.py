"""Counter-based Gaussian lattice noise and anti-diagonal marching kernels.

Every hot routine exists twice: a numba-compiled cellwise loop and a
pure-numpy version vectorized along anti-diagonal layers.  The active
path is chosen once at import time: numba when importable, unless
KGQV_NUMBA=0 forces numpy.  Both paths consume identical Philox blocks,
so they agree to trig/log library round-off; within one path results
are bit-reproducible regardless of chunking or thread schedule.

Noise convention: the standard normal attached to lattice index (i, j)
and stream `kind` comes from the Philox4x32-10 block with counter
((i + j) + 2^31, (i >> 1) + 2^31, kind, 0) and key (seed_lo, seed_hi);
the block's two Box-Muller outputs are split by the parity of i.  The
value is a pure function of (seed, i, j, kind).  Keying by
(anti-diagonal, i >> 1) lets the marching loops, which consume the
cells of one anti-diagonal in increasing i, use both outputs of almost
every block instead of discarding the second.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("KGQV_NUMBA", "1") != "0"

_SQRT2 = math.sqrt(2.0)

# diffusion coefficient menu, shared with solver.DiffusionCoefficient
FID_CONSTANT_ONE = 0
FID_AFFINE = 1
FID_SHIFTED_SINE = 2
FID_CLIPPED_LINEAR = 3

# Philox4x32-10 multipliers and Weyl key increments.
_PM0 = np.uint64(0xD2511F53)
_PM1 = np.uint64(0xCD9E8D57)
_PW0 = np.uint64(0x9E3779B9)
_PW1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
_SH11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 2.0**-53
_TWO_PI = 2.0 * math.pi
_IOFF = 2147483648  # 2^31 recentres signed lattice indices into u32
_IMASK = 4294967295
_NO_CELL = 1 << 40  # sentinel index: never matches a marched layer


def active_path() -> str:
    return "numba" if USE_NUMBA else "numpy"


def _nb(func):
    if HAS_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def _split_seed(seed):
    s = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.uint64(s & 0xFFFFFFFF), np.uint64(s >> 32)


@_nb
def _philox_block(c0, c1, c2, c3, k0, k1):
    # ten rounds of the 4x32 bijection; args are uint64 holding u32 values
    for _ in range(10):
        p0 = _PM0 * c0
        p1 = _PM1 * c2
        hi0 = p0 >> _SH32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SH32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _PW0) & _MASK32
        k1 = (k1 + _PW1) & _MASK32
    return c0, c1, c2, c3


@_nb
def _philox_pair(sigma, q, kind, k0, k1):
    """Two coupled standard normals for anti-diagonal `sigma`, slot `q`."""
    c0 = np.uint64((sigma + _IOFF) & _IMASK)
    c1 = np.uint64((q + _IOFF) & _IMASK)
    c2 = np.uint64(kind)
    c3 = np.uint64(0)
    r0, r1, r2, r3 = _philox_block(c0, c1, c2, c3, k0, k1)
    hi = (r0 << _SH32) | r1
    lo = (r2 << _SH32) | r3
    u1 = ((hi >> _SH11) + _ONE) * _INV53  # in (0, 1], log-safe
    u2 = (lo >> _SH11) * _INV53
    rad = math.sqrt(-2.0 * math.log(u1))
    ang = _TWO_PI * u2
    return rad * math.cos(ang), rad * math.sin(ang)


@_nb
def _gauss_at(i, j, kind, k0, k1):
    zc, zs = _philox_pair(i + j, i >> 1, kind, k0, k1)
    if (i & 1) == 0:
        return zc
    return zs


@_nb
def _f_eval(fid, p0, p1, x):
    if fid == FID_CONSTANT_ONE:
        return 1.0
    if fid == FID_AFFINE:
        return p0 + p1 * x
    if fid == FID_SHIFTED_SINE:
        return p0 + p1 * math.sin(x)
    # clipped_linear: clip(x, -p0, p0) + p1
    y = x
    if y > p0:
        y = p0
    elif y < -p0:
        y = -p0
    return y + p1


def _f_eval_np(fid, p0, p1, x):
    if fid == FID_CONSTANT_ONE:
        return np.ones_like(x)
    if fid == FID_AFFINE:
        return p0 + p1 * x
    if fid == FID_SHIFTED_SINE:
        return p0 + p1 * np.sin(x)
    return np.clip(x, -p0, p0) + p1


# ---------------------------------------------------------------------------
# noise fills


@_nb
def _fill_normals_nb(out, i0, j0, kind, k0, k1):
    rows, cols = out.shape
    for r in range(rows):
        i = i0 + r
        for c in range(cols):
            out[r, c] = _gauss_at(i, j0 + c, kind, k0, k1)


@_nb
def _fill_tris_nb(out, i0, k0, k1):
    for k in range(out.shape[0]):
        i = i0 + k
        out[k] = _gauss_at(i, 1 - i, 1, k0, k1)


def _philox_rounds_np(c0, c1, c2, c3, k0, k1):
    # array clone of _philox_block; the scalar twin stays numba-friendly
    for _ in range(10):
        p0 = _PM0 * c0
        p1 = _PM1 * c2
        hi0 = p0 >> _SH32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SH32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _PW0) & _MASK32
        k1 = (k1 + _PW1) & _MASK32
    return c0, c1, c2, c3


def _normals_np(i_arr, j_arr, kind, k0, k1):
    """Elementwise twin of _gauss_at over broadcastable int64 index arrays.

    Evaluates the full block per entry and keeps the parity branch, so
    grid fills pay double Philox work; only the marching kernels exploit
    the pairing.
    """
    i64 = np.asarray(i_arr, dtype=np.int64)
    j64 = np.asarray(j_arr, dtype=np.int64)
    c0 = ((i64 + j64 + _IOFF) & _IMASK).astype(np.uint64)
    c1 = (((i64 >> 1) + _IOFF) & _IMASK).astype(np.uint64)
    c2 = np.broadcast_to(np.uint64(kind), c0.shape)
    c3 = np.broadcast_to(np.uint64(0), c0.shape)
    r0, r1, r2, r3 = _philox_rounds_np(c0, c1, c2, c3, k0, k1)
    hi = (r0 << _SH32) | r1
    lo = (r2 << _SH32) | r3
    u1 = ((hi >> _SH11) + _ONE) * _INV53
    u2 = (lo >> _SH11) * _INV53
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = _TWO_PI * u2
    return np.where((i64 & 1) == 0, rad * np.cos(ang), rad * np.sin(ang))


def lattice_normals(i0, j0, shape, kind, seed):
    """Standard normals for lattice indices (i0+r, j0+c), any rectangle."""
    k0, k1 = _split_seed(seed)
    if USE_NUMBA:
        out = np.empty(shape)
        _fill_normals_nb(out, i0, j0, kind, k0, k1)
        return out
    ii = i0 + np.arange(shape[0], dtype=np.int64)[:, None]
    jj = j0 + np.arange(shape[1], dtype=np.int64)[None, :]
    return _normals_np(ii, jj, kind, k0, k1)


def triangle_normals(i0, count, seed):
    """Standard normals for the layer-1 points (i0+k, 1-(i0+k))."""
    k0, k1 = _split_seed(seed)
    if USE_NUMBA:
        out = np.empty(count)
        _fill_tris_nb(out, i0, k0, k1)
        return out
    ii = i0 + np.arange(count, dtype=np.int64)
    return _normals_np(ii, 1 - ii, 1, k0, k1)


# ---------------------------------------------------------------------------
# marching over stored noise arrays (full window out)


@_nb
def _march_window_nb(cells, tris, beta, beta2, th2, seed_coef, fid, p0, p1, drh):
    L = cells.shape[0]
    field = np.zeros((L, L))
    for k in range(L - 1):
        field[1 + k, L - 1 - k] = seed_coef * tris[k]
    for s in range(2, L):
        for k in range(L - s):
            ii = s + k
            jj = L - 1 - k
            bot = field[ii - 1, jj - 1]
            field[ii, jj] = (
                beta * (field[ii - 1, jj] + field[ii, jj - 1])
                - beta2 * bot
                + th2 * _f_eval(fid, p0, p1, bot) * cells[ii - 1, jj - 1]
                + drh * bot
            )
    return field


def _march_window_np(cells, tris, beta, beta2, th2, seed_coef, fid, p0, p1, drh):
    L = cells.shape[0]
    field = np.zeros((L, L))
    ks = np.arange(L - 1)
    field[1 + ks, L - 1 - ks] = seed_coef * tris
    for s in range(2, L):
        k = np.arange(L - s)
        ii = s + k
        jj = L - 1 - k
        bot = field[ii - 1, jj - 1]
        field[ii, jj] = (
            beta * (field[ii - 1, jj] + field[ii, jj - 1])
            - beta2 * bot
            + th2 * _f_eval_np(fid, p0, p1, bot) * cells[ii - 1, jj - 1]
            + drh * bot
        )
    return field


def march_window(cells, tris, eps, a, m, theta, fid, p0, p1, f0):
    """March one field over a stored noise realization; returns L x L.

    `cells` and `tris` hold actual increments (already scaled); entry
    [ii, jj] corresponds to lattice (i_min+ii, j_min+jj), row-major, with
    values below the initial anti-diagonal left at zero.
    """
    beta = math.exp(-a * eps / (2.0 * _SQRT2))
    th2 = 0.5 * theta
    drh = 0.5 * (0.25 * a * a - m * m) * eps * eps
    args = (cells, tris, beta, beta * beta, th2, th2 * f0, fid, p0, p1, drh)
    if USE_NUMBA:
        return _march_window_nb(*args)
    return _march_window_np(*args)


# ---------------------------------------------------------------------------
# batched marching with in-kernel noise (replication workhorses)


@_nb
def _march_points_nb(
    seeds, L, i_min, eps, beta, beta2, th2, fid, p0, p1, drh,
    s1, s2, coupled, pts_i, pts_j, cell_i, cell_j,
):
    R = seeds.shape[0]
    K = pts_i.shape[0]
    out = np.zeros((R, 2 * K + 1))
    cell_s = cell_i + cell_j + 2
    cell_k = -i_min - (cell_j + 1)
    B = np.zeros(L + 1)
    A = np.zeros(L + 1)
    X = np.zeros(L + 1)
    B2 = np.zeros(L + 1)
    A2 = np.zeros(L + 1)
    X2 = np.zeros(L + 1)
    for r in range(R):
        sd = seeds[r]
        k0 = sd & _MASK32
        k1 = sd >> _SH32
        # layer 0 lives in B and must be zero; every later read stays
        # inside the prefix written for its layer, so no other reset
        B[:] = 0.0
        B2[:] = 0.0
        for k in range(L - 1):
            i = i_min + 1 + k
            z = _gauss_at(i, 1 - i, 1, k0, k1)
            A[k] = s1 * z
            if coupled:
                A2[k] = s2 * z
        for t in range(K):
            if pts_i[t] + pts_j[t] == 1:
                kt = -i_min - pts_j[t]
                out[r, t] = A[kt]
                if coupled:
                    out[r, K + t] = A2[kt]
        for s in range(2, L):
            sig = s - 2
            ic0 = i_min + s - 1
            qc = -(1 << 60)
            zc = 0.0
            zs = 0.0
            for k in range(L - s):
                i_c = ic0 + k
                q = i_c >> 1
                if q != qc:
                    zc, zs = _philox_pair(sig, q, 0, k0, k1)
                    qc = q
                if (i_c & 1) == 0:
                    dw = eps * zc
                else:
                    dw = eps * zs
                bot = B[k + 1]
                X[k] = (
                    beta * (A[k] + A[k + 1])
                    - beta2 * bot
                    + th2 * _f_eval(fid, p0, p1, bot) * dw
                    + drh * bot
                )
                if coupled:
                    bot2 = B2[k + 1]
                    X2[k] = (
                        beta * (A2[k] + A2[k + 1])
                        - beta2 * bot2
                        + 0.5 * dw
                        + drh * bot2
                    )
                if s == cell_s and k == cell_k:
                    out[r, 2 * K] = dw
            for t in range(K):
                if pts_i[t] + pts_j[t] == s:
                    kt = -i_min - pts_j[t]
                    out[r, t] = X[kt]
                    if coupled:
                        out[r, K + t] = X2[kt]
            tmp = B
            B = A
            A = X
            X = tmp
            tmp = B2
            B2 = A2
            A2 = X2
            X2 = tmp
    return out


def _diag_normals_np(sig, ic0, count, kind, k0, k1):
    # one anti-diagonal of cells, i_c = ic0..ic0+count-1, keys per rep
    i_c = ic0 + np.arange(count, dtype=np.int64)[None, :]
    return _normals_np(i_c, sig - i_c, kind, k0, k1)


def _march_points_np(
    seeds, L, i_min, eps, beta, beta2, th2, fid, p0, p1, drh,
    s1, s2, coupled, pts_i, pts_j, cell_i, cell_j,
):
    R = seeds.shape[0]
    K = pts_i.shape[0]
    k0 = (seeds & _MASK32)[:, None]
    k1 = (seeds >> _SH32)[:, None]
    out = np.zeros((R, 2 * K + 1))
    cell_s = cell_i + cell_j + 2
    cell_k = -i_min - (cell_j + 1)
    B = np.zeros((R, L + 1))
    A = np.zeros((R, L + 1))
    X = np.zeros((R, L + 1))
    B2 = np.zeros((R, L + 1))
    A2 = np.zeros((R, L + 1))
    X2 = np.zeros((R, L + 1))
    ii = i_min + 1 + np.arange(L - 1, dtype=np.int64)[None, :]
    z1 = _normals_np(ii, 1 - ii, 1, k0, k1)
    A[:, : L - 1] = s1 * z1
    if coupled:
        A2[:, : L - 1] = s2 * z1
    for t in range(K):
        if pts_i[t] + pts_j[t] == 1:
            kt = -i_min - pts_j[t]
            out[:, t] = A[:, kt]
            if coupled:
                out[:, K + t] = A2[:, kt]
    for s in range(2, L):
        c = L - s
        dw = eps * _diag_normals_np(s - 2, i_min + s - 1, c, 0, k0, k1)
        bot = B[:, 1 : c + 1]
        X[:, :c] = (
            beta * (A[:, :c] + A[:, 1 : c + 1])
            - beta2 * bot
            + th2 * _f_eval_np(fid, p0, p1, bot) * dw
            + drh * bot
        )
        if coupled:
            bot2 = B2[:, 1 : c + 1]
            X2[:, :c] = (
                beta * (A2[:, :c] + A2[:, 1 : c + 1])
                - beta2 * bot2
                + 0.5 * dw
                + drh * bot2
            )
        if s == cell_s and 0 <= cell_k < c:
            out[:, 2 * K] = dw[:, cell_k]
        for t in range(K):
            if pts_i[t] + pts_j[t] == s:
                kt = -i_min - pts_j[t]
                out[:, t] = X[:, kt]
                if coupled:
                    out[:, K + t] = X2[:, kt]
        B, A, X = A, X, B
        B2, A2, X2 = A2, X2, B2
    return out


def march_points(
    seeds, L, i_min, eps, a, m, theta, fid, p0, p1, f0,
    pts_i, pts_j, coupled=False, cell_i=_NO_CELL, cell_j=_NO_CELL,
):
    """March one replication per seed, keeping only requested values.

    Returns an (R, 2K+1) array: columns 0..K-1 hold the marched field at
    the K lattice points, columns K..2K-1 the coupled linear field
    (F ident 1, theta 1, same noise) when `coupled`, else zeros, and the
    last column the raw cell increment at (cell_i, cell_j) when given.
    Memory is O(L) per replication; chunk the seeds upstream.
    """
    seeds = np.ascontiguousarray(seeds, dtype=np.uint64)
    pts_i = np.ascontiguousarray(pts_i, dtype=np.int64)
    pts_j = np.ascontiguousarray(pts_j, dtype=np.int64)
    beta = math.exp(-a * eps / (2.0 * _SQRT2))
    th2 = 0.5 * theta
    drh = 0.5 * (0.25 * a * a - m * m) * eps * eps
    tri = eps / _SQRT2
    args = (
        seeds, L, i_min, eps, beta, beta * beta, th2, fid, p0, p1, drh,
        th2 * f0 * tri, 0.5 * tri, coupled, pts_i, pts_j, cell_i, cell_j,
    )
    if USE_NUMBA:
        return _march_points_nb(*args)
    return _march_points_np(*args)


@_nb
def _march_qv_nb(seeds, N, eps, beta, beta2, th2, fid, p0, p1, drh, s1):
    L = 2 * N + 1
    i_min = -N
    R = seeds.shape[0]
    out = np.zeros((R, 2))
    B = np.zeros(L + 1)
    A = np.zeros(L + 1)
    X = np.zeros(L + 1)
    for r in range(R):
        sd = seeds[r]
        k0 = sd & _MASK32
        k1 = sd >> _SH32
        B[:] = 0.0
        for k in range(L - 1):
            i = i_min + 1 + k
            A[k] = s1 * _gauss_at(i, 1 - i, 1, k0, k1)
        qn = 0.0
        sf = 0.0
        for s in range(2, L):
            sig = s - 2
            ic0 = i_min + s - 1
            qc = -(1 << 60)
            zc = 0.0
            zs = 0.0
            for k in range(L - s):
                i_c = ic0 + k
                q = i_c >> 1
                if q != qc:
                    zc, zs = _philox_pair(sig, q, 0, k0, k1)
                    qc = q
                if (i_c & 1) == 0:
                    dw = eps * zc
                else:
                    dw = eps * zs
                bot = B[k + 1]
                X[k] = (
                    beta * (A[k] + A[k + 1])
                    - beta2 * bot
                    + th2 * _f_eval(fid, p0, p1, bot) * dw
                    + drh * bot
                )
                j_c = N - 1 - k
                if 0 <= i_c < N and 0 <= j_c < N:
                    dd = X[k] - A[k] - A[k + 1] + bot
                    qn += dd * dd
                    fb = _f_eval(fid, p0, p1, bot)
                    sf += fb * fb
            tmp = B
            B = A
            A = X
            X = tmp
        out[r, 0] = qn
        out[r, 1] = sf
    return out


def _march_qv_np(seeds, N, eps, beta, beta2, th2, fid, p0, p1, drh, s1):
    L = 2 * N + 1
    i_min = -N
    R = seeds.shape[0]
    k0 = (seeds & _MASK32)[:, None]
    k1 = (seeds >> _SH32)[:, None]
    out = np.zeros((R, 2))
    B = np.zeros((R, L + 1))
    A = np.zeros((R, L + 1))
    X = np.zeros((R, L + 1))
    ii = i_min + 1 + np.arange(L - 1, dtype=np.int64)[None, :]
    A[:, : L - 1] = s1 * _normals_np(ii, 1 - ii, 1, k0, k1)
    qn = np.zeros(R)
    sf = np.zeros(R)
    for s in range(2, L):
        c = L - s
        dw = eps * _diag_normals_np(s - 2, i_min + s - 1, c, 0, k0, k1)
        bot = B[:, 1 : c + 1]
        fb = _f_eval_np(fid, p0, p1, bot)
        X[:, :c] = (
            beta * (A[:, :c] + A[:, 1 : c + 1])
            - beta2 * bot
            + th2 * fb * dw
            + drh * bot
        )
        i_c = (i_min + s - 1) + np.arange(c, dtype=np.int64)
        j_c = N - 1 - np.arange(c, dtype=np.int64)
        mask = (i_c >= 0) & (i_c < N) & (j_c >= 0) & (j_c < N)
        if mask.any():
            dd = X[:, :c] - A[:, :c] - A[:, 1 : c + 1] + bot
            qn += (dd[:, mask] ** 2).sum(axis=1)
            sf += (fb[:, mask] ** 2).sum(axis=1)
        B, A, X = A, X, B
    out[:, 0] = qn
    out[:, 1] = sf
    return out


def march_qv(seeds, N, theta, fid, p0, p1, f0, a, m):
    """Quadratic-variation pass: march on the [0,N]^2 dependency window.

    Returns (R, 2): column 0 the sum of squared raw double increments
    over cells with bottom vertex in [0,N)^2, column 1 the matching sum
    of F^2 at the bottom vertices.
    """
    seeds = np.ascontiguousarray(seeds, dtype=np.uint64)
    eps = 1.0 / N
    beta = math.exp(-a * eps / (2.0 * _SQRT2))
    th2 = 0.5 * theta
    drh = 0.5 * (0.25 * a * a - m * m) * eps * eps
    s1 = th2 * f0 * (eps / _SQRT2)
    args = (seeds, N, eps, beta, beta * beta, th2, fid, p0, p1, drh, s1)
    if USE_NUMBA:
        return _march_qv_nb(*args)
    return _march_qv_np(*args)
