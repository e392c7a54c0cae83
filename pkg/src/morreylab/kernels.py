"""Hot kernels with numba and pure-numpy implementations.

The two inner loops that dominate runtime are (a) batched box sums against a
summed-area table, evaluated for every cube of an enumerated family, and
(b) the running-max paint of per-cube averages onto the cells they contain.
Each kernel has a numba ``@njit`` loop variant and a vectorized numpy
variant selected by ``morreylab._accel`` (env flag ``MORREYLAB_NO_NUMBA``);
the two variants perform the identical float operations in the identical
order, so their outputs are bitwise equal.

Index convention: box coordinates are fractional cell indices (physical
coordinate minus grid corner, divided by h); tables are raw prefix sums of
cell values, so callers fold the cell volume into their scale factors.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import NUMBA_ENABLED, njit, use_numba

__all__ = ["batch_box_sums", "paint_max", "NUMBA_ENABLED"]


# ---------------------------------------------------------------------------
# numpy paths


def _prefix_at_np(table: np.ndarray, pts: np.ndarray) -> np.ndarray:
    n = table.ndim
    dims = np.asarray(table.shape) - 1
    pts = np.clip(pts, 0.0, dims.astype(np.float64))
    base = np.minimum(np.floor(pts), (dims - 1).astype(np.float64)).astype(np.int64)
    base = np.maximum(base, 0)
    frac = pts - base
    out = np.zeros(len(pts), dtype=np.float64)
    for corner in range(2 ** n):
        idx = []
        wgt = np.ones(len(pts), dtype=np.float64)
        for ax in range(n):
            bit = (corner >> ax) & 1
            idx.append(base[:, ax] + bit)
            wgt = wgt * (frac[:, ax] if bit else (1.0 - frac[:, ax]))
        out += wgt * table[tuple(idx)]
    return out


def _batch_box_sums_np(table: np.ndarray, los: np.ndarray, his: np.ndarray) -> np.ndarray:
    n = table.ndim
    his = np.maximum(his, los)
    acc = np.zeros(len(los), dtype=np.float64)
    for corner in range(2 ** n):
        pts = np.empty_like(los)
        sign = 1.0
        for ax in range(n):
            if (corner >> ax) & 1:
                pts[:, ax] = his[:, ax]
            else:
                pts[:, ax] = los[:, ax]
                sign = -sign
        acc += sign * _prefix_at_np(table, pts)
    return acc


def _paint_max_np(lo_idx: np.ndarray, hi_idx: np.ndarray, vals: np.ndarray, out: np.ndarray):
    n = out.ndim
    for m in range(len(vals)):
        sl = tuple(slice(lo_idx[m, ax], hi_idx[m, ax] + 1) for ax in range(n))
        region = out[sl]
        if region.size:
            np.maximum(region, vals[m], out=region)


# ---------------------------------------------------------------------------
# numba paths (mirrors of the numpy formulas, per dimension)


@njit(cache=True)
def _clip_axis(x, dim):
    if x < 0.0:
        x = 0.0
    elif x > dim:
        x = dim
    i = math.floor(x)
    if i > dim - 1.0:
        i = dim - 1.0
    if i < 0.0:
        i = 0.0
    return int(i), x - i


@njit(cache=True)
def _prefix_1d(table, x0):
    d0 = table.shape[0] - 1
    i0, f0 = _clip_axis(x0, d0)
    return (1.0 - f0) * table[i0] + f0 * table[i0 + 1]


@njit(cache=True)
def _prefix_2d(table, x0, x1):
    d0 = table.shape[0] - 1
    d1 = table.shape[1] - 1
    i0, f0 = _clip_axis(x0, d0)
    i1, f1 = _clip_axis(x1, d1)
    out = (1.0 - f0) * (1.0 - f1) * table[i0, i1]
    out += f0 * (1.0 - f1) * table[i0 + 1, i1]
    out += (1.0 - f0) * f1 * table[i0, i1 + 1]
    out += f0 * f1 * table[i0 + 1, i1 + 1]
    return out


@njit(cache=True)
def _prefix_3d(table, x0, x1, x2):
    d0 = table.shape[0] - 1
    d1 = table.shape[1] - 1
    d2 = table.shape[2] - 1
    i0, f0 = _clip_axis(x0, d0)
    i1, f1 = _clip_axis(x1, d1)
    i2, f2 = _clip_axis(x2, d2)
    out = (1.0 - f0) * (1.0 - f1) * (1.0 - f2) * table[i0, i1, i2]
    out += f0 * (1.0 - f1) * (1.0 - f2) * table[i0 + 1, i1, i2]
    out += (1.0 - f0) * f1 * (1.0 - f2) * table[i0, i1 + 1, i2]
    out += f0 * f1 * (1.0 - f2) * table[i0 + 1, i1 + 1, i2]
    out += (1.0 - f0) * (1.0 - f1) * f2 * table[i0, i1, i2 + 1]
    out += f0 * (1.0 - f1) * f2 * table[i0 + 1, i1, i2 + 1]
    out += (1.0 - f0) * f1 * f2 * table[i0, i1 + 1, i2 + 1]
    out += f0 * f1 * f2 * table[i0 + 1, i1 + 1, i2 + 1]
    return out


@njit(cache=True)
def _box_sums_1d(table, los, his, out):
    for m in range(los.shape[0]):
        lo = los[m, 0]
        hi = his[m, 0]
        if hi < lo:
            hi = lo
        out[m] = _prefix_1d(table, hi) - _prefix_1d(table, lo)


@njit(cache=True)
def _box_sums_2d(table, los, his, out):
    for m in range(los.shape[0]):
        l0 = los[m, 0]
        l1 = los[m, 1]
        h0 = his[m, 0]
        h1 = his[m, 1]
        if h0 < l0:
            h0 = l0
        if h1 < l1:
            h1 = l1
        acc = _prefix_2d(table, l0, l1)
        acc -= _prefix_2d(table, h0, l1)
        acc -= _prefix_2d(table, l0, h1)
        acc += _prefix_2d(table, h0, h1)
        out[m] = acc


@njit(cache=True)
def _box_sums_3d(table, los, his, out):
    for m in range(los.shape[0]):
        l0 = los[m, 0]
        l1 = los[m, 1]
        l2 = los[m, 2]
        h0 = his[m, 0]
        h1 = his[m, 1]
        h2 = his[m, 2]
        if h0 < l0:
            h0 = l0
        if h1 < l1:
            h1 = l1
        if h2 < l2:
            h2 = l2
        acc = -_prefix_3d(table, l0, l1, l2)
        acc += _prefix_3d(table, h0, l1, l2)
        acc += _prefix_3d(table, l0, h1, l2)
        acc -= _prefix_3d(table, h0, h1, l2)
        acc += _prefix_3d(table, l0, l1, h2)
        acc -= _prefix_3d(table, h0, l1, h2)
        acc -= _prefix_3d(table, l0, h1, h2)
        acc += _prefix_3d(table, h0, h1, h2)
        out[m] = acc


@njit(cache=True)
def _paint_max_1d(lo_idx, hi_idx, vals, out):
    for m in range(vals.shape[0]):
        v = vals[m]
        for i in range(lo_idx[m, 0], hi_idx[m, 0] + 1):
            if v > out[i]:
                out[i] = v


@njit(cache=True)
def _paint_max_2d(lo_idx, hi_idx, vals, out):
    for m in range(vals.shape[0]):
        v = vals[m]
        for i in range(lo_idx[m, 0], hi_idx[m, 0] + 1):
            for j in range(lo_idx[m, 1], hi_idx[m, 1] + 1):
                if v > out[i, j]:
                    out[i, j] = v


@njit(cache=True)
def _paint_max_3d(lo_idx, hi_idx, vals, out):
    for m in range(vals.shape[0]):
        v = vals[m]
        for i in range(lo_idx[m, 0], hi_idx[m, 0] + 1):
            for j in range(lo_idx[m, 1], hi_idx[m, 1] + 1):
                for k in range(lo_idx[m, 2], hi_idx[m, 2] + 1):
                    if v > out[i, j, k]:
                        out[i, j, k] = v


_BOX_SUMS_NB = {1: _box_sums_1d, 2: _box_sums_2d, 3: _box_sums_3d}
_PAINT_NB = {1: _paint_max_1d, 2: _paint_max_2d, 3: _paint_max_3d}


# ---------------------------------------------------------------------------
# dispatch


def batch_box_sums(table: np.ndarray, los, his, backend=None) -> np.ndarray:
    """Raw prefix sums over fractional index boxes [lo, hi], clipped to the grid.

    ``table`` is a float64 summed-area table of raw cell values (shape
    ``grid_shape + 1``); returns one sum per box.  Multiply by the cell
    volume to get integrals of the step function.
    """
    los = np.ascontiguousarray(np.atleast_2d(los), dtype=np.float64)
    his = np.ascontiguousarray(np.atleast_2d(his), dtype=np.float64)
    n = table.ndim
    if use_numba(backend) and n in _BOX_SUMS_NB:
        out = np.empty(len(los), dtype=np.float64)
        _BOX_SUMS_NB[n](table, los, his, out)
        return out
    return _batch_box_sums_np(table, los, his)


def paint_max(lo_idx, hi_idx, vals, out: np.ndarray, backend=None) -> np.ndarray:
    """Running max of ``vals[m]`` over the inclusive index boxes, in place.

    Index ranges must already be clipped to the output shape; boxes with an
    empty range on any axis paint nothing.
    """
    lo_idx = np.ascontiguousarray(np.atleast_2d(lo_idx), dtype=np.int64)
    hi_idx = np.ascontiguousarray(np.atleast_2d(hi_idx), dtype=np.int64)
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    n = out.ndim
    if use_numba(backend) and n in _PAINT_NB:
        _PAINT_NB[n](lo_idx, hi_idx, vals, out)
        return out
    _paint_max_np(lo_idx, hi_idx, vals, out)
    return out
