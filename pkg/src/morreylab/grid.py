"""Piecewise-constant functions on uniform grids with exact cube integration.

A :class:`GridFunction` is the step function equal to ``values[i]`` on cell
``i``; every integral of such a function over an axis-aligned box is exactly
computable.  Integrals are served by a :class:`SummedTable` (prefix sums
accumulated in extended precision): the prefix integral of a step function
is multilinear inside each cell, so an integral over any box, grid-aligned
or not, is an inclusion-exclusion of multilinear interpolations of the
table corners.

Cubes extending beyond the grid box integrate the function extended by
zero, while averages and norms keep the full cube volume.
"""

from __future__ import annotations

import struct

import numpy as np

from .geometry import Cube

__all__ = [
    "GridFunction",
    "SummedTable",
    "cube_integral",
    "cube_average",
    "weighted_p_mass",
    "sample_power_weight",
    "require_weight",
    "require_same_grid",
    "save_grid_binary",
    "load_grid_binary",
    "save_grid_csv",
    "load_grid_csv",
]

_MAGIC = b"MLGRID1\n"


class GridFunction:
    """Cellwise-constant sample field on a uniform grid over a bounded box."""

    def __init__(self, corner, h: float, values):
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self.corner = tuple(
            float(c) for c in np.atleast_1d(np.asarray(corner, dtype=np.float64))
        )
        self.h = float(h)
        if self.h <= 0:
            raise ValueError("resolution h must be positive")
        if self.values.ndim != len(self.corner):
            raise ValueError("corner dimension does not match values rank")

    # -- geometry -------------------------------------------------------

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.shape, dtype=np.float64) * self.h

    def box_cube(self) -> Cube:
        """The grid box as a cube (only valid for equal extents)."""
        ext = self.extent
        if not np.all(ext == ext[0]):
            raise ValueError("grid box is not a cube")
        c = np.asarray(self.corner) + 0.5 * ext
        return Cube(tuple(c), float(ext[0]))

    def axis_centers(self, i: int) -> np.ndarray:
        return self.corner[i] + (np.arange(self.shape[i]) + 0.5) * self.h

    def centers_mesh(self) -> list:
        return np.meshgrid(*[self.axis_centers(i) for i in range(self.n)], indexing="ij")

    # -- constructors -----------------------------------------------------

    @staticmethod
    def constant(value: float, corner, shape, h: float) -> "GridFunction":
        return GridFunction(corner, h, np.full(tuple(shape), float(value)))

    @staticmethod
    def from_callable(fn, corner, shape, h: float) -> "GridFunction":
        """Sample ``fn`` at cell centers; ``fn`` maps coordinate arrays to values."""
        g = GridFunction(corner, h, np.zeros(tuple(shape)))
        mesh = g.centers_mesh()
        g.values[...] = fn(*mesh)
        return g

    # -- derived functions -------------------------------------------------

    def refine(self, levels: int = 1) -> "GridFunction":
        """Same step function represented on a 2^levels finer grid (exact)."""
        vals = self.values
        for _ in range(levels):
            for ax in range(self.n):
                vals = np.repeat(vals, 2, axis=ax)
        return GridFunction(self.corner, self.h / 2.0 ** levels, vals)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.corner, self.h, values)

    def masked(self, cube: Cube) -> "GridFunction":
        """Zero the function outside a grid-aligned cube (cellwise mask)."""
        mask = np.ones(self.shape, dtype=bool)
        lo = cube.lo()
        hi = cube.hi()
        for ax in range(self.n):
            centers = self.axis_centers(ax)
            keep = (centers >= lo[ax]) & (centers <= hi[ax])
            sl = [None] * self.n
            sl[ax] = slice(None)
            mask &= keep[tuple(sl)]
        return self.with_values(np.where(mask, self.values, 0.0))


def require_same_grid(f: GridFunction, g: GridFunction, what: str = "grid"):
    if f.shape != g.shape or f.corner != g.corner or f.h != g.h:
        raise ValueError(f"{what} mismatch between grid functions")


def require_weight(w: GridFunction):
    if np.any(w.values < 0):
        raise ValueError("weight must be nonnegative")
    if not np.any(w.values > 0):
        raise ValueError("weight must not be identically zero")


# ---------------------------------------------------------------------------
# summed-area table


class SummedTable:
    """Prefix sums of cell values with extended-precision accumulation.

    ``table[i1, ..., in]`` is the sum of raw cell values over the index box
    ``[0, i1) x ... x [0, in)``; accumulation runs in ``np.longdouble`` (the
    compensated-accumulation role), and a float64 cast is kept for the numba
    kernels.  Queries return the integral of the step function over an index
    box, i.e. raw prefix sums times ``h**n``.
    """

    def __init__(self, values: np.ndarray, h: float):
        values = np.asarray(values)
        self.h = float(h)
        self.n = values.ndim
        self.shape = values.shape
        acc = values.astype(np.longdouble)
        for ax in range(self.n):
            acc = np.cumsum(acc, axis=ax)
        table = np.zeros(tuple(s + 1 for s in values.shape), dtype=np.longdouble)
        table[(slice(1, None),) * self.n] = acc
        self.table_ld = table
        self.table64 = np.ascontiguousarray(table.astype(np.float64))
        self.cellvol_ld = np.longdouble(self.h) ** self.n
        self.cellvol = float(self.cellvol_ld)

    @staticmethod
    def of(f: GridFunction) -> "SummedTable":
        return SummedTable(f.values, f.h)

    def _prefix_at(self, pts: np.ndarray, table: np.ndarray) -> np.ndarray:
        """Multilinear prefix integral at fractional index points (M, n)."""
        dims = np.asarray(self.shape)
        pts = np.clip(pts, 0.0, dims.astype(pts.dtype))
        base = np.minimum(np.floor(pts), (dims - 1).astype(pts.dtype)).astype(np.int64)
        base = np.maximum(base, 0)
        frac = pts - base
        out = np.zeros(len(pts), dtype=table.dtype)
        for corner in range(2 ** self.n):
            idx = []
            wgt = np.ones(len(pts), dtype=table.dtype)
            for ax in range(self.n):
                bit = (corner >> ax) & 1
                idx.append(base[:, ax] + bit)
                wgt = wgt * (frac[:, ax] if bit else (1.0 - frac[:, ax]))
            out += wgt * table[tuple(idx)]
        return out

    def box_sums(self, los: np.ndarray, his: np.ndarray, exact: bool = True) -> np.ndarray:
        """Integrals of the step function over index boxes [lo, hi], (M,).

        Boxes are clipped to the grid (the function is zero outside).  With
        ``exact=True`` evaluation runs on the extended-precision table.
        """
        table = self.table_ld if exact else self.table64
        dtype = table.dtype
        los = np.atleast_2d(np.asarray(los)).astype(dtype)
        his = np.atleast_2d(np.asarray(his)).astype(dtype)
        his = np.maximum(his, los)  # empty boxes integrate to zero
        acc = np.zeros(len(los), dtype=dtype)
        # inclusion-exclusion over box corners: sign = (-1)^(number of lo axes)
        for corner in range(2 ** self.n):
            pts = np.empty_like(los)
            sign = 1
            for ax in range(self.n):
                if (corner >> ax) & 1:
                    pts[:, ax] = his[:, ax]
                else:
                    pts[:, ax] = los[:, ax]
                    sign = -sign
            acc += sign * self._prefix_at(pts, table)
        vol = self.cellvol_ld if exact else self.cellvol
        out = acc * vol
        return out.astype(np.float64)

    def box_sum(self, lo, hi, exact: bool = True) -> float:
        return float(self.box_sums(np.asarray([lo]), np.asarray([hi]), exact=exact)[0])


def _cube_index_box(f: GridFunction, Q: Cube):
    lo = (Q.lo() - np.asarray(f.corner)) / f.h
    hi = (Q.hi() - np.asarray(f.corner)) / f.h
    return lo, hi


def cube_integral(f: GridFunction, Q: Cube, table: SummedTable = None) -> float:
    """Exact integral of the step function ``f`` over ``Q`` (zero outside box)."""
    if Q.n != f.n:
        raise ValueError("cube dimension does not match grid")
    t = table if table is not None else SummedTable.of(f)
    lo, hi = _cube_index_box(f, Q)
    return t.box_sum(lo, hi)


def cube_average(f: GridFunction, Q: Cube, table: SummedTable = None) -> float:
    """Cube average with the full cube volume (not the clipped volume)."""
    return cube_integral(f, Q, table) / Q.volume


def weighted_p_mass(f: GridFunction, w: GridFunction, p: float, Q: Cube) -> float:
    """``\\int_Q |f|^p w`` on the cellwise product, exact for step functions."""
    if p < 1:
        raise ValueError("requires p >= 1")
    require_same_grid(f, w, "grid")
    require_weight(w)
    integrand = np.abs(f.values) ** p * w.values
    return cube_integral(f.with_values(integrand), Q)


def sample_power_weight(a: float, center, corner, shape, h: float) -> GridFunction:
    """Radial power weight ``|x - center|^a`` sampled at cell centers.

    The grid offset must keep every cell center away from the singularity;
    a cell center hitting it exactly is an error.
    """

    center = np.atleast_1d(np.asarray(center, dtype=np.float64))

    def fn(*mesh):
        r2 = np.zeros_like(mesh[0])
        for ax, m in enumerate(mesh):
            r2 = r2 + (m - center[ax]) ** 2
        if np.any(r2 == 0.0) and a < 0:
            raise ValueError("singularity on a cell center; offset the grid")
        if np.any(r2 == 0.0) and a == 0:
            return np.ones_like(r2)
        return r2 ** (0.5 * a)

    w = GridFunction.from_callable(fn, corner, shape, h)
    if not np.all(np.isfinite(w.values)) or np.any(w.values <= 0):
        raise ValueError("singularity on a cell center; offset the grid")
    return w


# ---------------------------------------------------------------------------
# import/export


def save_grid_binary(f: GridFunction, path):
    """Flat binary layout: magic, n, shape, corner, h, row-major values."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<q", f.n))
        fh.write(np.asarray(f.shape, dtype="<i8").tobytes())
        fh.write(np.asarray(f.corner, dtype="<f8").tobytes())
        fh.write(struct.pack("<d", f.h))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_grid_binary(path) -> GridFunction:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError("not a morreylab grid file")
        (n,) = struct.unpack("<q", fh.read(8))
        shape = np.frombuffer(fh.read(8 * n), dtype="<i8")
        corner = np.frombuffer(fh.read(8 * n), dtype="<f8")
        (h,) = struct.unpack("<d", fh.read(8))
        count = int(np.prod(shape))
        values = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(tuple(shape))
    return GridFunction(corner, h, values.copy())


def save_grid_csv(f: GridFunction, path):
    """CSV layout: commented header (n, shape, corner, h), one value per line."""
    with open(path, "w") as fh:
        fh.write("# morreylab grid csv 1\n")
        fh.write("# n," + str(f.n) + "\n")
        fh.write("# shape," + ",".join(str(s) for s in f.shape) + "\n")
        fh.write("# corner," + ",".join(repr(c) for c in f.corner) + "\n")
        fh.write("# h," + repr(f.h) + "\n")
        for v in f.values.ravel():
            fh.write(repr(float(v)) + "\n")


def load_grid_csv(path) -> GridFunction:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# morreylab grid csv"):
        raise ValueError("not a morreylab grid csv file")
    meta = {}
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("# ") and "," in line:
            key, _, rest = line[2:].partition(",")
            meta[key] = rest
        elif not line.startswith("#"):
            body_start = i
            break
    shape = tuple(int(s) for s in meta["shape"].split(","))
    corner = tuple(float(c) for c in meta["corner"].split(","))
    h = float(meta["h"])
    values = np.asarray(
        [float(v) for v in lines[body_start:] if v.strip()], dtype=np.float64
    ).reshape(shape)
    return GridFunction(corner, h, values)
