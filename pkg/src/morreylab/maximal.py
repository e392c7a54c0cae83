"""Hardy-Littlewood style maximal operators on grid functions.

All operators are evaluated at cell centers over grid-representable cube
sets; ``maximal_exact`` (max of cube averages over every enumerated cube
containing the cell center) is the accepted discrete ground truth.  Cube
averages use the full cube volume with the function extended by zero
outside the box, matching the grid module's conventions.  The supremum over
an empty cube set is 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .geometry import CubeBatch, CubeFamily, DyadicLattice
from .grid import GridFunction, SummedTable
from .norms import NormSpec

__all__ = [
    "MaximalField",
    "maximal_exact",
    "maximal_dyadic",
    "three_lattice_bound",
    "OperatorNormEstimate",
    "operator_norm_estimate",
]


@dataclass(frozen=True)
class MaximalField:
    """Pointwise maximal values (a grid function) plus provenance."""

    field: GridFunction
    provenance: dict

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def _abs_table(f: GridFunction) -> SummedTable:
    return SummedTable(np.abs(f.values), f.h)


def _cube_averages(f: GridFunction, table: SummedTable, batch: CubeBatch) -> np.ndarray:
    corner = np.asarray(f.corner)
    los = (batch.centers - 0.5 * batch.sides[:, None] - corner) / f.h
    his = (batch.centers + 0.5 * batch.sides[:, None] - corner) / f.h
    raw = kernels.batch_box_sums(table.table64, los, his)
    scales = table.cellvol * batch.volumes() ** (-1.0)
    return np.maximum(raw * scales, 0.0)


def _center_cell_ranges(f: GridFunction, batch: CubeBatch):
    """Inclusive index ranges of cells whose centers lie in each closed cube."""
    corner = np.asarray(f.corner)
    lo = (batch.centers - 0.5 * batch.sides[:, None] - corner) / f.h - 0.5
    hi = (batch.centers + 0.5 * batch.sides[:, None] - corner) / f.h - 0.5
    lo_idx = np.ceil(lo).astype(np.int64)
    hi_idx = np.floor(hi).astype(np.int64)
    shape = np.asarray(f.shape, dtype=np.int64)
    lo_idx = np.maximum(lo_idx, 0)
    hi_idx = np.minimum(hi_idx, shape - 1)
    return lo_idx, hi_idx


def maximal_exact(f: GridFunction, cube_set) -> MaximalField:
    """Ground-truth maximal field: per cell, max average over cubes containing it.

    ``cube_set`` is a CubeFamily (enumerated over f's grid) or a CubeBatch.
    Quadratic cost in cubes x cells; intended for small grids and as the
    oracle for the fast variants.
    """
    batch = cube_set.enumerate(f) if isinstance(cube_set, CubeFamily) else cube_set
    if len(batch) == 0:
        raise ValueError("empty cube enumeration")
    table = _abs_table(f)
    avgs = _cube_averages(f, table, batch)
    lo_idx, hi_idx = _center_cell_ranges(f, batch)
    out = np.zeros(f.shape, dtype=np.float64)
    kernels.paint_max(lo_idx, hi_idx, avgs, out)
    prov = {"operator": "maximal_exact", "cubes": int(len(batch))}
    if isinstance(cube_set, CubeFamily):
        prov["family_kind"] = cube_set.kind
    return MaximalField(f.with_values(out), prov)


def _generation_field(
    f: GridFunction,
    table: SummedTable,
    lattice: DyadicLattice,
    g: int,
    restriction: Optional[Callable],
) -> Optional[np.ndarray]:
    """Per-cell average of the generation-g lattice cube containing the cell."""
    centers, sides = lattice.generation_cubes(g)
    if len(centers) == 0:
        return None
    batch = CubeBatch(centers, sides)
    avgs = _cube_averages(f, table, batch)
    if restriction is not None:
        mask = np.asarray(restriction(batch.centers, batch.sides), dtype=bool)
        # masked-out cubes cannot contribute: averages are >= 0
        avgs = np.where(mask, avgs, -1.0)
    ranges = lattice._index_range(g)
    counts = [hi - lo + 1 for lo, hi in ranges]
    grid_avgs = avgs.reshape(counts)
    s = lattice.side(g)
    offs = lattice.offsets(g)
    origin = np.asarray(lattice.origin)
    axis_ids = []
    for ax in range(f.n):
        x = f.axis_centers(ax)
        m = np.floor((x - origin[ax] - offs[ax]) / s).astype(np.int64)
        m = m - ranges[ax][0]
        if np.any(m < 0) or np.any(m >= counts[ax]):  # pragma: no cover - guarded
            raise RuntimeError("lattice does not cover the grid at this generation")
        axis_ids.append(m)
    return grid_avgs[np.ix_(*axis_ids)]


def maximal_dyadic(
    f: GridFunction, lattice: DyadicLattice, restriction: Optional[Callable] = None
) -> MaximalField:
    """Dyadic maximal field by a generation sweep (linear in cells x generations).

    ``restriction`` is an optional cube predicate (e.g. a
    :class:`morreylab.geometry.CubePredicate`); only cubes passing it enter
    the maximum, which computes the family-restricted dyadic operator.
    """
    table = _abs_table(f)
    out = np.zeros(f.shape, dtype=np.float64)
    for g in range(lattice.generations - 1, -1, -1):
        field_g = _generation_field(f, table, lattice, g, restriction)
        if field_g is not None:
            np.maximum(out, field_g, out=out)
    prov = {
        "operator": "maximal_dyadic",
        "lattice_shift": list(lattice.shift),
        "restricted": restriction is not None,
    }
    return MaximalField(f.with_values(out), prov)


def three_lattice_bound(f: GridFunction, lattices) -> MaximalField:
    """Fast upper field ``3^n * sum_j M^(D_j) f`` over the 3^n shifted lattices.

    Dominates :func:`maximal_exact` over grid-aligned cubes at every cell;
    the lattice list must come from ``build_shifted_lattices``.
    """
    n = f.n
    if len(lattices) != 3 ** n:
        raise ValueError(f"expected {3 ** n} lattices, got {len(lattices)}")
    acc = np.zeros(f.shape, dtype=np.float64)
    for lat in lattices:
        acc += maximal_dyadic(f, lat).values
    acc *= float(3 ** n)
    prov = {"operator": "three_lattice_bound", "lattices": len(lattices)}
    return MaximalField(f.with_values(acc), prov)


@dataclass(frozen=True)
class OperatorNormEstimate:
    """Lower bound for an operator norm from a corpus of test functions."""

    value: float
    argmax_name: str
    ratios: dict
    skipped: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax_name": self.argmax_name,
            "ratios": self.ratios,
            "skipped": self.skipped,
        }


def operator_norm_estimate(op, norm_spec: NormSpec, corpus) -> OperatorNormEstimate:
    """Max over the corpus of ``norm(op f) / norm(f)`` (a lower bound).

    ``corpus`` is a sequence of ``(name, GridFunction)`` pairs; members with
    zero norm are skipped (an all-zero corpus is an error).  ``op`` maps a
    grid function to a grid function or MaximalField.
    """
    best = None
    ratios = {}
    skipped = 0
    for name, fn in corpus:
        denom = norm_spec.norm(fn)
        if denom == 0.0:
            skipped += 1
            continue
        image = op(fn)
        if isinstance(image, MaximalField):
            image = image.field
        ratio = norm_spec.norm(image) / denom
        ratios[name] = ratio
        if best is None or ratio > best[0]:
            best = (ratio, name)
    if best is None:
        raise ValueError("corpus contains no function with nonzero norm")
    return OperatorNormEstimate(best[0], best[1], ratios, skipped)
