"""Shared test oracles: independent naive implementations used to freeze
expected values.  These deliberately avoid the package's summed-table path."""

import numpy as np
import pytest

from morreylab import Cube, GridFunction


def naive_cube_integral(f: GridFunction, cube: Cube) -> float:
    """Cell-by-cell overlap summation of the step function over the cube."""
    lo, hi = cube.lo(), cube.hi()
    overlaps = []
    for ax in range(f.n):
        edges = f.corner[ax] + np.arange(f.shape[ax] + 1) * f.h
        ov = np.minimum(hi[ax], edges[1:]) - np.maximum(lo[ax], edges[:-1])
        overlaps.append(np.maximum(ov, 0.0))
    weight = overlaps[0]
    for ov in overlaps[1:]:
        weight = np.multiply.outer(weight, ov)
    return float(np.sum(weight * f.values))


def naive_weighted_p_mass(f, w, p, cube) -> float:
    g = f.with_values(np.abs(f.values) ** p * w.values)
    return naive_cube_integral(g, cube)


def naive_morrey_terms(f, w, p, lam, batch) -> np.ndarray:
    """Per-cube Morrey terms by naive integration (no prefix tables)."""
    out = np.empty(len(batch))
    for i in range(len(batch)):
        q = batch.cube(i)
        out[i] = naive_weighted_p_mass(f, w, p, q) / q.volume ** lam
    return out


def random_grid(rng, n, cells, corner=0.0, extent=1.0, low=0.05, high=2.0):
    """Seeded positive random grid function on [corner, corner+extent]^n."""
    shape = (cells,) * n
    h = extent / cells
    values = rng.uniform(low, high, size=shape)
    return GridFunction([corner] * n, h, values)


def random_cube(rng, n, corner=0.0, extent=1.0, min_side_frac=0.02):
    """Seeded random cube overlapping the box (may stick outside)."""
    side = rng.uniform(min_side_frac * extent, 1.2 * extent)
    center = rng.uniform(corner - 0.1 * extent, corner + 1.1 * extent, size=n)
    return Cube(tuple(center), float(side))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
