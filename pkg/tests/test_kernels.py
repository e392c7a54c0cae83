"""Backend parity: the numba kernels and the numpy fallbacks must produce
bitwise-identical results (same float operations in the same order)."""

import numpy as np
import pytest

from morreylab import GridFunction, SummedTable
from morreylab.kernels import NUMBA_ENABLED, batch_box_sums, paint_max

pytestmark = pytest.mark.skipif(
    not NUMBA_ENABLED, reason="numba disabled; single-backend run"
)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_box_sums_backends_bitwise_equal(n, rng):
    shape = {1: (257,), 2: (65, 65), 3: (17, 17, 17)}[n]
    cells = tuple(s - 1 for s in shape)
    values = rng.uniform(-1.0, 2.0, size=cells)
    table = SummedTable(values, 0.25).table64
    M = 500
    los = rng.uniform(-1.0, max(cells) * 0.9, size=(M, n))
    his = los + rng.uniform(0.0, max(cells) * 0.5, size=(M, n))
    a = batch_box_sums(table, los, his, backend=True)
    b = batch_box_sums(table, los, his, backend=False)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_paint_backends_bitwise_equal(n, rng):
    shape = (24,) * n
    M = 300
    lo = rng.integers(0, 20, size=(M, n))
    hi = lo + rng.integers(0, 6, size=(M, n))
    hi = np.minimum(hi, 23)
    vals = rng.uniform(0, 5, size=M)
    out_a = np.zeros(shape)
    out_b = np.zeros(shape)
    paint_max(lo, hi, vals, out_a, backend=True)
    paint_max(lo, hi, vals, out_b, backend=False)
    assert np.array_equal(out_a, out_b)


def test_box_sums_degenerate_and_outside_boxes(rng):
    values = rng.uniform(0.5, 1.0, size=(16, 16))
    table = SummedTable(values, 1.0 / 16).table64
    los = np.array([[4.0, 4.0], [30.0, 30.0], [-9.0, -9.0], [5.0, 9.0]])
    his = np.array([[4.0, 9.0], [40.0, 35.0], [-2.0, -1.0], [4.0, 8.0]])
    for backend in (True, False):
        out = batch_box_sums(table, los, his, backend=backend)
        assert out[0] == 0.0  # zero-width box
        assert out[1] == 0.0  # fully outside (high side)
        assert out[2] == 0.0  # fully outside (low side)
        assert out[3] == 0.0  # inverted box clamps to empty


def test_norm_pipeline_backend_parity(rng):
    from morreylab import CubeFamily, MorreyParams, morrey_norm

    f = GridFunction([0.0, 0.0], 1.0 / 32, rng.uniform(0, 2, size=(32, 32)))
    w = GridFunction([0.0, 0.0], 1.0 / 32, rng.uniform(0.2, 3, size=(32, 32)))
    fam = CubeFamily.all_cubes()
    a = morrey_norm(f, w, MorreyParams(2.0, 0.5), fam)
    import morreylab._accel as accel

    old = accel.NUMBA_ENABLED
    try:
        accel.NUMBA_ENABLED = False
        b = morrey_norm(f, w, MorreyParams(2.0, 0.5), fam)
    finally:
        accel.NUMBA_ENABLED = old
    assert a.value == b.value
    assert a.argmax_cube == b.argmax_cube
