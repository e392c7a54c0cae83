"""Morrey/Lebesgue norms: worked examples, brute-force oracles, inequalities."""

import math

import numpy as np
import pytest

from morreylab import (
    Cube,
    CubeFamily,
    GridFunction,
    MorreyParams,
    PointSet,
    Truncation,
    indicator_norm,
    lp_norm,
    morrey_norm,
    restricted_norm,
)

from conftest import naive_morrey_terms, random_grid


def unit_ones(n, cells):
    return GridFunction.constant(1.0, [0.0] * n, [cells] * n, 1.0 / cells)


@pytest.mark.parametrize("n", [1, 2])
def test_constant_function_norm_is_one(n):
    f = unit_ones(n, 16)
    res = morrey_norm(f, f, MorreyParams(2.0, 0.5), CubeFamily.all_cubes())
    assert res.value == pytest.approx(1.0, rel=1e-13)
    assert res.argmax_cube == Cube((0.5,) * n, 1.0)


def test_homogeneity(rng):
    f = random_grid(rng, 1, 64, low=-1, high=1)
    w = random_grid(rng, 1, 64)
    params = MorreyParams(1.5, 0.3)
    fam = CubeFamily.all_cubes()
    base = morrey_norm(f, w, params, fam).value
    scaled = morrey_norm(f.with_values(-2.5 * f.values), w, params, fam).value
    assert scaled == pytest.approx(2.5 * base, rel=1e-12)


def test_brute_force_indicator_example():
    # f = chi_[0,1] on the box [0,2], p=1, lam=1/2: maximizer is Q=[0,1]
    cells = 64
    vals = np.zeros(cells)
    vals[: cells // 2] = 1.0
    f = GridFunction([0.0], 2.0 / cells, vals)
    w = GridFunction.constant(1.0, [0.0], [cells], 2.0 / cells)
    params = MorreyParams(1.0, 0.5)
    fam = CubeFamily.all_cubes()
    batch = fam.enumerate(f)
    oracle = naive_morrey_terms(f, w, 1.0, 0.5, batch)
    res = morrey_norm(f, w, params, fam)
    assert res.value == pytest.approx(float(oracle.max()), rel=1e-12)
    assert res.value == pytest.approx(1.0, rel=1e-12)
    assert res.argmax_cube == Cube((0.5,), 1.0)


@pytest.mark.parametrize("n", [1, 2])
def test_norm_matches_naive_oracle(n, rng):
    f = random_grid(rng, n, 12, low=-1, high=2)
    w = random_grid(rng, n, 12)
    params = MorreyParams(2.0, 0.5)
    fam = CubeFamily.all_cubes()
    batch = fam.enumerate(f)
    oracle = naive_morrey_terms(f, w, params.p, params.lam, batch)
    res = morrey_norm(f, w, params, fam)
    assert res.value == pytest.approx(float(oracle.max()) ** 0.5, rel=1e-12)


def test_family_monotonicity(rng):
    f = random_grid(rng, 1, 32, low=0, high=2)
    w = random_grid(rng, 1, 32)
    params = MorreyParams(2.0, 0.5)
    small = CubeFamily.all_cubes(Truncation(max_side=0.25))
    big = CubeFamily.all_cubes()
    assert morrey_norm(f, w, params, small).value <= morrey_norm(f, w, params, big).value


def test_triangle_inequality(rng):
    params = MorreyParams(2.0, 0.5)
    fam = CubeFamily.all_cubes()
    for _ in range(8):
        f = random_grid(rng, 1, 32, low=-1, high=1)
        g = random_grid(rng, 1, 32, low=-1, high=1)
        w = random_grid(rng, 1, 32)
        lhs = morrey_norm(f.with_values(f.values + g.values), w, params, fam).value
        rhs = morrey_norm(f, w, params, fam).value + morrey_norm(g, w, params, fam).value
        assert lhs <= rhs * (1 + 1e-12)


def test_empty_truncation_errors():
    f = unit_ones(1, 8)
    fam = CubeFamily.all_cubes(Truncation(min_side=10.0))
    with pytest.raises(ValueError, match="no cubes"):
        morrey_norm(f, f, MorreyParams(2.0, 0.5), fam)


def test_lp_norm_box_volume():
    f = GridFunction.constant(1.0, [0.0, 0.0], [8, 16], 0.125)
    w = GridFunction.constant(1.0, [0.0, 0.0], [8, 16], 0.125)
    vol = 1.0 * 2.0
    assert lp_norm(f, w, 3.0) == pytest.approx(vol ** (1 / 3), rel=1e-13)


def test_lp_norm_half_indicator():
    vals = np.zeros(64)
    vals[:32] = 2.0
    f = GridFunction([0.0], 1.0 / 64, vals)
    w = GridFunction.constant(1.0, [0.0], [64], 1.0 / 64)
    assert lp_norm(f, w, 2.0) == pytest.approx(math.sqrt(2.0), rel=1e-13)


def test_lp_norm_matches_fsum_oracle(rng):
    f = random_grid(rng, 2, 32, low=-2, high=2)
    w = random_grid(rng, 2, 32)
    p = 1.8
    want = math.fsum(
        (abs(v) ** p * u) * f.h ** 2 for v, u in zip(f.values.ravel(), w.values.ravel())
    ) ** (1 / p)
    assert lp_norm(f, w, p) == pytest.approx(want, rel=1e-12)


def test_indicator_norm_closed_form_and_equality(rng):
    w = random_grid(rng, 1, 32)
    params = MorreyParams(2.0, 0.5)
    q = Cube((0.5,), 0.5)  # grid-aligned
    fam = CubeFamily.all_cubes()
    ind = indicator_norm(q, w, params, fam)
    # exact match with the Morrey norm of the indicator function
    chi = w.with_values(
        (np.abs(w.axis_centers(0) - 0.5) <= 0.25).astype(float)
    )
    res = morrey_norm(chi, w, params, fam)
    assert ind == pytest.approx(res.value, rel=1e-12)


def test_indicator_norm_constant_weight_closed_form():
    w = GridFunction.constant(1.0, [0.0], [64], 1.0 / 64)
    params = MorreyParams(2.0, 0.5)
    q = Cube((0.25,), 0.5)
    fam = CubeFamily.all_cubes(Truncation(bbox=((0.0,), (0.5,))))
    # family of subcubes of q: maximum at R = q with (|q|^(1-lam))^(1/p)
    assert indicator_norm(q, w, params, fam) == pytest.approx(
        (0.5 ** 0.5) ** 0.5, rel=1e-12
    )


def test_indicator_norm_monotone_in_cube(rng):
    w = random_grid(rng, 1, 32)
    params = MorreyParams(2.0, 0.5)
    fam = CubeFamily.all_cubes()
    small = indicator_norm(Cube((0.4,), 0.25), w, params, fam)
    big = indicator_norm(Cube((0.4,), 0.5), w, params, fam)
    assert small <= big * (1 + 1e-13)


def test_restricted_norm_against_masking_oracle(rng):
    f = random_grid(rng, 1, 32, low=-1, high=2)
    w = random_grid(rng, 1, 32)
    params = MorreyParams(2.0, 0.5)
    fam = CubeFamily.all_cubes()
    for side_cells in (8, 16, 24):
        k = Cube((side_cells / 64,), side_cells / 32)  # grid-aligned
        got = restricted_norm(f, w, params, fam, k)
        want = morrey_norm(f.masked(k), w, params, fam).value
        assert got == pytest.approx(want, rel=1e-12)


def test_restricted_norm_covering_and_disjoint_cases(rng):
    f = random_grid(rng, 1, 16, low=0, high=2)
    w = random_grid(rng, 1, 16)
    params = MorreyParams(2.0, 0.5)
    fam = CubeFamily.all_cubes()
    assert restricted_norm(f, w, params, fam, Cube((0.5,), 10.0)) == pytest.approx(
        morrey_norm(f, w, params, fam).value, rel=1e-13
    )
    assert restricted_norm(f, w, params, fam, Cube((99.0,), 1.0)) == 0.0


def test_one_step_subdivision_inequality(rng):
    """Each distance-pinched cube term is controlled by the doubled family
    norm with the explicit constant 2^(n(1-lam)/p), children included in the
    enumeration."""
    n = 1
    cells = 64
    f = random_grid(rng, n, cells, corner=-1.0, extent=2.0, low=0.0, high=2.0)
    w = random_grid(rng, n, cells, corner=-1.0, extent=2.0)
    params = MorreyParams(2.0, 0.5)
    omega = PointSet([[0.0]])
    r1, r2 = 0.5, 2.0
    fam = CubeFamily.whitney(omega, r1, r2)
    fam2 = CubeFamily.whitney(omega, 2 * r1, 2 * (r2 + 1))
    batch = fam.enumerate(f)
    const = 2 ** (n * (1 - params.lam) / params.p)
    from morreylab.lab.verify import _norm_with_children

    rhs = _norm_with_children(f, w, params, fam2, batch, 2 * r1, 2 * (r2 + 1))
    from morreylab.norms import _Scanner, _p_mass_integrand

    scanner = _Scanner(f, _p_mass_integrand(f, w, params.p))
    terms = scanner.terms(batch, params.lam) ** (1 / params.p)
    assert np.all(terms <= const * rhs * (1 + 1e-9))
