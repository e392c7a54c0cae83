"""Cubes, point sets, cube families, shifted dyadic lattices, and the
explicit parameter solvers used by the verification harness.

Conventions: cubes are closed and axis-aligned; ``diam = sqrt(n) * side``;
"pairwise disjoint" for coverings means disjoint interiors.  Distances are
Euclidean; the distance from a point to a cube is computed by coordinatewise
clamping and is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Cube",
    "PointSet",
    "Truncation",
    "CubeBatch",
    "CubeFamily",
    "CubePredicate",
    "DyadicLattice",
    "SplittingParams",
    "EquaParams",
    "LacunarySphereSet",
    "dist_cube_to_set",
    "near_set_predicate",
    "far_set_predicate",
    "dist_cubes_to_points",
    "whitney_member",
    "check_rcond",
    "generate_lacunary_1d",
    "generate_lacunary_sphere",
    "build_shifted_lattices",
    "covering_cube",
    "annulus_cover",
    "solve_splitting_params",
    "solve_epsilon_N",
    "equa_residual",
]


# ---------------------------------------------------------------------------
# basic types


@dataclass(frozen=True)
class Cube:
    """Axis-aligned closed cube given by center and side length."""

    center: tuple
    side: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "side", float(self.side))
        if self.side <= 0:
            raise ValueError("cube side must be positive")
        if len(self.center) < 1:
            raise ValueError("cube needs at least one dimension")

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def diam(self) -> float:
        return math.sqrt(self.n) * self.side

    @property
    def volume(self) -> float:
        return self.side ** self.n

    def lo(self) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64) - 0.5 * self.side

    def hi(self) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64) + 0.5 * self.side

    def dilate(self, t: float) -> "Cube":
        """Concentric dilation: same center, side ``t * side``."""
        if t <= 0:
            raise ValueError("dilation factor must be positive")
        return Cube(self.center, t * self.side)

    def contains_point(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(np.abs(x - np.asarray(self.center)) <= 0.5 * self.side))

    def contains_cube(self, other: "Cube") -> bool:
        return bool(
            np.all(self.lo() <= other.lo()) and np.all(other.hi() <= self.hi())
        )

    def to_dict(self) -> dict:
        return {"center": list(self.center), "side": self.side}

    @staticmethod
    def from_dict(d: dict) -> "Cube":
        return Cube(tuple(d["center"]), d["side"])


class PointSet:
    """Finite set of points in R^n with no duplicates."""

    def __init__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.ndim != 2:
            raise ValueError("points must be a (M, n) array")
        self.points = pts
        if len(pts) > 1:
            d2 = _pairwise_sq_dists(pts)
            iu = np.triu_indices(len(pts), k=1)
            if np.any(d2[iu] == 0.0):
                raise ValueError("duplicate points in point set")

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def to_dict(self) -> dict:
        return {"points": self.points.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "PointSet":
        return PointSet(d["points"])


def _pairwise_sq_dists(pts: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - pts[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _as_points(reference) -> np.ndarray:
    """Accept a PointSet, an array of points, or a grid mask.

    A grid mask is any object with ``corner``, ``h`` and ``values`` (cells
    with nonzero value are marked); its reference points are the marked cell
    centers.
    """
    if isinstance(reference, PointSet):
        return reference.points
    if hasattr(reference, "values") and hasattr(reference, "corner"):
        idx = np.argwhere(np.asarray(reference.values) != 0)
        if idx.size == 0:
            raise ValueError("empty reference set")
        corner = np.asarray(reference.corner, dtype=np.float64)
        return corner + (idx + 0.5) * reference.h
    pts = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    return pts


# ---------------------------------------------------------------------------
# distances and membership


def dist_cube_to_set(cube: Cube, reference) -> float:
    """Euclidean distance from a cube to a point set or grid mask.

    For a point set this is the exact min over points of the point-to-cube
    distance (coordinatewise clamp); for a grid mask it is the min over
    marked cell centers.
    """
    pts = _as_points(reference)
    if len(pts) == 0:
        raise ValueError("empty reference set")
    c = np.asarray(cube.center, dtype=np.float64)
    excess = np.maximum(np.abs(pts - c) - 0.5 * cube.side, 0.0)
    return float(np.min(np.sqrt(np.einsum("ij,ij->i", excess, excess))))


def dist_cubes_to_points(centers: np.ndarray, sides: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Batched cube-to-point-set distance, min over points, shape (M,)."""
    centers = np.asarray(centers, dtype=np.float64)
    sides = np.asarray(sides, dtype=np.float64)
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    if pts.shape[0] == 0:
        raise ValueError("empty reference set")
    out = np.empty(len(centers), dtype=np.float64)
    # chunk over cubes to bound the (chunk, K, n) temporary
    step = max(1, int(4e6 / max(1, pts.shape[0] * pts.shape[1])))
    for a in range(0, len(centers), step):
        b = min(a + step, len(centers))
        excess = np.maximum(
            np.abs(pts[None, :, :] - centers[a:b, None, :])
            - 0.5 * sides[a:b, None, None],
            0.0,
        )
        out[a:b] = np.sqrt(np.einsum("mkj,mkj->mk", excess, excess)).min(axis=1)
    return out


def whitney_member(cube: Cube, reference, r1: float, r2: float) -> bool:
    """Membership in the distance-pinched family: ``r1*diam <= dist <= r2*diam``.

    Comparisons are exact on the computed values, no tolerance slack.
    """
    if not (0 < r1 < r2):
        raise ValueError("requires 0 < r1 < r2")
    d = dist_cube_to_set(cube, reference)
    diam = cube.diam
    return r1 * diam <= d <= r2 * diam


# ---------------------------------------------------------------------------
# lacunary point sets


def check_rcond(points, nu: float):
    """Check the lacunary separation condition on a point set.

    Returns ``(ok, witness)`` where ``ok`` is True iff every pair i != j
    satisfies ``max(|x_i|, |x_j|) <= nu * |x_i - x_j|``.  On failure,
    ``witness`` is the first violating pair (in enumeration order); a set
    with fewer than two points passes vacuously.
    """
    if nu <= 1:
        raise ValueError("requires nu > 1")
    pts = _as_points(points)
    m = len(pts)
    if m < 2:
        return True, None
    norms = np.sqrt(np.einsum("ij,ij->i", pts, pts))
    for i in range(m - 1):
        diff = pts[i + 1 :] - pts[i]
        gaps = nu * np.sqrt(np.einsum("ij,ij->i", diff, diff))
        bad = np.maximum(norms[i], norms[i + 1 :]) > gaps
        if np.any(bad):
            j = i + 1 + int(np.argmax(bad))
            return False, (tuple(pts[i]), tuple(pts[j]))
    return True, None


def generate_lacunary_1d(nu: float, jmin: int, jmax: int) -> PointSet:
    """Two-sided geometric point set ``{0} ∪ {±g^j}`` with ``g = nu/(nu-1)``.

    Consecutive pairs of the geometric sequence satisfy the separation
    condition with equality in exact arithmetic; where rounding lands on the
    wrong side (observed for some nu), the smaller point of the pair is
    nudged toward zero by ulps so the returned set passes ``check_rcond``
    under exact float comparison.
    """
    if nu <= 1:
        raise ValueError("requires nu > 1")
    if jmin > jmax:
        raise ValueError("requires jmin <= jmax")
    g = nu / (nu - 1.0)
    pos = [g ** j for j in range(jmin, jmax + 1)]
    for i in range(len(pos) - 2, -1, -1):
        # enforce p[i+1] <= nu * (p[i+1] - p[i]) in float arithmetic
        guard = 0
        while pos[i + 1] > nu * (pos[i + 1] - pos[i]):
            pos[i] = math.nextafter(pos[i], 0.0)
            guard += 1
            if guard > 64:  # pragma: no cover - ulp-level fix only
                raise RuntimeError("lacunary nudge did not converge")
    vals = sorted([-p for p in pos] + [0.0] + pos)
    ps = PointSet(np.asarray(vals, dtype=np.float64)[:, None])
    ok, witness = check_rcond(ps, nu)
    if not ok:  # pragma: no cover - guarded by the nudge loop
        raise RuntimeError(f"generated set fails separation check at {witness}")
    return ps


def _sphere_mesh(n: int, radius: float, mesh: int) -> np.ndarray:
    if n == 2:
        th = 2.0 * math.pi * np.arange(mesh) / mesh
        return radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    if n == 3:
        # Fibonacci sphere: deterministic, near-uniform
        k = np.arange(mesh, dtype=np.float64)
        z = 1.0 - 2.0 * (k + 0.5) / mesh
        r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        th = math.pi * (1.0 + math.sqrt(5.0)) * k
        return radius * np.stack([r * np.cos(th), r * np.sin(th), z], axis=1)
    raise ValueError("sphere generator supports n in {2, 3}")


@dataclass(frozen=True)
class LacunarySphereSet:
    """Output of the spherical lacunary generator."""

    point_set: PointSet
    nu_effective: float
    counts_per_sphere: tuple

    @property
    def points(self) -> np.ndarray:
        return self.point_set.points


def generate_lacunary_sphere(
    nu: float, n: int, jmin: int, jmax: int, mesh: int = 720
) -> LacunarySphereSet:
    """Greedy packing of sphere shells at radii ``g^j``, ``g = nu/(nu-1)``.

    On each shell, points are chosen by farthest-point insertion from a
    fixed-resolution mesh, stopping when no candidate keeps the within-shell
    distance at least ``radius/nu``.  The achieved per-shell counts are
    reported without any optimality claim.  The whole set (including the
    origin) passes ``check_rcond`` at the reported effective ``nu``.
    """
    if nu <= 1:
        raise ValueError("requires nu > 1")
    if n < 2:
        raise ValueError("requires n >= 2 (use generate_lacunary_1d for n=1)")
    if jmin > jmax:
        raise ValueError("requires jmin <= jmax")
    g = nu / (nu - 1.0)
    shells = []
    counts = []
    for j in range(jmin, jmax + 1):
        radius = g ** j
        threshold = radius / nu
        cand = _sphere_mesh(n, radius, mesh)
        chosen = [0]
        mind = np.sqrt(np.einsum("ij,ij->i", cand - cand[0], cand - cand[0]))
        while True:
            k = int(np.argmax(mind))
            if mind[k] < threshold:
                break
            chosen.append(k)
            d = np.sqrt(np.einsum("ij,ij->i", cand - cand[k], cand - cand[k]))
            mind = np.minimum(mind, d)
        shells.append(cand[chosen])
        counts.append(len(chosen))
    pts = np.concatenate([np.zeros((1, n))] + shells, axis=0)
    ps = PointSet(pts)

    norms = np.sqrt(np.einsum("ij,ij->i", pts, pts))
    d2 = _pairwise_sq_dists(pts)
    iu = np.triu_indices(len(pts), k=1)
    ratios = np.maximum(norms[iu[0]], norms[iu[1]]) / np.sqrt(d2[iu])
    nu_eff = max(float(np.max(ratios)), math.nextafter(1.0, math.inf))
    while not check_rcond(ps, nu_eff)[0]:
        nu_eff = math.nextafter(nu_eff, math.inf)
    return LacunarySphereSet(ps, nu_eff, tuple(counts))


# ---------------------------------------------------------------------------
# annulus covering


def annulus_cover(P: Cube, N: int) -> list:
    """Tile the cubic annulus ``(1+1/N)P \\ P`` by a boundary layer of cells.

    The dilated cube is tiled by a ``(2N+2)^n`` grid of cells of side
    ``side(P)/(2N)``; the inner ``2N``-per-side block is exactly P and the
    returned boundary layer of ``2^n((N+1)^n - N^n)`` cells covers the
    annulus with pairwise disjoint interiors.  Each cell L satisfies
    ``(N/sqrt(n)) * diam(L) <= dist(L, center(P)) <= N * diam(L)`` (with
    equality attained at face- and corner-adjacent cells).
    """
    if N < 1:
        raise ValueError("requires N >= 1")
    n = P.n
    s = P.side / (2 * N)
    k_ranges = [np.arange(2 * N + 2)] * n
    grids = np.meshgrid(*k_ranges, indexing="ij")
    ks = np.stack([gi.ravel() for gi in grids], axis=1)
    boundary = np.any((ks == 0) | (ks == 2 * N + 1), axis=1)
    ks = ks[boundary]
    center = np.asarray(P.center, dtype=np.float64)
    out = []
    for k in ks:
        c = center + s * (k + 0.5 - (N + 1))
        out.append(Cube(tuple(c), s))
    return out


# ---------------------------------------------------------------------------
# parameter solvers


@dataclass(frozen=True)
class SplittingParams:
    """Parameters for the near/far lattice splitting used by the maximal
    operator decomposition: threshold ``alpha``, enclosing factors ``mu``
    and ``gamma_split``."""

    alpha: float
    mu: float
    gamma_split: float


def solve_splitting_params(r1: float, r2: float) -> SplittingParams:
    """Deterministic rule producing a valid near/far splitting threshold.

    ``alpha = 2 * max(r1, 1 + 2(r2+1)/(m-1))`` with ``m = min(3/2, r1)``;
    then ``mu = 2(r2+1)/(alpha-1) + 1 < min(3/2, r1)`` and
    ``gamma_split = 2(alpha+1)/(r1-1) + 1``.
    """
    if not r1 < r2:
        raise ValueError("requires r1 < r2")
    if r1 <= 1:
        raise ValueError(
            "requires r1 > 1 (rescale the family via the subdivision equivalence first)"
        )
    m = min(1.5, r1)
    alpha = 2.0 * max(r1, 1.0 + 2.0 * (r2 + 1.0) / (m - 1.0))
    mu = 2.0 * (r2 + 1.0) / (alpha - 1.0) + 1.0
    gamma = 2.0 * (alpha + 1.0) / (r1 - 1.0) + 1.0
    params = SplittingParams(alpha, mu, gamma)
    if not (params.mu < min(1.5, r1) and r1 < params.alpha):
        raise RuntimeError("splitting rule failed its own invariants")
    return params


@dataclass(frozen=True)
class EquaParams:
    """Solution pair ``(epsilon, N)`` of the scale-matching identity."""

    epsilon: float
    big_n: int


def solve_epsilon_N(nu: float, n: int) -> EquaParams:
    """Solve ``2 sqrt(n) (1 + eps N) / (N (1 - eps sqrt(n))) = 1/nu``.

    Deterministic rule: ``N = ceil(4 sqrt(n) nu)`` and
    ``eps = (N - 2 sqrt(n) nu) / (sqrt(n) (2 nu + 1) N)``; the identity then
    holds to rounding error.
    """
    if nu <= 1:
        raise ValueError("requires nu > 1")
    sn = math.sqrt(n)
    big_n = int(math.ceil(4.0 * sn * nu))
    eps = (big_n - 2.0 * sn * nu) / (sn * (2.0 * nu + 1.0) * big_n)
    if not (0.0 < eps < 1.0):  # pragma: no cover - always true for nu > 1
        raise RuntimeError("epsilon out of range")
    return EquaParams(eps, big_n)


def equa_residual(params: EquaParams, nu: float, n: int) -> float:
    """Relative residual of the scale-matching identity at ``params``."""
    sn = math.sqrt(n)
    eps, big_n = params.epsilon, params.big_n
    lhs = 2.0 * sn * (1.0 + eps * big_n) / (big_n * (1.0 - eps * sn))
    return abs(lhs - 1.0 / nu) * nu


# ---------------------------------------------------------------------------
# shifted dyadic lattices


@dataclass(frozen=True)
class DyadicLattice:
    """One of the 3^n third-shifted dyadic cube systems over a box.

    Generation ``g`` consists of cubes of side ``h * 2**g`` whose corners
    lie on the grid ``origin + side * (m + (-1)**g * shift/3)``; the
    alternating shift sign makes every child of a lattice cube a lattice
    cube again.  Only cubes meeting the box ``[origin, origin + span*h]``
    are enumerated.
    """

    origin: tuple
    h: float
    shift: tuple
    generations: int
    span: tuple

    @property
    def n(self) -> int:
        return len(self.origin)

    def side(self, g: int) -> float:
        return self.h * (2.0 ** g)

    def offsets(self, g: int) -> np.ndarray:
        """Per-axis corner offset of generation g relative to the origin."""
        s = self.side(g)
        sign = -1.0 if (g % 2) else 1.0
        return sign * s * np.asarray(self.shift, dtype=np.float64) / 3.0

    def _index_range(self, g: int):
        """Per-axis integer index ranges of cubes meeting the box interior."""
        s = self.side(g)
        offs = self.offsets(g)
        extent = np.asarray(self.span, dtype=np.float64) * self.h
        ranges = []
        for i in range(self.n):
            m_lo = int(math.floor((0.0 - offs[i]) / s))
            if offs[i] + (m_lo + 1) * s <= 0.0:
                m_lo += 1
            m_hi = int(math.ceil((extent[i] - offs[i]) / s)) - 1
            if offs[i] + m_hi * s >= extent[i]:
                m_hi -= 1
            ranges.append((m_lo, m_hi))
        return ranges

    def generation_cubes(self, g: int):
        """Centers and sides of all generation-g cubes meeting the box."""
        if not (0 <= g < self.generations):
            raise ValueError("generation out of range")
        s = self.side(g)
        offs = self.offsets(g)
        origin = np.asarray(self.origin, dtype=np.float64)
        ranges = self._index_range(g)
        axes = [np.arange(lo, hi + 1) for lo, hi in ranges]
        grids = np.meshgrid(*axes, indexing="ij")
        ms = np.stack([gi.ravel() for gi in grids], axis=1).astype(np.float64)
        centers = origin + offs + (ms + 0.5) * s
        sides = np.full(len(ms), s)
        return centers, sides

    def point_cube_index(self, x: np.ndarray, g: int) -> np.ndarray:
        """Per-axis lattice index of the generation-g cube containing x."""
        s = self.side(g)
        offs = self.offsets(g)
        origin = np.asarray(self.origin, dtype=np.float64)
        return np.floor((np.asarray(x, dtype=np.float64) - origin - offs) / s).astype(
            np.int64
        )

    def cube_at(self, g: int, m) -> Cube:
        s = self.side(g)
        offs = self.offsets(g)
        origin = np.asarray(self.origin, dtype=np.float64)
        c = origin + offs + (np.asarray(m, dtype=np.float64) + 0.5) * s
        return Cube(tuple(c), s)

    def children(self, g: int, m) -> list:
        """The 2^n generation-(g-1) children indices of cube (g, m).

        With alternating shift signs, ``off(g) - off(g-1)`` equals
        ``sign(g) * shift * side(g-1)`` exactly, so child indices are
        ``2m + sign(g)*shift + {0,1}^n``.
        """
        if g <= 0:
            raise ValueError("generation-0 cubes have no children in range")
        m = np.asarray(m, dtype=np.int64)
        sign_parent = -1 if (g % 2) else 1
        base = 2 * m + sign_parent * np.asarray(self.shift, dtype=np.int64)
        kids = []
        for bits in range(2 ** self.n):
            off = np.array([(bits >> i) & 1 for i in range(self.n)])
            kids.append(tuple(base + off))
        return kids

    def to_dict(self) -> dict:
        return {
            "origin": list(self.origin),
            "h": self.h,
            "shift": list(self.shift),
            "generations": self.generations,
            "span": list(self.span),
        }

    @staticmethod
    def from_dict(d: dict) -> "DyadicLattice":
        return DyadicLattice(
            tuple(d["origin"]), d["h"], tuple(d["shift"]), d["generations"], tuple(d["span"])
        )


def build_shifted_lattices(n: int, corner, span, h: float) -> list:
    """Build the 3^n third-shifted dyadic lattices over a grid box.

    ``span`` is the cell count per axis and must be a power of two (error
    otherwise).  The generation range goes from cell scale up to a top scale
    of at least four box extents, which guarantees that the box lies inside
    a single top cube of every lattice and that every grid-aligned cube is
    contained in some lattice cube of side at most three (hence at most six)
    times its own.
    """
    corner = tuple(float(c) for c in np.atleast_1d(np.asarray(corner, dtype=np.float64)))
    span = tuple(int(s) for s in np.atleast_1d(np.asarray(span)))
    if len(corner) != n or len(span) != n:
        raise ValueError("corner/span dimension mismatch")
    for s in span:
        if s < 1 or (s & (s - 1)) != 0:
            raise ValueError("box/resolution mismatch: cell span must be a power of two")
    top = int(math.ceil(math.log2(4 * max(span))))
    generations = top + 1
    shifts = np.stack(
        np.meshgrid(*([np.arange(3)] * n), indexing="ij"), axis=-1
    ).reshape(-1, n)
    return [
        DyadicLattice(corner, float(h), tuple(int(v) for v in sh), generations, span)
        for sh in shifts
    ]


def covering_cube(lattices, Q: Cube):
    """Smallest-ratio lattice cube containing Q among the given lattices.

    Returns ``(lattice_index, cube, side_ratio)``; raises if no lattice cube
    within the generation range contains Q (does not happen for grid-aligned
    cubes inside the box by construction).
    """
    best = None
    lo_q, hi_q = Q.lo(), Q.hi()
    for g in range(lattices[0].generations):
        s = lattices[0].side(g)
        if s < Q.side:
            continue
        for li, lat in enumerate(lattices):
            m = lat.point_cube_index(lo_q, g)
            cand = lat.cube_at(g, m)
            if np.all(cand.lo() <= lo_q) and np.all(hi_q <= cand.hi()):
                ratio = cand.side / Q.side
                if best is None or ratio < best[2]:
                    best = (li, cand, ratio)
        if best is not None:
            return best
    raise ValueError("no covering lattice cube within the generation range")


# ---------------------------------------------------------------------------
# cube families


@dataclass(frozen=True)
class Truncation:
    """Enumeration truncation policy for a cube family.

    ``min_side``/``max_side`` bound the enumerated side lengths; ``bbox``
    (corner, extent) confines grid-aligned cubes (default: the grid box);
    ``side_mode`` is ``"all"`` for every cell multiple or ``"pow2"`` for
    power-of-two cell multiples only.
    """

    min_side: Optional[float] = None
    max_side: Optional[float] = None
    bbox: Optional[tuple] = None
    side_mode: str = "all"

    def to_dict(self) -> dict:
        return {
            "min_side": self.min_side,
            "max_side": self.max_side,
            "bbox": [list(map(float, b)) for b in self.bbox] if self.bbox else None,
            "side_mode": self.side_mode,
        }

    @staticmethod
    def from_dict(d: dict) -> "Truncation":
        bbox = d.get("bbox")
        return Truncation(
            d.get("min_side"),
            d.get("max_side"),
            tuple(tuple(b) for b in bbox) if bbox else None,
            d.get("side_mode", "all"),
        )


class CubeBatch:
    """Deterministic enumeration of a cube family: centers (M, n), sides (M,)."""

    def __init__(self, centers, sides):
        self.centers = np.ascontiguousarray(centers, dtype=np.float64)
        self.sides = np.ascontiguousarray(sides, dtype=np.float64)
        if self.centers.ndim != 2 or len(self.centers) != len(self.sides):
            raise ValueError("centers must be (M, n) with matching sides")

    @property
    def n(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return len(self.sides)

    def cube(self, i: int) -> Cube:
        return Cube(tuple(self.centers[i]), float(self.sides[i]))

    def subset(self, mask) -> "CubeBatch":
        return CubeBatch(self.centers[mask], self.sides[mask])

    def concat(self, other: "CubeBatch") -> "CubeBatch":
        return CubeBatch(
            np.concatenate([self.centers, other.centers]),
            np.concatenate([self.sides, other.sides]),
        )

    def volumes(self) -> np.ndarray:
        return self.sides ** self.n

    def diams(self) -> np.ndarray:
        return math.sqrt(self.n) * self.sides


@dataclass(frozen=True)
class CubePredicate:
    """Named, serializable cube predicate for restricted dyadic families."""

    kind: str  # "near_set" | "far_set" | "custom"
    points: Optional[PointSet] = None
    alpha: Optional[float] = None
    fn: Optional[Callable] = None

    def __call__(self, centers: np.ndarray, sides: np.ndarray) -> np.ndarray:
        if self.kind == "custom":
            return np.asarray(self.fn(centers, sides), dtype=bool)
        d = dist_cubes_to_points(centers, sides, self.points.points)
        diam = math.sqrt(centers.shape[1]) * sides
        if self.kind == "near_set":
            return d <= self.alpha * diam
        if self.kind == "far_set":
            return d > self.alpha * diam
        raise ValueError(f"unknown predicate kind {self.kind!r}")

    def complement(self) -> "CubePredicate":
        if self.kind == "near_set":
            return replace(self, kind="far_set")
        if self.kind == "far_set":
            return replace(self, kind="near_set")
        raise ValueError("custom predicates have no named complement")

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise ValueError("custom predicates are not serializable")
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "points": self.points.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "CubePredicate":
        return CubePredicate(
            d["kind"], PointSet.from_dict(d["points"]), d["alpha"], None
        )


def near_set_predicate(points: PointSet, alpha: float) -> CubePredicate:
    """Cubes with ``dist(Q, set) <= alpha * diam(Q)``."""
    return CubePredicate("near_set", points, float(alpha))


def far_set_predicate(points: PointSet, alpha: float) -> CubePredicate:
    """Complement of :func:`near_set_predicate`."""
    return CubePredicate("far_set", points, float(alpha))


# default side ladder span for families centered at off-grid points
_LADDER_SPAN = 4.0


@dataclass(frozen=True)
class CubeFamily:
    """Predicate-defined cube family with a deterministic enumeration.

    Kinds: ``all_cubes`` (grid-aligned), ``whitney`` (grid-aligned, distance
    to a reference set pinched between r1 and r2 diameters), ``centered_at``
    (cubes centered at given points, geometric side ladder ``h * 2**(k/2)``),
    and ``dyadic_restricted`` (lattice cubes passing a predicate).
    """

    kind: str
    truncation: Truncation = field(default_factory=Truncation)
    points: Optional[PointSet] = None
    r1: Optional[float] = None
    r2: Optional[float] = None
    lattice: Optional[DyadicLattice] = None
    predicate: Optional[CubePredicate] = None

    # -- constructors -------------------------------------------------

    @staticmethod
    def all_cubes(truncation: Truncation = None) -> "CubeFamily":
        return CubeFamily("all_cubes", truncation or Truncation())

    @staticmethod
    def whitney(reference, r1: float, r2: float, truncation: Truncation = None) -> "CubeFamily":
        if not (0 < r1 < r2):
            raise ValueError("requires 0 < r1 < r2")
        pts = reference if isinstance(reference, PointSet) else PointSet(_as_points(reference))
        return CubeFamily("whitney", truncation or Truncation(), points=pts, r1=r1, r2=r2)

    @staticmethod
    def centered_at(points: PointSet, truncation: Truncation = None) -> "CubeFamily":
        return CubeFamily("centered_at", truncation or Truncation(), points=points)

    @staticmethod
    def dyadic_restricted(
        lattice: DyadicLattice,
        predicate: CubePredicate = None,
        truncation: Truncation = None,
    ) -> "CubeFamily":
        return CubeFamily(
            "dyadic_restricted",
            truncation or Truncation(),
            lattice=lattice,
            predicate=predicate,
        )

    # -- enumeration ---------------------------------------------------

    def enumerate(self, geom) -> CubeBatch:
        """Enumerate the family over a grid geometry (corner, shape, h).

        ``geom`` is any object with attributes ``corner``, ``h`` and either
        ``shape`` or ``values``; the enumeration is deterministic for a fixed
        truncation: sides ascending, positions in C order.
        """
        corner, shape, h = _geom(geom)
        if self.kind == "all_cubes":
            batch = _grid_aligned(corner, shape, h, self.truncation)
        elif self.kind == "whitney":
            batch = _grid_aligned(corner, shape, h, self.truncation)
            d = dist_cubes_to_points(batch.centers, batch.sides, self.points.points)
            diam = math.sqrt(batch.n) * batch.sides
            batch = batch.subset((self.r1 * diam <= d) & (d <= self.r2 * diam))
        elif self.kind == "centered_at":
            batch = self._centered(corner, shape, h)
        elif self.kind == "dyadic_restricted":
            batch = self._dyadic()
        else:
            raise ValueError(f"unknown family kind {self.kind!r}")
        return batch

    def _centered(self, corner, shape, h) -> CubeBatch:
        extent = np.asarray(shape) * h
        smax = self.truncation.max_side
        if smax is None:
            smax = _LADDER_SPAN * float(np.max(extent))
        smin = self.truncation.min_side if self.truncation.min_side is not None else h
        ladder = []
        k = 0
        while True:
            s = h * 2.0 ** (0.5 * k)
            if s > smax:
                break
            if s >= smin:
                ladder.append(s)
            k += 1
        if not ladder:
            return CubeBatch(np.empty((0, len(shape))), np.empty(0))
        pts = self.points.points
        centers = np.repeat(pts, len(ladder), axis=0)
        sides = np.tile(np.asarray(ladder), len(pts))
        return CubeBatch(centers, sides)

    def _dyadic(self) -> CubeBatch:
        lat = self.lattice
        cs, ss = [], []
        for g in range(lat.generations):
            s = lat.side(g)
            if self.truncation.min_side is not None and s < self.truncation.min_side:
                continue
            if self.truncation.max_side is not None and s > self.truncation.max_side:
                continue
            centers, sides = lat.generation_cubes(g)
            cs.append(centers)
            ss.append(sides)
        if not cs:
            return CubeBatch(np.empty((0, lat.n)), np.empty(0))
        batch = CubeBatch(np.concatenate(cs), np.concatenate(ss))
        if self.predicate is not None:
            batch = batch.subset(self.predicate(batch.centers, batch.sides))
        return batch

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "truncation": self.truncation.to_dict()}
        if self.points is not None:
            d["points"] = self.points.to_dict()
        if self.r1 is not None:
            d["r1"] = self.r1
            d["r2"] = self.r2
        if self.lattice is not None:
            d["lattice"] = self.lattice.to_dict()
        if self.predicate is not None:
            d["predicate"] = self.predicate.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "CubeFamily":
        return CubeFamily(
            d["kind"],
            Truncation.from_dict(d.get("truncation", {})),
            points=PointSet.from_dict(d["points"]) if "points" in d else None,
            r1=d.get("r1"),
            r2=d.get("r2"),
            lattice=DyadicLattice.from_dict(d["lattice"]) if "lattice" in d else None,
            predicate=CubePredicate.from_dict(d["predicate"]) if "predicate" in d else None,
        )


def _geom(geom):
    corner = np.asarray(geom.corner, dtype=np.float64)
    h = float(geom.h)
    shape = tuple(geom.values.shape) if hasattr(geom, "values") else tuple(geom.shape)
    return corner, shape, h


def _grid_aligned(corner, shape, h, trunc: Truncation) -> CubeBatch:
    n = len(shape)
    max_m = min(shape)
    ms = range(1, max_m + 1)
    if trunc.side_mode == "pow2":
        ms = [m for m in ms if (m & (m - 1)) == 0]
    elif trunc.side_mode != "all":
        raise ValueError(f"unknown side_mode {trunc.side_mode!r}")
    if trunc.bbox is not None:
        bb_lo = np.asarray(trunc.bbox[0], dtype=np.float64)
        bb_hi = bb_lo + np.asarray(trunc.bbox[1], dtype=np.float64)
    else:
        bb_lo = bb_hi = None
    tol = 1e-9 * h
    cs, ss = [], []
    for m in ms:
        s = m * h
        if trunc.min_side is not None and s < trunc.min_side:
            continue
        if trunc.max_side is not None and s > trunc.max_side:
            continue
        axes = []
        empty = False
        for i in range(n):
            pos = corner[i] + (np.arange(shape[i] - m + 1) + 0.5 * m) * h
            if bb_lo is not None:
                keep = (pos - 0.5 * s >= bb_lo[i] - tol) & (pos + 0.5 * s <= bb_hi[i] + tol)
                pos = pos[keep]
            if len(pos) == 0:
                empty = True
                break
            axes.append(pos)
        if empty:
            continue
        grids = np.meshgrid(*axes, indexing="ij")
        centers = np.stack([gi.ravel() for gi in grids], axis=1)
        cs.append(centers)
        ss.append(np.full(len(centers), s))
    if not cs:
        return CubeBatch(np.empty((0, n)), np.empty(0))
    return CubeBatch(np.concatenate(cs), np.concatenate(ss))
