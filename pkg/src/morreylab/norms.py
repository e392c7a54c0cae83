"""Morrey and weighted-Lebesgue norms over enumerated cube families.

The Morrey norm used everywhere is

    sup over Q in the family of ( |Q|^(-lam) * int_Q |f|^p w )^(1/p)

with the cube-volume normalization ``|Q|^lam``, ``0 < lam < 1`` (one fixed
convention; no side-length variant).  Suprema are realized as maxima over
the family's deterministic enumeration; integrals clip to the grid box but
``|Q|`` is always the full cube volume.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .geometry import Cube, CubeBatch, CubeFamily
from .grid import GridFunction, SummedTable, require_same_grid, require_weight

__all__ = [
    "MorreyParams",
    "NormResult",
    "NormSpec",
    "morrey_norm",
    "lp_norm",
    "indicator_norm",
    "restricted_norm",
]


@dataclass(frozen=True)
class MorreyParams:
    """Integrability exponent p >= 1 and volume-scaling exponent lam in (0,1)."""

    p: float
    lam: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("requires p >= 1")
        if not (0.0 < self.lam < 1.0):
            raise ValueError("requires 0 < lam < 1")


@dataclass(frozen=True)
class NormResult:
    """Norm value with the cube realizing the maximum."""

    value: float
    argmax_cube: Cube
    cubes_examined: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax_cube": self.argmax_cube.to_dict(),
            "cubes_examined": self.cubes_examined,
        }


def _enumerate(f: GridFunction, family) -> CubeBatch:
    batch = family.enumerate(f) if isinstance(family, CubeFamily) else family
    if len(batch) == 0:
        raise ValueError("family truncation produced no cubes")
    return batch


def argmax_lex(terms: np.ndarray, batch: CubeBatch) -> int:
    """Index of the max term; ties broken lexicographically by center, then side."""
    m = np.max(terms)
    ties = np.flatnonzero(terms == m)
    if len(ties) == 1:
        return int(ties[0])
    keys = [batch.sides[ties]]
    for ax in range(batch.n - 1, -1, -1):
        keys.append(batch.centers[ties, ax])
    return int(ties[np.lexsort(keys)][0])


def _p_mass_integrand(f: GridFunction, w: GridFunction, p: float) -> np.ndarray:
    require_same_grid(f, w, "grid")
    require_weight(w)
    return np.abs(f.values) ** p * w.values


class _Scanner:
    """Binds a grid geometry to a summed table for repeated cube scans."""

    def __init__(self, f: GridFunction, values: np.ndarray):
        self.corner = np.asarray(f.corner)
        self.h = f.h
        self.table = SummedTable(values, f.h)

    def terms(self, batch: CubeBatch, lam: float, clip: Optional[Cube] = None) -> np.ndarray:
        scales = self.table.cellvol * batch.volumes() ** (-lam)
        los = (batch.centers - 0.5 * batch.sides[:, None] - self.corner) / self.h
        his = (batch.centers + 0.5 * batch.sides[:, None] - self.corner) / self.h
        if clip is not None:
            c_lo = (clip.lo() - self.corner) / self.h
            c_hi = (clip.hi() - self.corner) / self.h
            los = np.maximum(los, c_lo)
            his = np.minimum(his, c_hi)
        raw = kernels.batch_box_sums(self.table.table64, los, his)
        return np.maximum(raw * scales, 0.0)


def morrey_norm(f: GridFunction, w: GridFunction, params: MorreyParams, family) -> NormResult:
    """Morrey norm of f over the enumerated family, with the argmax cube."""
    batch = _enumerate(f, family)
    scanner = _Scanner(f, _p_mass_integrand(f, w, params.p))
    terms = scanner.terms(batch, params.lam)
    i = argmax_lex(terms, batch)
    return NormResult(float(terms[i]) ** (1.0 / params.p), batch.cube(i), len(batch))


def lp_norm(f: GridFunction, w: GridFunction, p: float) -> float:
    """Weighted Lebesgue norm over the whole grid box."""
    if p < 1:
        raise ValueError("requires p >= 1")
    require_same_grid(f, w, "grid")
    require_weight(w)
    mass = float(np.sum(np.abs(f.values) ** p * w.values)) * f.h ** f.n
    return mass ** (1.0 / p)


def indicator_norm(Q: Cube, w: GridFunction, params: MorreyParams, family) -> float:
    """Morrey norm of the indicator of Q: ``max_R (w(R ∩ Q) / |R|^lam)^(1/p)``."""
    batch = _enumerate(w, family)
    scanner = _Scanner(w, w.values)
    require_weight(w)
    terms = scanner.terms(batch, params.lam, clip=Q)
    return float(np.max(terms)) ** (1.0 / params.p)


def restricted_norm(
    f: GridFunction, w: GridFunction, params: MorreyParams, family, K: Cube
) -> float:
    """Morrey norm of the cut-off ``f * chi_K``: integration over ``R ∩ K``."""
    batch = _enumerate(f, family)
    scanner = _Scanner(f, _p_mass_integrand(f, w, params.p))
    terms = scanner.terms(batch, params.lam, clip=K)
    return float(np.max(terms)) ** (1.0 / params.p)


@dataclass(frozen=True)
class NormSpec:
    """A norm choice for operator estimates: Morrey over a family, or L^p(w)."""

    kind: str  # "morrey" | "lebesgue"
    w: GridFunction
    p: float
    params: Optional[MorreyParams] = None
    family: Optional[CubeFamily] = None

    @staticmethod
    def morrey(w: GridFunction, params: MorreyParams, family: CubeFamily) -> "NormSpec":
        return NormSpec("morrey", w, params.p, params, family)

    @staticmethod
    def lebesgue(w: GridFunction, p: float) -> "NormSpec":
        return NormSpec("lebesgue", w, p)

    def norm(self, f: GridFunction) -> float:
        if self.kind == "morrey":
            return morrey_norm(f, self.w, self.params, self.family).value
        if self.kind == "lebesgue":
            return lp_norm(f, self.w, self.p)
        raise ValueError(f"unknown norm kind {self.kind!r}")

    def describe(self) -> dict:
        d = {"kind": self.kind, "p": self.p}
        if self.params is not None:
            d["lam"] = self.params.lam
        return d
