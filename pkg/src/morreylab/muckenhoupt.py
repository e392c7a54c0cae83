"""Muckenhoupt-type constants over cube families and corpus-based
estimators for the averaging condition on a function-space norm.

The family constant is ``sup_Q <w>_Q <w^(-1/(p-1))>_Q^(p-1)`` over the
enumerated cubes (full cube volume in the averages).  The corpus estimator
bounds from below the best constant C in

    <|f|>_Q * ||chi_Q||_X  <=  C * ||f chi_Q||_X

with X realized either as the Morrey norm over a family or as L^p(w); only
this primal form is computed (no associate-space machinery).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .geometry import Cube, CubeBatch, CubeFamily
from .grid import GridFunction, SummedTable, require_same_grid, require_weight
from .norms import MorreyParams, argmax_lex

__all__ = [
    "ApReport",
    "AxEstimate",
    "ap_constant",
    "ax_constant_estimate",
    "classify_power_weight",
]


@dataclass(frozen=True)
class ApReport:
    """Family Muckenhoupt constant with its argmax cube."""

    constant: float
    argmax_cube: Cube
    cubes_examined: int
    terms: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        d = {
            "constant": self.constant,
            "argmax_cube": self.argmax_cube.to_dict(),
            "cubes_examined": self.cubes_examined,
        }
        if self.terms is not None:
            d["terms"] = [float(t) for t in self.terms]
        return d


def _enumerate(w: GridFunction, family) -> CubeBatch:
    batch = family.enumerate(w) if isinstance(family, CubeFamily) else family
    if len(batch) == 0:
        raise ValueError("family truncation produced no cubes")
    return batch


def _index_boxes(w: GridFunction, batch: CubeBatch):
    corner = np.asarray(w.corner)
    los = (batch.centers - 0.5 * batch.sides[:, None] - corner) / w.h
    his = (batch.centers + 0.5 * batch.sides[:, None] - corner) / w.h
    return los, his


def ap_constant(
    w: GridFunction, p: float, family, keep_terms: bool = False
) -> ApReport:
    """``sup_Q <w>_Q <w^(-1/(p-1))>_Q^(p-1)`` over the enumerated family.

    The weight must be strictly positive on every cell met by an enumerated
    cube; a zero cell inside the family's reach makes the dual weight
    undefined and raises.
    """
    if p <= 1:
        raise ValueError("requires p > 1")
    require_weight(w)
    batch = _enumerate(w, family)
    los, his = _index_boxes(w, batch)
    if np.any(w.values == 0.0):
        zmask = (w.values == 0.0).astype(np.float64)
        ztab = SummedTable(zmask, w.h)
        zmass = kernels.batch_box_sums(ztab.table64, los, his)
        if np.any(zmass * ztab.cellvol > 1e-15 * w.h ** w.n):
            raise ValueError("dual weight undefined: weight vanishes on a cell met by the family")
    dual = w.values ** (-1.0 / (p - 1.0))
    t_w = SummedTable(w.values, w.h)
    t_d = SummedTable(dual, w.h)
    inv_vol = batch.volumes() ** (-1.0)
    avg_w = np.maximum(kernels.batch_box_sums(t_w.table64, los, his) * t_w.cellvol * inv_vol, 0.0)
    avg_d = np.maximum(kernels.batch_box_sums(t_d.table64, los, his) * t_d.cellvol * inv_vol, 0.0)
    terms = avg_w * avg_d ** (p - 1.0)
    i = argmax_lex(terms, batch)
    return ApReport(
        float(terms[i]), batch.cube(i), len(batch), terms if keep_terms else None
    )


@dataclass(frozen=True)
class AxEstimate:
    """Lower-bound estimate of the averaging-condition constant."""

    value: float
    argmax_cube: Cube
    argmax_function: str
    skipped_zero_denominators: int
    cubes_examined: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax_cube": self.argmax_cube.to_dict(),
            "argmax_function": self.argmax_function,
            "skipped_zero_denominators": self.skipped_zero_denominators,
            "cubes_examined": self.cubes_examined,
        }


def ax_constant_estimate(
    w: GridFunction,
    params: MorreyParams,
    family,
    corpus,
    realization: str = "morrey",
) -> AxEstimate:
    """Max over cubes Q and corpus members f of
    ``<|f|>_Q * ||chi_Q||_X / ||f chi_Q||_X``, a lower bound for the true
    constant of the averaging condition on X.

    ``realization="morrey"`` takes X as the Morrey norm over the family;
    ``realization="lebesgue"`` takes X = L^p(w) (family still supplies the
    cubes Q of the condition).  Zero denominators are skipped and counted.
    """
    require_weight(w)
    batch = _enumerate(w, family)
    los, his = _index_boxes(w, batch)
    vols = batch.volumes()
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus must be nonempty")
    for _, fn in corpus:
        require_same_grid(fn, w, "corpus/weight grid")

    t_w = SummedTable(w.values, w.h)
    # plain (unweighted) averages <|f|>_Q per corpus member
    abs_tables = [SummedTable(np.abs(fn.values), w.h) for _, fn in corpus]
    avg_f = [
        np.maximum(kernels.batch_box_sums(t.table64, los, his) * t.cellvol, 0.0) / vols
        for t in abs_tables
    ]
    # weighted p-mass tables for the denominators
    mass_tables = [
        SummedTable(np.abs(fn.values) ** params.p * w.values, w.h) for _, fn in corpus
    ]

    if realization == "lebesgue":
        w_masses = np.maximum(
            kernels.batch_box_sums(t_w.table64, los, his) * t_w.cellvol, 0.0
        )

    inv_p = 1.0 / params.p
    best = -np.inf
    best_q = -1
    best_f = ""
    skipped = 0
    scales = None
    if realization == "morrey":
        scales = t_w.cellvol * vols ** (-params.lam)
    for qi in range(len(batch)):
        if realization == "morrey":
            q_lo, q_hi = los[qi], his[qi]
            c_los = np.maximum(los, q_lo)
            c_his = np.minimum(his, q_hi)
            raw_w = kernels.batch_box_sums(t_w.table64, c_los, c_his)
            ind_q = float(np.max(np.maximum(raw_w * scales, 0.0))) ** inv_p
        else:
            ind_q = float(w_masses[qi]) ** inv_p
        if ind_q == 0.0:
            continue
        for fi, (name, _) in enumerate(corpus):
            num = avg_f[fi][qi] * ind_q
            if realization == "morrey":
                raw_m = kernels.batch_box_sums(mass_tables[fi].table64, c_los, c_his)
                denom = float(np.max(np.maximum(raw_m * scales, 0.0))) ** inv_p
            else:
                t = mass_tables[fi]
                denom = float(
                    max(t.box_sum(los[qi], his[qi], exact=False), 0.0)
                ) ** inv_p
            if denom == 0.0:
                if num > 0.0:
                    skipped += 1
                continue
            ratio = num / denom
            # ties break as in the norms: lexicographic center, side, name
            if ratio > best or (
                ratio == best
                and (tuple(batch.centers[qi]), batch.sides[qi], name)
                < (tuple(batch.centers[best_q]), batch.sides[best_q], best_f)
            ):
                best = ratio
                best_q = qi
                best_f = name
    if best_q < 0:
        raise ValueError("all corpus/cube pairs had zero denominators")
    return AxEstimate(float(best), batch.cube(best_q), best_f, skipped, len(batch))


def classify_power_weight(a: float, p: float, n: int) -> bool:
    """Expected family membership of the radial power weight ``|x|^a``.

    Returns True iff ``-n < a < n (p - 1)`` (boundaries excluded).  Used to
    label scan expectations; the scan itself verifies consistency between
    this label and the measured constant trends.
    """
    if p <= 1:
        raise ValueError("requires p > 1")
    return -n < a < n * (p - 1.0)
