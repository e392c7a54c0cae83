"""Window-doubling characterization scan.

For each catalog weight and each window scale the scan measures four
quantities: the family Muckenhoupt constant over a dyadic lattice, the
averaging-condition estimate on the Morrey space, and operator-norm
estimates for the full maximal operator on the Morrey space and for the
lattice-restricted dyadic operator on the weighted Lebesgue space.  Trends
across scales (stable vs growing under default thresholds) are then checked
for agreement between each constant and its paired operator estimate, an
empirical consistency probe, not a proof.

Trend classification runs on the p-th powers of the operator and estimator
columns so the thresholds compare like with like (the Muckenhoupt constant
already lives on that scale).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import CubeFamily, Truncation, build_shifted_lattices
from ..grid import GridFunction, sample_power_weight
from ..maximal import maximal_dyadic, maximal_exact, operator_norm_estimate, three_lattice_bound
from ..muckenhoupt import ap_constant, ax_constant_estimate, classify_power_weight
from ..norms import MorreyParams, NormSpec
from .report import Report

__all__ = ["ScanConfig", "default_weight_catalog", "scan_characterization", "build_corpus"]


@dataclass
class ScanConfig:
    """Scan parameters; the defaults match the acceptance run.

    ``ladder`` picks what doubles between scales: ``"refine"`` halves the
    resolution on the fixed window [-1, 1] (the singular cell sharpens),
    ``"window"`` doubles the window extent at fixed resolution (mass moves
    into the tails).  Both probe the same finite-vs-infinite supremum.
    """

    p: float = 2.0
    lam: float = 0.5
    n: int = 1
    base_cells: int = 8  # cells of the unit window [-1, 1]
    scales: int = 3  # number of doublings
    start_scale: int = 3  # first window is [-2^start, 2^start]
    ladder: str = "window"  # "window" | "refine"
    family_side_mode: str = "pow2"  # enumeration density of the Morrey family
    stability_threshold: float = 1.05
    growth_threshold: float = 1.2
    exact_cell_limit: int = 4096  # above this, the fast lattice bound stands in
    seed: int = 20240811


def default_weight_catalog(p: float = 2.0, n: int = 1):
    """Radial power weights with their expected in-range labels."""
    exponents = [-0.5, 0.0, 0.5, 1.5, 2.0]
    return [
        {"name": f"a={a:g}", "a": a, "expected_in_range": classify_power_weight(a, p, n)}
        for a in exponents
    ]


def build_corpus(w: GridFunction, p: float, seed: int, support_cells: int = None):
    """Deterministic test functions on w's grid, supported on the central
    ``support_cells`` window: indicators of nested cubes around the window
    center, dual-weight extremals on them, a ramp, and a seeded random field.

    Pinning the support while the window doubles probes boundedness the
    standard way: the operator moves fixed mass into the tails, where an
    admissible weight must not carry too much measure.
    """
    cells = w.shape[0]
    if support_cells is None:
        support_cells = cells
    support_cells = min(support_cells, cells)
    lo = (cells - support_cells) // 2
    hi = lo + support_cells
    rng = np.random.default_rng(seed)

    def pinned(values):
        out = np.zeros(w.shape)
        out[lo:hi] = values[lo:hi]
        return w.with_values(out)

    corpus = [("one", pinned(np.ones(cells)))]
    ramp = (np.arange(cells) + 0.5) / cells
    corpus.append(("ramp", pinned(ramp)))
    corpus.append(("noise", pinned(rng.uniform(0.0, 1.0, size=cells))))
    dual = w.values ** (-1.0 / (p - 1.0))
    for j in (0, 1, 2, 3):
        m = support_cells // 2 ** j
        lo_cell = lo + (support_cells - m) // 2
        mask = np.zeros(cells)
        mask[lo_cell : lo_cell + m] = 1.0
        corpus.append((f"chi{j}", w.with_values(mask)))
        corpus.append((f"dual{j}", w.with_values(dual * mask)))
    return corpus


def _classify(values, cfg: ScanConfig) -> str:
    ratios = [values[i + 1] / values[i] for i in range(len(values) - 1)]
    if ratios and ratios[-1] <= cfg.stability_threshold:
        return "stable"
    if ratios and all(r >= cfg.growth_threshold for r in ratios):
        return "growing"
    return "mixed"


def scan_characterization(
    params: MorreyParams = None, cfg: ScanConfig = None, catalog=None
) -> Report:
    """Run the window-doubling scan and return the report with its tables."""
    cfg = cfg or ScanConfig()
    params = params or MorreyParams(cfg.p, cfg.lam)
    if cfg.n != 1:
        raise ValueError("the scan is wired for n = 1")
    catalog = catalog if catalog is not None else default_weight_catalog(params.p, cfg.n)
    rep = Report(
        "scan",
        params={
            "p": params.p,
            "lam": params.lam,
            "n": cfg.n,
            "base_cells": cfg.base_cells,
            "scales": cfg.scales,
            "ladder": cfg.ladder,
            "family_side_mode": cfg.family_side_mode,
            "stability_threshold": cfg.stability_threshold,
            "growth_threshold": cfg.growth_threshold,
            "exact_cell_limit": cfg.exact_cell_limit,
        },
        seed=cfg.seed,
    )
    h = 2.0 / cfg.base_cells
    max_cells = cfg.base_cells * 2 ** (cfg.start_scale + cfg.scales - 1)
    use_exact = max_cells <= cfg.exact_cell_limit
    rep.quantities["maximal_method"] = "exact" if use_exact else "three_lattice_bound"

    rows = []
    trend_rows = []
    for entry in catalog:
        name, a = entry["name"], entry["a"]
        expected = entry["expected_in_range"]
        try:
            ap_vals, ax_vals, op_m_vals, op_f_vals = [], [], [], []
            for step in range(cfg.scales):
                s = cfg.start_scale + step
                cells = cfg.base_cells * 2 ** s
                if cfg.ladder == "window":
                    corner = [-(2.0 ** s)]
                    hs = h
                    support = cfg.base_cells
                elif cfg.ladder == "refine":
                    corner = [-1.0]
                    hs = h / 2 ** s
                    support = cells
                else:
                    raise ValueError(f"unknown ladder {cfg.ladder!r}")
                w = sample_power_weight(a, [0.0], corner, [cells], hs)
                fam_pow2 = CubeFamily.all_cubes(Truncation(side_mode=cfg.family_side_mode))
                lattice = build_shifted_lattices(1, corner, [cells], hs)[0]
                fam_dyadic = CubeFamily.dyadic_restricted(lattice)
                corpus = build_corpus(
                    w, params.p, cfg.seed + 1000 * s, support_cells=support
                )

                ap = ap_constant(w, params.p, fam_dyadic).constant
                ax = ax_constant_estimate(w, params, fam_pow2, corpus).value
                if use_exact:
                    op = lambda g: maximal_exact(g, CubeFamily.all_cubes())
                else:
                    lats = build_shifted_lattices(1, corner, [cells], hs)
                    op = lambda g: three_lattice_bound(g, lats)
                spec_m = NormSpec.morrey(w, params, fam_pow2)
                op_m = operator_norm_estimate(op, spec_m, corpus).value
                op_dy = lambda g: maximal_dyadic(g, lattice)
                spec_f = NormSpec.lebesgue(w, params.p)
                op_f = operator_norm_estimate(op_dy, spec_f, corpus).value

                ap_vals.append(ap)
                ax_vals.append(ax)
                op_m_vals.append(op_m)
                op_f_vals.append(op_f)
                rows.append(
                    {
                        "weight": name,
                        "a": a,
                        "expected_in_range": expected,
                        "scale": s,
                        "window": cells * hs,
                        "h": hs,
                        "cells": cells,
                        "ap_constant": ap,
                        "ax_estimate": ax,
                        "opnorm_morrey": op_m,
                        "opnorm_lebesgue": op_f,
                    }
                )
            # p-th powers put all columns on the Muckenhoupt-constant scale
            pw = params.p
            t_ap = _classify(ap_vals, cfg)
            t_ax = _classify([v ** pw for v in ax_vals], cfg)
            t_om = _classify([v ** pw for v in op_m_vals], cfg)
            t_of = _classify([v ** pw for v in op_f_vals], cfg)
            lebesgue_ok = t_ap == t_of
            morrey_ok = t_ax == t_om
            trend_rows.append(
                {
                    "weight": name,
                    "a": a,
                    "expected_in_range": expected,
                    "trend_ap": t_ap,
                    "trend_ax": t_ax,
                    "trend_opnorm_morrey": t_om,
                    "trend_opnorm_lebesgue": t_of,
                    "consistent_lebesgue": lebesgue_ok,
                    "consistent_morrey": morrey_ok,
                }
            )
            rep.check(
                f"consistency[{name}]",
                lebesgue_ok and morrey_ok,
                note=f"ap={t_ap} opF={t_of} ax={t_ax} opM={t_om}",
            )
            rep.check(
                f"ap_trend_matches_label[{name}]",
                (t_ap == "stable") == bool(expected),
                note=f"expected {'in' if expected else 'out of'} range, trend {t_ap}",
            )
        except Exception as exc:  # isolate per-weight failures, scan continues
            rep.check(f"consistency[{name}]", False, note=f"error: {exc}")
    rep.tables["constants"] = rows
    rep.tables["trends"] = trend_rows
    return rep
