"""Command-line interface: every experiment reads one TOML config and writes
a JSON report plus CSV tables.

Exit codes: 0 all checks passed, 2 bad config or usage, 3 one or more
checks or expectation tolerances failed.  Identical config and seed produce
byte-identical report files; the report directory can be overridden with
the ``MORREYLAB_REPORT_DIR`` environment variable.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - py310 path
    import tomli as tomllib

from ..geometry import (
    Cube,
    CubeFamily,
    PointSet,
    Truncation,
    build_shifted_lattices,
    covering_cube,
    generate_lacunary_1d,
)
from ..grid import (
    GridFunction,
    load_grid_binary,
    load_grid_csv,
    sample_power_weight,
    save_grid_binary,
)
from ..maximal import maximal_dyadic, maximal_exact, three_lattice_bound
from ..muckenhoupt import ap_constant, ax_constant_estimate
from ..norms import MorreyParams, morrey_norm
from .report import Report, StageTimer
from .scan import ScanConfig, build_corpus, scan_characterization
from .verify import (
    verify_annulus_reduction,
    verify_family_equivalence,
    verify_nearest_center_property,
    verify_scale_equivalence,
)

EXIT_CONFIG = 2
EXIT_CHECK = 3


def _fail_config(msg: str):
    click.echo(f"config error: {msg}", err=True)
    sys.exit(EXIT_CONFIG)


def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        _fail_config(f"no such config file: {path}")
    except tomllib.TOMLDecodeError as exc:
        _fail_config(f"malformed TOML in {path}: {exc}")


def _build_grid(section: dict, fallback_grid: dict = None) -> GridFunction:
    kind = section.get("kind", "constant")
    if kind == "file":
        path = section["path"]
        if path.endswith(".csv"):
            return load_grid_csv(path)
        return load_grid_binary(path)
    # the fallback grid supplies geometry only, never values
    geom = {
        k: v for k, v in (fallback_grid or {}).items() if k in ("corner", "cells", "h")
    }
    geom.update(section)
    try:
        corner = list(geom["corner"])
        cells = list(geom["cells"])
        h = float(geom["h"])
    except KeyError as exc:
        _fail_config(f"grid section missing {exc}")
    if kind == "constant":
        return GridFunction.constant(geom.get("value", 1.0), corner, cells, h)
    if kind == "ramp":
        f = GridFunction.constant(0.0, corner, cells, h)
        mesh = f.centers_mesh()
        f.values[...] = sum(mesh) - sum(corner)
        return f
    if kind == "random":
        rng = np.random.default_rng(int(geom.get("seed", 0)))
        lo, hi = geom.get("low", 0.0), geom.get("high", 1.0)
        return GridFunction(corner, h, rng.uniform(lo, hi, size=tuple(cells)))
    if kind == "indicator":
        ones = GridFunction.constant(1.0, corner, cells, h)
        cube = Cube(tuple(geom["cube_center"]), float(geom["cube_side"]))
        return ones.masked(cube)
    if kind == "power":
        return sample_power_weight(
            float(geom.get("a", 0.0)), geom.get("center", [0.0] * len(corner)), corner, cells, h
        )
    _fail_config(f"unknown grid kind {kind!r}")


def _build_family(section: dict, config: dict) -> CubeFamily:
    kind = section.get("kind", "all_cubes")
    trunc = Truncation(
        min_side=section.get("min_side"),
        max_side=section.get("max_side"),
        side_mode=section.get("side_mode", "all"),
    )
    if kind == "all_cubes":
        return CubeFamily.all_cubes(trunc)
    if kind == "whitney":
        pts = PointSet(section["points"])
        return CubeFamily.whitney(pts, float(section["r1"]), float(section["r2"]), trunc)
    if kind == "centered_at":
        return CubeFamily.centered_at(PointSet(section["points"]), trunc)
    if kind == "dyadic":
        gcfg = config.get("grid", {})
        lats = build_shifted_lattices(
            len(gcfg["corner"]), gcfg["corner"], gcfg["cells"], float(gcfg["h"])
        )
        return CubeFamily.dyadic_restricted(lats[int(section.get("shift", 0))], None, trunc)
    _fail_config(f"unknown family kind {kind!r}")


def _params(config: dict) -> MorreyParams:
    sec = config.get("params", {})
    return MorreyParams(float(sec.get("p", 2.0)), float(sec.get("lam", 0.5)))


def _outdir(config: dict, flag: str = None) -> str:
    return os.environ.get(
        "MORREYLAB_REPORT_DIR", flag or config.get("outdir", ".")
    )


def _finish(report: Report, config: dict, flag_outdir: str, default_name: str):
    """Apply [expect], write files, echo summary, exit accordingly."""
    expect = config.get("expect")
    if expect is not None:
        want = float(expect["value"])
        rtol = float(expect.get("rtol", 1e-12))
        got = report.quantities.get("value")
        ok = got is not None and abs(got - want) <= rtol * max(abs(want), 1e-300)
        report.check("expected_value", ok, value=got, tolerance=rtol, reference=want)
    name = config.get("name", default_name)
    paths = report.write(_outdir(config, flag_outdir), name)
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        detail = "" if c.value is None else f" value={c.value!r} reference={c.reference!r}"
        click.echo(f"[{status}] {c.name}{detail}")
    click.echo(f"report: {paths[0]}")
    if not report.passed:
        sys.exit(EXIT_CHECK)


def _config_arg(fn):
    return click.argument("config_path", type=click.Path(), metavar="CONFIG.toml")(fn)


def _outdir_opt(fn):
    return click.option("--outdir", default=None, help="Report directory")(fn)


@click.group()
def main():
    """Numerical laboratory for weighted Morrey spaces."""


@main.command()
@_config_arg
@_outdir_opt
def norm(config_path, outdir):
    """Morrey norm of a grid function over a cube family."""
    config = _load_config(config_path)
    f = _build_grid(config.get("grid", {}))
    w = _build_grid(config.get("weight", {"kind": "constant"}), config.get("grid", {}))
    params = _params(config)
    family = _build_family(config.get("family", {}), config)
    with StageTimer("norm"):
        res = morrey_norm(f, w, params, family)
    rep = Report("norm", params={"p": params.p, "lam": params.lam}, seed=config.get("seed"))
    rep.quantities["value"] = res.value
    rep.quantities["argmax_cube"] = res.argmax_cube.to_dict()
    rep.quantities["cubes_examined"] = res.cubes_examined
    _finish(rep, config, outdir, "norm")


@main.command()
@_config_arg
@_outdir_opt
def maximal(config_path, outdir):
    """Maximal field (exact, dyadic, or the 3^n-lattice bound); exports the field."""
    config = _load_config(config_path)
    f = _build_grid(config.get("grid", {}))
    sec = config.get("maximal", {})
    operator = sec.get("operator", "exact")
    with StageTimer(f"maximal[{operator}]"):
        if operator == "exact":
            field = maximal_exact(f, _build_family(config.get("family", {}), config))
        elif operator == "dyadic":
            lats = build_shifted_lattices(f.n, f.corner, f.shape, f.h)
            field = maximal_dyadic(f, lats[int(sec.get("shift", 0))])
        elif operator == "three-lattice":
            lats = build_shifted_lattices(f.n, f.corner, f.shape, f.h)
            field = three_lattice_bound(f, lats)
        else:
            _fail_config(f"unknown operator {operator!r}")
    rep = Report("maximal", params={"operator": operator}, seed=config.get("seed"))
    rep.quantities["value"] = float(np.max(field.values))
    rep.quantities["min"] = float(np.min(field.values))
    rep.quantities["provenance"] = field.provenance
    name = config.get("name", "maximal")
    out = _outdir(config, outdir)
    os.makedirs(out, exist_ok=True)
    save_grid_binary(field.field, os.path.join(out, f"{name}.field.bin"))
    _finish(rep, config, outdir, "maximal")


@main.command("ap-constant")
@_config_arg
@_outdir_opt
def ap_cmd(config_path, outdir):
    """Family Muckenhoupt constant of a weight."""
    config = _load_config(config_path)
    w = _build_grid(config.get("weight", {}), config.get("grid", {}))
    params = _params(config)
    family = _build_family(config.get("family", {}), config)
    with StageTimer("ap-constant"):
        rep_ap = ap_constant(w, params.p, family)
    rep = Report("ap-constant", params={"p": params.p}, seed=config.get("seed"))
    rep.quantities["value"] = rep_ap.constant
    rep.quantities["argmax_cube"] = rep_ap.argmax_cube.to_dict()
    rep.quantities["cubes_examined"] = rep_ap.cubes_examined
    _finish(rep, config, outdir, "ap-constant")


@main.command("ax-estimate")
@_config_arg
@_outdir_opt
def ax_cmd(config_path, outdir):
    """Averaging-condition constant estimate (lower bound) on the Morrey space."""
    config = _load_config(config_path)
    w = _build_grid(config.get("weight", {}), config.get("grid", {}))
    params = _params(config)
    family = _build_family(config.get("family", {}), config)
    sec = config.get("ax", {})
    corpus = build_corpus(w, params.p, int(config.get("seed", 0)))
    with StageTimer("ax-estimate"):
        est = ax_constant_estimate(
            w, params, family, corpus, realization=sec.get("realization", "morrey")
        )
    rep = Report(
        "ax-estimate",
        params={"p": params.p, "lam": params.lam, "realization": sec.get("realization", "morrey")},
        seed=config.get("seed"),
    )
    rep.quantities["value"] = est.value
    rep.quantities["argmax_cube"] = est.argmax_cube.to_dict()
    rep.quantities["argmax_function"] = est.argmax_function
    rep.quantities["skipped_zero_denominators"] = est.skipped_zero_denominators
    _finish(rep, config, outdir, "ax-estimate")


@main.command("verify-eqst")
@_config_arg
@_outdir_opt
def eqst_cmd(config_path, outdir):
    """Scale-change equivalence checks for distance-pinched families."""
    config = _load_config(config_path)
    sec = config.get("eqst", {})
    f = _build_grid(config.get("grid", {}))
    w = _build_grid(config.get("weight", {"kind": "constant"}), config.get("grid", {}))
    params = _params(config)
    omega = PointSet(sec.get("omega", [[0.0] * f.n]))
    with StageTimer("verify-eqst"):
        rep = verify_scale_equivalence(
            f, w, params, omega, float(sec.get("r1", 0.5)), float(sec.get("r2", 2.0))
        )
    rep.seed = config.get("seed")
    _finish(rep, config, outdir, "verify-eqst")


@main.command("verify-redw")
@_config_arg
@_outdir_opt
def redw_cmd(config_path, outdir):
    """Annulus tiling and truncated series domination for one cube."""
    config = _load_config(config_path)
    sec = config.get("redw", {})
    f = _build_grid(config.get("grid", {}))
    w = _build_grid(config.get("weight", {"kind": "constant"}), config.get("grid", {}))
    params = _params(config)
    center = sec.get("cube_center", [0.0] * f.n)
    side = float(sec.get("cube_side", 1.0))
    with StageTimer("verify-redw"):
        rep = verify_annulus_reduction(
            Cube(tuple(center), side), int(sec.get("N", 1)), f, w, params
        )
    rep.seed = config.get("seed")
    _finish(rep, config, outdir, "verify-redw")


@main.command("verify-kp")
@_config_arg
@_outdir_opt
def kp_cmd(config_path, outdir):
    """Exact nearest-center distance equality on random sub-cubes."""
    config = _load_config(config_path)
    sec = config.get("kp", {})
    nu = float(sec.get("nu", 2.0))
    pts = generate_lacunary_1d(nu, int(sec.get("jmin", -4)), int(sec.get("jmax", 4)))
    with StageTimer("verify-kp"):
        rep = verify_nearest_center_property(
            pts, nu, samples=int(sec.get("samples", 1000)), seed=int(config.get("seed", 0))
        )
    _finish(rep, config, outdir, "verify-kp")


@main.command("verify-connect")
@_config_arg
@_outdir_opt
def connect_cmd(config_path, outdir):
    """Centered-family vs distance-pinched family norm comparison."""
    config = _load_config(config_path)
    sec = config.get("connect", {})
    f = _build_grid(config.get("grid", {}))
    w = _build_grid(config.get("weight", {"kind": "constant"}), config.get("grid", {}))
    params = _params(config)
    nu = float(sec.get("nu", 2.0))
    pts = generate_lacunary_1d(nu, int(sec.get("jmin", -4)), int(sec.get("jmax", 4)))
    with StageTimer("verify-connect"):
        rep = verify_family_equivalence(f, w, params, pts, nu)
    rep.seed = config.get("seed")
    _finish(rep, config, outdir, "verify-connect")


@main.command()
@_config_arg
@_outdir_opt
def scan(config_path, outdir):
    """Window-doubling characterization scan over the weight catalog."""
    config = _load_config(config_path)
    sec = config.get("scan", {})
    cfg = ScanConfig(
        p=float(sec.get("p", 2.0)),
        lam=float(sec.get("lam", 0.5)),
        base_cells=int(sec.get("base_cells", 8)),
        scales=int(sec.get("scales", 3)),
        start_scale=int(sec.get("start_scale", 3)),
        ladder=sec.get("ladder", "window"),
        family_side_mode=sec.get("family_side_mode", "pow2"),
        stability_threshold=float(sec.get("stability_threshold", 1.05)),
        growth_threshold=float(sec.get("growth_threshold", 1.2)),
        exact_cell_limit=int(sec.get("exact_cell_limit", 4096)),
        seed=int(config.get("seed", 20240811)),
    )
    with StageTimer("scan"):
        rep = scan_characterization(MorreyParams(cfg.p, cfg.lam), cfg)
    _finish(rep, config, outdir, "scan")


@main.command()
@_config_arg
@_outdir_opt
def lattices(config_path, outdir):
    """Build the 3^n shifted lattices and check tiling and containment."""
    config = _load_config(config_path)
    sec = config.get("lattices", {})
    gcfg = config.get("grid", {})
    corner = gcfg.get("corner", [0.0])
    cells = gcfg.get("cells", [64])
    h = float(gcfg.get("h", 1.0 / max(cells)))
    n = len(corner)
    with StageTimer("lattices"):
        lats = build_shifted_lattices(n, corner, cells, h)
        rep = Report("lattices", params={"n": n, "cells": cells, "h": h}, seed=config.get("seed"))
        rep.quantities["count"] = len(lats)
        rep.check("count", len(lats) == 3 ** n, value=len(lats), reference=3 ** n)
        max_ratio = 0.0
        worst = None
        limit = int(sec.get("exhaustive_limit", 64))
        if max(cells) <= limit and n <= 2:
            for m in range(1, min(cells) + 1):
                ranges = [range(0, c - m + 1) for c in cells]
                import itertools

                for pos in itertools.product(*ranges):
                    center = tuple(corner[i] + (pos[i] + m / 2.0) * h for i in range(n))
                    q = Cube(center, m * h)
                    _, cover, ratio = covering_cube(lats, q)
                    if ratio > max_ratio:
                        max_ratio = ratio
                        worst = q.to_dict()
            rep.quantities["max_containment_ratio"] = max_ratio
            if worst is not None:
                rep.quantities["worst_cube"] = worst
            rep.check("containment_ratio", max_ratio <= 6.0, value=max_ratio, reference=6.0)
        else:
            rep.check("containment_ratio", True, note="grid above exhaustive limit: skipped")
    _finish(rep, config, outdir, "lattices")


if __name__ == "__main__":  # pragma: no cover
    main()
