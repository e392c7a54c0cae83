"""CLI: subcommand round-trips, exit codes, byte-identical reports."""

import json

from click.testing import CliRunner

from morreylab.lab.cli import main


def write_config(tmp_path, body, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


NORM_CFG = """
seed = 1
[grid]
kind = "constant"
value = 1.0
corner = [0.0]
cells = [64]
h = 0.015625
[params]
p = 2.0
lam = 0.5
[expect]
value = 1.0
rtol = 1e-12
"""

REDW_CFG = """
seed = 7
name = "redw"
[grid]
kind = "constant"
value = 1.0
corner = [-1.0, -1.0]
cells = [32, 32]
h = 0.0625
[redw]
N = 1
cube_center = [0.0, 0.0]
cube_side = 1.0
"""


def run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def test_norm_unit_case(tmp_path):
    cfg = write_config(tmp_path, NORM_CFG)
    res = run(["norm", cfg, "--outdir", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "out" / "norm.json").read_text())
    assert report["quantities"]["value"] == 1.0
    assert report["passed"] is True
    assert report["schema"].startswith("morreylab.report/")


def test_redw_count_12(tmp_path):
    cfg = write_config(tmp_path, REDW_CFG)
    res = run(["verify-redw", cfg, "--outdir", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "out" / "redw.json").read_text())
    assert report["quantities"]["count_formula"] == 12
    assert report["passed"] is True
    assert (tmp_path / "out" / "redw.levels.csv").exists()


def test_byte_identical_reports(tmp_path):
    cfg = write_config(tmp_path, REDW_CFG)
    run(["verify-redw", cfg, "--outdir", str(tmp_path / "a")])
    run(["verify-redw", cfg, "--outdir", str(tmp_path / "b")])
    for name in ("redw.json", "redw.levels.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_malformed_config_exit_2(tmp_path):
    cfg = write_config(tmp_path, "this is [not toml")
    res = run(["norm", cfg])
    assert res.exit_code == 2


def test_missing_config_exit_2(tmp_path):
    res = run(["norm", str(tmp_path / "absent.toml")])
    assert res.exit_code == 2


def test_expectation_failure_exit_3(tmp_path):
    cfg = write_config(tmp_path, NORM_CFG.replace("value = 1.0\nrtol", "value = 0.5\nrtol"))
    res = run(["norm", cfg, "--outdir", str(tmp_path / "out")])
    assert res.exit_code == 3


def test_report_dir_env_override(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, NORM_CFG)
    monkeypatch.setenv("MORREYLAB_REPORT_DIR", str(tmp_path / "envdir"))
    res = run(["norm", cfg, "--outdir", str(tmp_path / "ignored")])
    assert res.exit_code == 0
    assert (tmp_path / "envdir" / "norm.json").exists()
    assert not (tmp_path / "ignored" / "norm.json").exists()


def test_kp_subcommand(tmp_path):
    cfg = write_config(
        tmp_path,
        """
seed = 5
[kp]
nu = 2.0
jmin = -3
jmax = 3
samples = 200
""",
    )
    res = run(["verify-kp", cfg, "--outdir", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "out" / "verify-kp.json").read_text())
    assert report["quantities"]["violations"] == 0


def test_eqst_subcommand(tmp_path):
    cfg = write_config(
        tmp_path,
        """
seed = 2
[grid]
kind = "random"
seed = 9
low = 0.0
high = 2.0
corner = [-1.0]
cells = [64]
h = 0.03125
[eqst]
r1 = 0.5
r2 = 2.0
omega = [[0.0]]
""",
    )
    res = run(["verify-eqst", cfg, "--outdir", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output


def test_connect_subcommand(tmp_path):
    cfg = write_config(
        tmp_path,
        """
seed = 2
[grid]
kind = "random"
seed = 4
low = 0.0
high = 1.0
corner = [-8.0]
cells = [64]
h = 0.25
[connect]
nu = 2.0
jmin = -3
jmax = 3
""",
    )
    res = run(["verify-connect", cfg, "--outdir", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output


def test_ap_and_ax_subcommands(tmp_path):
    base = """
seed = 2
[grid]
corner = [-1.0]
cells = [32]
h = 0.0625
[weight]
kind = "power"
a = 0.5
[params]
p = 2.0
lam = 0.5
[family]
side_mode = "pow2"
"""
    cfg = write_config(tmp_path, base)
    res = run(["ap-constant", cfg, "--outdir", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "out" / "ap-constant.json").read_text())
    assert report["quantities"]["value"] >= 1.0
    res = run(["ax-estimate", cfg, "--outdir", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output


def test_maximal_subcommand_exports_field(tmp_path):
    cfg = write_config(
        tmp_path,
        """
[grid]
kind = "indicator"
corner = [0.0]
cells = [32]
h = 0.0625
cube_center = [0.5]
cube_side = 1.0
[maximal]
operator = "three-lattice"
""",
    )
    res = run(["maximal", cfg, "--outdir", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    from morreylab import load_grid_binary

    field = load_grid_binary(tmp_path / "out" / "maximal.field.bin")
    assert field.shape == (32,)
    assert field.values.max() > 0


def test_lattices_subcommand(tmp_path):
    cfg = write_config(
        tmp_path,
        """
[grid]
corner = [0.0]
cells = [64]
h = 0.015625
""",
    )
    res = run(["lattices", cfg, "--outdir", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "out" / "lattices.json").read_text())
    assert report["quantities"]["count"] == 3
    assert report["quantities"]["max_containment_ratio"] <= 6.0


def test_scan_subcommand_small(tmp_path):
    cfg = write_config(
        tmp_path,
        """
seed = 20240811
[scan]
base_cells = 8
scales = 2
start_scale = 1
""",
    )
    res = run(["scan", cfg, "--outdir", str(tmp_path / "out")])
    report = json.loads((tmp_path / "out" / "scan.json").read_text())
    assert (tmp_path / "out" / "scan.constants.csv").exists()
    assert (tmp_path / "out" / "scan.trends.csv").exists()
    assert len(report["checks"]) == 10  # five weights, two checks each
