"""End-to-end runs of every CLI subcommand against tmp output directories.

Each invocation goes through ``main(argv)`` in-process so the exit code,
the printed summary, and the written artifacts can all be asserted without
shelling out; one test checks the installed console script itself.
"""

import csv
import json
import shutil
import subprocess

import numpy as np
import pytest

from ckfield.cli import main


def run(*args, outdir):
    return main([*args, "--outdir", str(outdir)])


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# usage plumbing


def test_version_and_usage_errors(tmp_path):
    assert main(["--version"]) == 0
    assert main(["no-such-subcommand"]) == 2
    assert run("classify", outdir=tmp_path) == 2           # missing --ckf
    assert run("classify", "--ckf", "garbage", outdir=tmp_path) == 2
    assert run("spectrum-sweep", outdir=tmp_path) == 2     # missing --potential
    assert run("field-lines", "--ckf", "ro", outdir=tmp_path) == 2


def test_config_file_merge_and_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"ckf": "ro", "points": 30,
                               "outdir": str(tmp_path)}))
    assert main(["verify-identities", "--config", str(cfg)]) == 0
    man = _read_json(tmp_path / "verify-identities" / "manifest.json")
    assert man["ckf"] == "ro"
    assert man["points"] == 30

    assert main(["verify-identities", "--config", str(cfg),
                 "--points", "10"]) == 0
    man = _read_json(tmp_path / "verify-identities" / "manifest.json")
    assert man["points"] == "10"   # flag wins over the file value


def test_outdir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CKFIELD_OUTDIR", str(tmp_path / "envruns"))
    assert main(["classify", "--ckf", "ud"]) == 0
    assert (tmp_path / "envruns" / "classify" / "classify.json").exists()


# ---------------------------------------------------------------------------
# subcommands


def test_classify_canonical_fields(tmp_path):
    for arg, kind in (("ud", "Translation"), ("ro", "Rotation"),
                      ("cr:2", "Special")):
        assert run("classify", "--ckf", arg, outdir=tmp_path) == 0
        rec = _read_json(tmp_path / "classify" / "classify.json")
        assert rec["kind"] == kind
        assert rec["roundtrip_exact"] is True
    assert rec["nu"] == pytest.approx(2.0)
    assert rec["degenerate_zero_set"]["kind"] == "circle"


def test_classify_rejects_non_simple_field(tmp_path, capsys):
    iso = json.dumps({"a": [0, 0, 0.5], "b0": 0.0,
                      "b": [0, 0, 1], "c": [0, 0, 1]})
    assert run("classify", "--ckf", iso, outdir=tmp_path) == 1
    assert "not classifiable" in capsys.readouterr().out
    # same field by its short name
    assert run("classify", "--ckf", "iso", outdir=tmp_path) == 1
    assert "not classifiable" in capsys.readouterr().out


def test_verify_identities_cmd(tmp_path):
    assert run("verify-identities", "--ckf", "ro", "--points", "40",
               outdir=tmp_path) == 0
    header, rows = _read_csv(tmp_path / "verify-identities" / "identities.csv")
    assert header[0] == "identity"
    assert len(rows) == 20 * 40        # every identity at every point
    assert {r[-1] for r in rows} == {"True"}


def test_field_lines_closed_orbit(tmp_path):
    assert run("field-lines", "--ckf", "ro", "--seed-point", "0.9,0,0.2",
               outdir=tmp_path) == 0
    summ = _read_json(tmp_path / "field-lines" / "summary.json")
    assert summ["closed"] is True
    assert summ["period"] == pytest.approx(2.0 * np.pi, abs=1.0e-8)
    assert summ["max_plane_deviation"] < 1.0e-9
    with open(tmp_path / "field-lines" / "curve.jsonl") as fh:
        pts = [json.loads(line) for line in fh]
    assert len(pts) >= 2
    assert abs(np.hypot(*pts[0]["x"][:2]) - 0.9) < 1.0e-9


def test_field_lines_reports_blowup(tmp_path):
    assert run("field-lines", "--ckf", "cr:1", "--seed-point", "0,0,0.2",
               outdir=tmp_path) == 0
    summ = _read_json(tmp_path / "field-lines" / "summary.json")
    assert summ["blowup"] is True


def test_loop_integrals_cmd(tmp_path):
    assert run("loop-integrals", "--ckf", "ro", "--seed-point", "0.9,0,0.1",
               "--potential", "axial", outdir=tmp_path) == 0
    header, rows = _read_csv(tmp_path / "loop-integrals" / "loop_integrals.csv")
    assert [r[0] for r in rows] == ["div_integral", "absY_integral",
                                    "flux_integral"]
    assert {r[-1] for r in rows} == {"True"}


def test_verify_operators_cmd(tmp_path):
    assert run("verify-operators", "--ckf", "ro", "--potential", "axial",
               "--points", "15", outdir=tmp_path) == 0
    rep = _read_json(tmp_path / "verify-operators" / "report.json")
    assert rep["worst_commutator_residual"] < 1.0e-9
    _, rows = _read_csv(tmp_path / "verify-operators" / "commutators.csv")
    assert len(rows) == 15


def test_verify_operators_with_quadrature(tmp_path):
    # --box=... keeps argparse from reading the leading minus as a flag
    assert run("verify-operators", "--ckf", "ro", "--potential", "axial",
               "--points", "5", "--spinor", "bump:0.3,2.2,-0.9,0.9",
               "--quadrature", "64", "--box=-1.6,1.6,-1.6,1.6,-1,1",
               outdir=tmp_path) == 0
    rep = _read_json(tmp_path / "verify-operators" / "report.json")
    assert rep["norm_rel_err"] <= 1.0e-3
    assert rep["norm_pass"] is True


def test_holonomy_cmd(tmp_path):
    assert run("holonomy", "--ckf", "ro", "--potential", "axial",
               "--orbit-seed", "0.9,0,0.2", "--lambdas", "0.5,1.5",
               outdir=tmp_path) == 0
    rec = _read_json(tmp_path / "holonomy" / "holonomy.json")
    assert rec["offset"] == pytest.approx(0.5, abs=1.0e-9)
    assert rec["step"] == pytest.approx(1.0, abs=1.0e-9)
    assert rec["monodromy_defect_at_zero"] < 1.0e-9
    _, rows = _read_csv(tmp_path / "holonomy" / "transport.csv")
    assert len(rows) == 2
    assert all(float(r[-1]) < 1.0e-9 for r in rows)   # both lambdas admissible


def test_spectrum_sweep_cmd(tmp_path):
    assert run("spectrum-sweep", "--potential", "axial", "--grid", "8,3",
               "--ts", "0:1:0.5", outdir=tmp_path) == 0
    header, rows = _read_csv(tmp_path / "spectrum-sweep" / "sweep.csv")
    assert header == ["t", "sigma_min", "above_floor"]
    assert len(rows) == 3
    assert {r[-1] for r in rows} == {"True"}
    man = _read_json(tmp_path / "spectrum-sweep" / "manifest.json")
    assert man["sigma_floor"] == pytest.approx(0.5 * man["sigma_free"])


def test_control_losyau_cmd(tmp_path):
    assert run("control-losyau", "--grid", "12,2.5", "--ns", "8,12",
               "--points", "300", outdir=tmp_path) == 0
    rec = _read_json(tmp_path / "control-losyau" / "control.json")
    assert rec["continuum_residual"] <= 1.0e-10
    rs = [row["residual"] for row in rec["grid_residuals"]]
    assert rs[0] > rs[1]
    _, rows = _read_csv(tmp_path / "control-losyau" / "residuals.csv")
    assert len(rows) == 2


def test_field_eval_cmd(tmp_path):
    assert run("field-eval", "--potential", "hopfbase:1",
               "--at", "0,0,0;0.5,0.2,-0.3", outdir=tmp_path) == 0
    with open(tmp_path / "field-eval" / "values.jsonl") as fh:
        recs = [json.loads(line) for line in fh]
    assert len(recs) == 2
    # parent field of the potential is inferred when --ckf is omitted
    np.testing.assert_allclose(recs[0]["X"], [0.0, 0.0, 0.5], atol=1.0e-15)
    assert "A" in recs[0] and "B" in recs[0]
    assert run("field-eval", "--at", "1,0,0", outdir=tmp_path) == 2


# ---------------------------------------------------------------------------
# installed entry point


@pytest.mark.skipif(shutil.which("ckfield") is None,
                    reason="console script not on PATH")
def test_console_script_runs(tmp_path):
    out = subprocess.run(["ckfield", "classify", "--ckf", "ro",
                          "--outdir", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "kind=Rotation" in out.stdout
