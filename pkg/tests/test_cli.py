import csv
import json
import subprocess
import sys

import pytest

from wunschlab.cli import DEFAULTS, emit_report, main, run, validate
from wunschlab.errors import ConfigError


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return p


def _read_all(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def _manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_validate_merges_defaults():
    r = validate({"schema_version": 1, "subcommand": "blowup", "N": 128})
    assert r["N"] == 128 and r["dt"] == DEFAULTS["blowup"]["dt"] and r["seed"] == 0
    assert r["initial_modes"] == [[1, 1.0, r["initial_modes"][0][2]]]


@pytest.mark.parametrize("cfg", [
    {"schema_version": 1, "subcommand": "blowup", "bogus": 1},
    {"schema_version": 2, "subcommand": "blowup"},
    {"schema_version": 1, "subcommand": "nope"},
    {"schema_version": 1, "subcommand": "simulate", "dt": -1},
    {"schema_version": 1, "subcommand": "simulate", "kind": "homogeneous_s"},
    [1, 2],
])
def test_validate_rejects(cfg):
    with pytest.raises(ConfigError):
        validate(cfg)


def test_malformed_json_exits_2_without_files(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(_write(tmp_path, "{not json")), "--out", str(out)]) == 2
    assert not out.exists()
    bad = _write(tmp_path, {"schema_version": 1, "subcommand": "blowup", "extra": 0}, "b.json")
    assert main(["--config", str(bad), "--out", str(out)]) == 2
    assert not out.exists()


def test_runtime_config_error_exits_2(tmp_path):
    out = tmp_path / "o"
    cfg = {"schema_version": 1, "subcommand": "conjugate", "N": 64, "T": 1.0}
    assert run(cfg, out) == 2 and not out.exists()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_exits_1(tmp_path):
    cfg = {"schema_version": 1, "subcommand": "simulate", "N": 32, "dt": 0.01, "T": 0.1,
           "initial": [[1, 1e308, 0.0], [2, 1e308, 0.0]]}
    assert run(cfg, tmp_path / "o") == 1


def test_blowup_preset(tmp_path):
    out = tmp_path / "o"
    cfg = {"schema_version": 1, "subcommand": "blowup", "N": 256, "dt": 2e-3, "record_stride": 5}
    assert main(["--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == 0
    m = _manifest(out)
    assert m["summary"]["status"] == "blowup"
    assert m["summary"]["T_star"][1] < 1.0
    assert m["config"]["N"] == 256 and m["seed"] == 0
    for name in ("blowup_report.json", "trajectory.json", "min_eta_x.csv", "bkm_ux.csv"):
        assert name in m["files"] and (out / name).exists()


def test_curvature_scan_has_negative(tmp_path):
    out = tmp_path / "o"
    assert run({"schema_version": 1, "subcommand": "curvature"}, out) == 0
    rows = list(csv.DictReader((out / "curvature_scan.csv").open()))
    same = [r for r in rows if r["pair"] == "sin_cos_same" and r["m"] == "1"]
    assert len(same) == 1 and float(same[0]["K_numeric"]) < 0
    assert _manifest(out)["summary"]["census"]["negative"] >= 1
    ratios = {float(r["ratio"]) for r in rows if r["ratio"]}
    assert all(abs(x - 1.0) <= 1e-8 for x in ratios)


def test_same_config_same_bytes(tmp_path):
    cfg = {"schema_version": 1, "subcommand": "inequality", "trials": 5, "seed": 17}
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(cfg, a) == 0 and run(cfg, b, threads=3) == 0
    assert _read_all(a) == _read_all(b)
    c = tmp_path / "c"
    run({**cfg, "seed": 18}, c)
    assert _read_all(c)["inequality.json"] != _read_all(a)["inequality.json"]


def test_simulate_determinism_and_files(tmp_path):
    cfg = {"schema_version": 1, "subcommand": "simulate", "N": 32, "dt": 0.01, "T": 0.1,
           "record_stride": 2}
    a, b = tmp_path / "a", tmp_path / "b"
    run(cfg, a)
    run(cfg, b)
    assert _read_all(a) == _read_all(b)
    assert "conservation_residual.csv" in _manifest(a)["files"]


def test_seed_override(tmp_path):
    p = _write(tmp_path, {"schema_version": 1, "subcommand": "identities", "trials": 2, "N": 32,
                          "kmax": 8})
    out = tmp_path / "o"
    assert main(["--config", str(p), "--out", str(out), "--seed", "99"]) == 0
    assert _manifest(out)["seed"] == 99


def test_subcommand_override(tmp_path):
    p = _write(tmp_path, {"schema_version": 1, "subcommand": "blowup"})
    out = tmp_path / "o"
    assert main(["--config", str(p), "--out", str(out), "--subcommand", "curvature"]) == 0
    assert _manifest(out)["config"]["subcommand"] == "curvature"


def test_conjugate_rows(tmp_path):
    cfg = {"schema_version": 1, "subcommand": "conjugate", "N": 256, "eps": [0.1]}
    out = tmp_path / "o"
    assert run(cfg, out, threads=2) == 0
    rows = list(csv.DictReader((out / "conjugate_scan.csv").open()))
    assert [r["b"] for r in rows] == ["4.5", "2.0"]
    assert {"x0", "a", "b", "lhs", "threshold", "criterion_satisfied", "index_form"} <= set(rows[0])
    assert rows[0]["criterion_satisfied"] == "true" and rows[1]["criterion_satisfied"] == "false"


def test_empty_results_write_manifest_only(tmp_path):
    names = emit_report(tmp_path / "o", {"seed": 0}, {}, {})
    assert names == [] and [p.name for p in (tmp_path / "o").iterdir()] == ["manifest.json"]


def test_console_entry_point(tmp_path):
    p = _write(tmp_path, {"schema_version": 1, "subcommand": "identities", "trials": 1, "N": 32,
                          "kmax": 4})
    r = subprocess.run([sys.executable, "-m", "wunschlab.cli", "--config", str(p), "--out",
                        str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
