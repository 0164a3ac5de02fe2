import json
import subprocess
import sys

import numpy as np
import pytest

from zcf.cli import main, parse_complex, parse_matrix

SOLITON = {"kind": "gbdt-soliton", "A1": [["0.4+0.5j"]], "Pi1": [[1.0, 1.0]]}


def write(tmp_path, name, cfg):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    return path


def run(tmp_path, command, cfg, out="out", extra=()):
    cfg_path = write(tmp_path, command, cfg)
    code = main([command, "--config", str(cfg_path), "--out", str(tmp_path / out), *extra])
    report = json.loads((tmp_path / out / f"{command}_report.json").read_text())
    return code, report


def test_parsers():
    assert parse_complex("1-2i") == 1 - 2j
    assert parse_complex([0.5, -1]) == 0.5 - 1j
    assert parse_matrix([[1, "2j"], [[0, 1], 3]]).shape == (2, 2)
    assert parse_matrix([1, 1]).shape == (1, 2)


def test_factor_check_exit_codes(tmp_path):
    ok = {"potential": SOLITON, "domain": {"b1": 2.0, "b2": 1.0},
          "z_samples": ["-1.5j", "0.5-1.3j"], "points": [[1.0, 0.5]]}
    code, report = run(tmp_path, "factor-check", ok)
    assert code == 0 and report["passed"]
    bad = {"potential": {"kind": "xt", "c": 1.0}, "domain": {"b1": 2.0, "b2": 1.0},
           "z_samples": ["-2.5j"], "points": [[1.0, 0.5]]}
    code, report = run(tmp_path, "factor-check", bad, out="bad")
    assert code == 2 and report["failures"]
    code, report = run(tmp_path, "factor-check", {"domain": {}}, out="cfg")
    assert code == 3 and "error" in report


def test_weyl_evolve_exit_codes(tmp_path):
    cfg = {"potential": SOLITON, "domain": {"b2": 1.0}, "z_samples": ["1-2.5j", "-2j"], "T": 0.4}
    code, report = run(tmp_path, "weyl-evolve", cfg)
    assert code == 0 and report["checks"]["weyl_gap"]["max"] < 1e-4
    # Im z >= -M is a configuration error
    cfg["z_samples"] = ["-0.5j"]
    code, report = run(tmp_path, "weyl-evolve", cfg, out="cfg")
    assert code == 3 and "-M" in report["error"]


def test_invert_exit_codes(tmp_path):
    cfg = {"potential": SOLITON, "domain": {"b1": 2.0, "b2": 1.0}, "inversion": {"l": 1.0, "N": 80}}
    code, report = run(tmp_path, "invert", cfg)
    assert code == 0 and report["checks"]["inversion_sup_error"]["max"] < 1e-2
    rows = (tmp_path / "out" / "invert.csv").read_text().splitlines()
    assert rows[0].startswith("x,t,") and len(rows) == 82
    cfg["inversion"]["eta"] = -1.0
    code, _ = run(tmp_path, "invert", cfg, out="eta")
    assert code == 3


def test_invert_tabulated_weyl(tmp_path, soliton):
    from zcf.gbdt import darboux_weyl_function
    phi = darboux_weyl_function(soliton[1], 0.0)
    xi = np.linspace(-200, 200, 8001)
    z = xi / 2 - 1.5j
    vals = phi(z)[:, 0, 0]
    table = np.column_stack([z.real, z.imag, vals.real, vals.imag])
    np.savetxt(tmp_path / "phi.csv", table, delimiter=",", header="re_z,im_z,re_phi,im_phi",
               comments="")
    cfg = {"potential": SOLITON, "domain": {"b1": 2.0, "b2": 1.0},
           "inversion": {"l": 1.0, "N": 80, "phi_source": "file", "phi_file": "phi.csv"}}
    code, report = run(tmp_path, "invert", cfg)
    assert code == 0, report


def test_gbdt_exit_codes_and_ds_location(tmp_path):
    cfg = {"potential": SOLITON, "domain": {"b1": 2.0, "b2": 1.0},
           "z_samples": ["-1.5j"], "points": [[1.0, 0.5]]}
    code, report = run(tmp_path, "gbdt", cfg)
    assert code == 0, report
    assert (tmp_path / "out" / "gbdt_soliton.csv").exists()
    ds = {"potential": {"kind": "gbdt-soliton", "reduction": "general", "A1": [[1.0]],
                        "A2": [[0.0]], "Pi1": [[1.0, 1.0]], "Pi2": [[1.0, 1.0]]},
          "domain": {"b1": np.pi, "b2": 1.0, "nx": 21}}
    code, report = run(tmp_path, "gbdt", ds, out="ds")
    assert code == 2
    # S(x, 0) = 2 cos x for this node, so the first singular grid node is x = pi/2
    x, t = report["failures"][0]["location"]
    assert x == pytest.approx(np.pi / 2, abs=1e-12) and t == 0.0
    code, _ = run(tmp_path, "gbdt", {"potential": {"kind": "zero"}}, out="cfg")
    assert code == 3


def test_byte_identical_reruns(tmp_path):
    cfg = {"potential": SOLITON, "domain": {"b1": 2.0, "b2": 1.0},
           "z_samples": ["-1.5j", "0.5-1.3j", "-1-1.8j"], "points": [[1.0, 0.5], [0.5, 0.25]]}
    run(tmp_path, "factor-check", cfg, out="a", extra=("--steps", "400"))
    run(tmp_path, "factor-check", cfg, out="b", extra=("--steps", "400"))
    for name in ("factor_check.csv", "factor-check_report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, "zero", {"potential": {"kind": "zero"}, "domain": {"b1": 1.0, "b2": 0.5},
                                   "z_samples": ["-2j"], "points": [[0.5, 0.25]]})
    proc = subprocess.run([sys.executable, "-m", "zcf", "factor-check", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout.strip().splitlines()[-1])["passed"] is True
    proc = subprocess.run([sys.executable, "-m", "zcf", "bogus"], capture_output=True, text=True)
    assert proc.returncode != 0
