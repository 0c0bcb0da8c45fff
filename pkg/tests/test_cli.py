import csv
import io
import json
import math
import subprocess
import sys

import pytest

from arraycav import analytics as an
from arraycav.cli import main
from arraycav.model import config_from_dict
from arraycav.output import fmt, rates_from_json_dict


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_config(tmp_path, a=1.2, n=20, waist=15.0, finesse=None, name="c.json"):
    doc = {"lattice": {"a": a, "nx": n, "ny": n, "polarization": [1, 0, 0, 0]}, "beam": {"waist": waist}}
    if finesse is not None:
        doc["cavity"] = {"finesse": finesse}
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_resonances(capsys):
    code, out, _ = run(capsys, "resonances", "--max", "2.3")
    assert code == 0
    assert out.splitlines() == ["1", "1.41421356", "2", "2.23606798"]
    _, out, _ = run(capsys, "resonances", "--max", "1.0")
    assert out == "1\n"
    _, out, _ = run(capsys, "resonances", "--max", "3.0")
    lines = out.splitlines()
    assert len(lines) == 6 and lines[-1] == "3"


def test_resonances_bad_max(capsys):
    code, _, err = run(capsys, "resonances", "--max", "0.5")
    assert code == 2 and "max" in err


def test_point_subwavelength(capsys, tmp_path):
    code, out, _ = run(capsys, "point", str(write_config(tmp_path, a=0.95)))
    assert code == 0
    assert json.loads(out)["rates"]["loss_diff"] == 0


def test_point_cavity_chain(capsys, tmp_path):
    # tight waist on a large array: eta -> 1
    code, out, _ = run(capsys, "point", str(write_config(tmp_path, n=200, waist=2.0, finesse=1000)))
    doc = json.loads(out)
    assert doc["regime"] == "cavity"
    assert doc["rates"]["cooperativity"] == pytest.approx(269.544, abs=0.01)


def test_point_resonant(capsys, tmp_path):
    code, out, _ = run(capsys, "point", str(write_config(tmp_path, a=math.sqrt(2))))
    rates = json.loads(out)["rates"]
    assert rates["resonant_flag"] is True and rates["inefficiency_eps"] == 1
    assert rates["loss_diff"] == "inf"


def test_point_round_trip(capsys, tmp_path):
    path = write_config(tmp_path, a=1.7, finesse=300)
    _, out, _ = run(capsys, "point", str(path))
    parsed = rates_from_json_dict(json.loads(out)["rates"])
    assert parsed == an.cavity_rates(config_from_dict(json.loads(path.read_text())))


def test_point_numeric(capsys, tmp_path):
    code, out, _ = run(capsys, "point", str(write_config(tmp_path, n=8, waist=4.0)), "--numeric")
    num = json.loads(out)["numeric"]
    assert 0 <= num["r0"] <= 1 and num["linewidth_fwhm"] > 0


def test_malformed_config(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"lattice": {"a": 1.2,\n "nx": }')
    code, _, err = run(capsys, "point", str(p))
    assert code == 2 and "line 2, column" in err


def test_invalid_config(capsys, tmp_path):
    code, _, err = run(capsys, "point", str(write_config(tmp_path, n=0)))
    assert code == 2 and "nx" in err


def test_scan_spacing_columns_and_dips(capsys):
    code, out, _ = run(capsys, "scan-spacing", "--a-min", "1.05", "--a-max", "2.3", "--steps", "60")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "a,eta,gamma0,gamma_diff,C_free_analytic,C_free_numeric,C_cavity,r0,epsilon,resonant"
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert len(rows) > 60
    dips = {round(float(r["a"]), 6) for r in rows if r["resonant"] == "1"}
    assert dips == {round(math.sqrt(2), 6), 2.0, round(math.sqrt(5), 6)}


def test_scan_spacing_no_comment_json(capsys):
    _, out, _ = run(capsys, "scan-spacing", "--a-min", "1.1", "--a-max", "1.3", "--steps", "3", "--no-comment")
    assert out.startswith("a,eta")
    _, out, _ = run(capsys, "scan-spacing", "--a-min", "1.1", "--a-max", "1.3", "--steps", "3", "--format", "json")
    assert len(json.loads(out)["rows"]) == 3


def test_scan_spacing_empty_range(capsys):
    code, _, _ = run(capsys, "scan-spacing", "--a-min", "2", "--a-max", "1", "--steps", "5")
    assert code == 2


def test_numeric_capacity_exit_code(capsys):
    code, _, err = run(capsys, "scan-spacing", "--a-min", "1.1", "--a-max", "1.2", "--steps", "2",
                       "--numeric", "--n", "61")
    assert code == 3 and "limited" in err


def test_scan_detuning_single_atom(capsys):
    code, out, _ = run(capsys, "scan-detuning", "--n", "1", "--waist", "2", "--no-comment")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["delta", "re_r", "im_r", "abs_r2", "abs_t2", "balance"]
    assert all(float(r["balance"]) >= -1e-6 for r in rows)
    peak = max(rows, key=lambda r: float(r["abs_r2"]))
    assert float(peak["delta"]) == 0 and math.isfinite(float(peak["abs_r2"]))


def test_scan_waist(capsys):
    code, out, _ = run(capsys, "scan-waist", "--n", "6", "--w-min", "2", "--w-max", "5", "--steps", "4",
                       "--numeric", "--no-comment")
    assert code == 0 and out.splitlines()[0].startswith("w,eta")
    assert len(out.splitlines()) == 5


def test_inefficiency_needs_cavity(capsys):
    code, _, err = run(capsys, "inefficiency", "--a-min", "1.1", "--a-max", "1.5")
    assert code == 2 and "cavity" in err


def test_determinism_across_threads(capsys, tmp_path):
    args = ["inefficiency", "--n", "10", "--waist", "5", "--finesse", "1e4", "--a-min", "1.3",
            "--a-max", "1.41", "--steps", "4", "--numeric"]
    outs = []
    for t in ("1", "2", "1"):
        out_file = tmp_path / f"o{len(outs)}.csv"
        assert main(args + ["--threads", t, "--out", str(out_file)]) == 0
        outs.append(out_file.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_fmt_is_nine_significant_digits():
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(123456789012.0) == "1.23456789e+11"
    assert fmt(True) == "1" and fmt(None) == "" and fmt(math.inf) == "inf"


def test_entry_point_version_and_help():
    res = subprocess.run([sys.executable, "-m", "arraycav.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "arraycav" in res.stdout
    res = subprocess.run([sys.executable, "-m", "arraycav.cli", "bogus"], capture_output=True, text=True)
    assert res.returncode == 2
