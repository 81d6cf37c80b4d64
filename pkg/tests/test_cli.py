import csv
import hashlib
import json
import math

import pytest

from strongdamp.cli import RunConfig, main
from strongdamp.errors import ConfigError

GOLDEN_INI = """\
[problem]
alpha = 1
sin = 1 0 0.25; 0 1 0.25
omega = 1, 0.6180339887498949
tau = 1
epsilon = 0.02
[qp]
radius = 8
T_long = 20
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def run(tmp_path, command, text="", out="out"):
    out_dir = tmp_path / out
    code = main([command, "--config", write(tmp_path, text), "--out", str(out_dir)])
    return code, out_dir


# -- configuration --------------------------------------------------------------


def test_unknown_key_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "formal", "[problem]\nalpha = 1\n# note\nbogus = 3\n")
    assert code == 2
    err = capsys.readouterr().err
    assert "bogus" in err and "line 4" in err


def test_bad_value_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "formal", "[formal]\nK = ten\n")
    assert code == 2
    assert "'K'" in capsys.readouterr().err


def test_unknown_section_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "formal", "[nonsense]\nK = 1\n")
    assert code == 2
    assert "nonsense" in capsys.readouterr().err


def test_domain_error_exits_3(tmp_path, capsys):
    code, _ = run(tmp_path, "formal", "[problem]\nalpha = -1\n")
    assert code == 3
    payload = json.loads(capsys.readouterr().err)
    assert payload["error"] == "FixedPointError"


def test_config_round_trip():
    cfg = RunConfig.parse(GOLDEN_INI)
    again = RunConfig.parse(cfg.to_text())
    assert again.values == cfg.values


def test_hexfloat_values():
    cfg = RunConfig.parse("[problem]\nepsilon = 0x1.999999999999ap-5\n")
    assert cfg["problem"]["epsilon"] == 0.05


def test_parse_error_carries_line():
    with pytest.raises(ConfigError) as exc:
        RunConfig.parse("[problem]\nalpha = 1\nepsilon = -2\n")
    assert exc.value.line == 3


# -- commands -------------------------------------------------------------------


def test_formal_constants(tmp_path):
    code, out = run(tmp_path, "formal", "[problem]\nalpha = 4\nsin = 1 0.5\n")
    assert code == 0
    rows = read_csv(out / "constants.csv")
    assert rows[0] == ["k", "c_re", "c_im"]
    assert [float(v) for v in rows[1]] == [0, math.sqrt(4), 0]
    assert [float(v) for v in rows[2]] == [1, 0, 0]


def test_manifest_lists_artifacts(tmp_path):
    code, out = run(tmp_path, "formal")
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    listed = {a["path"]: a["sha256"] for a in manifest["artifacts"]}
    assert {"orders.csv", "constants.csv", "config.ini"} <= set(listed)
    for path, digest in listed.items():
        assert hashlib.sha256((out / path).read_bytes()).hexdigest() == digest
    assert manifest["versions"]["strongdamp"]


def test_manifest_config_reproduces(tmp_path):
    code, out = run(tmp_path, "formal", "[problem]\nalpha = 2\n[formal]\nK = 6\n")
    assert code == 0
    code = main(["formal", "--config", str(out / "config.ini"), "--out", str(tmp_path / "re")])
    assert code == 0
    for name in ("orders.csv", "constants.csv"):
        assert (out / name).read_bytes() == (tmp_path / "re" / name).read_bytes()


def test_deterministic_artifacts(tmp_path):
    text = "[problem]\nsin = 1 0.5; 2 0.1\n"
    _, a = run(tmp_path, "resum", text, "a")
    _, b = run(tmp_path, "resum", text, "b")
    for name in ("orders.csv",):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_trees_command(tmp_path):
    code, out = run(tmp_path, "trees", "[trees]\nk_max = 4\nnu_max = 2\n")
    assert code == 0
    report = json.loads((out / "trees.json").read_text())
    assert report["count_audit_violations"] == []
    assert report["max_rel_err"] <= 1e-12


def test_oracle_command(tmp_path):
    code, out = run(tmp_path, "oracle")
    assert code == 0
    orbit = json.loads((out / "orbit.json").read_text())
    assert orbit["residual"] <= 1e-12


def test_compare_command(tmp_path):
    code, out = run(tmp_path, "compare")
    assert code == 0
    rows = read_csv(out / "compare.csv")
    vals = [float(v) for row in rows[1:] for v in row[1:]]
    assert max(vals) < 1e-6


def test_qp_command(tmp_path):
    code, out = run(tmp_path, "qp", GOLDEN_INI)
    assert code == 0
    report = json.loads((out / "qp.json").read_text())
    assert report["audit_passed"]
    assert report["leading"][0] == pytest.approx(-0.04, abs=1e-12)
    assert report["shadow"]["distance"] < 1e-5
    assert json.loads((out / "audit.json").read_text())["passed"]
