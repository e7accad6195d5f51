import json
import subprocess
import sys

import pytest

from semijulia.cli import main
from semijulia.examples import cantor_spec, schottky_annulus_modulus
from semijulia.rational import RootFindingError, lipschitz_constant
from semijulia.sphere import PointCloud


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_lip_matches_library(capsys):
    code, out, _ = run(["lip", "--spec", "cantor"], capsys)
    assert code == 0
    obj = json.loads(out)
    lib = [lipschitz_constant(g) for g in cantor_spec().spec.generators]
    assert [r["lip"] for r in obj["generators"]] == lib
    assert obj["sup"] == max(lib)


def test_cloud_text_and_json(tmp_path, capsys):
    txt = tmp_path / "c.txt"
    assert main(["cloud", "--spec", "cantor", "--max-word-len", "3", "-o", str(txt)]) == 0
    cloud = PointCloud.from_text(txt.read_text())
    assert len(cloud) == 2 + 2 + 6
    code, out, _ = run(["cloud", "--spec", "cantor", "--method", "backward", "--samples", "100", "--format", "json"],
                       capsys)
    obj = json.loads(out)
    assert len(PointCloud.from_json_obj(obj)) == 100
    assert obj["params"]["rng_seed"] == 0


def test_backward_cloud_repeatable(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    args = ["cloud", "--spec", "koch", "--method", "backward", "--samples", "1000", "--seed", "7"]
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_render_pgm(tmp_path):
    out = tmp_path / "r.pgm"
    assert main(["render", "--spec", "cantor", "--max-word-len", "4", "--window", "0", "1", "-0.5", "0.5",
                 "--width", "30", "--height", "10", "-o", str(out)]) == 0
    data = out.read_bytes()
    assert data.startswith(b"P5\n30 10\n255\n")
    assert len(data) == len(b"P5\n30 10\n255\n") + 300


def test_perfectness_schottky_prescribed(capsys):
    code, out, _ = run(["perfectness", "--spec", "schottky:4", "--max-word-len", "3", "--floors", "0.01"], capsys)
    assert code == 0
    obj = json.loads(out)
    for rec in obj["prescribed_annuli"]:
        assert rec["modulus"] == pytest.approx(schottky_annulus_modulus(rec["n"]), abs=1e-12)
        assert rec["separates"]
    assert obj["profile"][0]["floor"] == 0.01


def test_perfectness_from_cloud_file(tmp_path, capsys):
    f = tmp_path / "two.txt"
    f.write_text("0 0\n1 0\n")
    code, out, _ = run(["perfectness", "--cloud", str(f), "--floors", "0.01"], capsys)
    assert code == 0
    prof = json.loads(out)["profile"]
    assert prof[0]["annulus"] == {"center": [0.0, 0.0], "r1": 0.01, "r2": 1.0}


def test_selfsim_and_escape(capsys):
    code, out, _ = run(["selfsim", "--spec", "cantor", "--max-word-len", "4"], capsys)
    assert code == 0 and json.loads(out)["defect"] >= 0
    code, out, _ = run(["escape", "--spec", "example4:18"], capsys)
    assert code == 0 and json.loads(out)["radius"] <= 10
    code, out, _ = run(["escape", "--spec", "schottky:2"], capsys)
    assert json.loads(out)["radius"] == "absent"


def test_examples_list_and_dump(tmp_path, capsys):
    code, out, _ = run(["examples", "list"], capsys)
    assert out.split() == ["cantor", "koch", "example4", "schottky"]
    spec_file = tmp_path / "k.json"
    assert main(["examples", "dump", "koch", "-o", str(spec_file)]) == 0
    code, out1, _ = run(["lip", "--spec", str(spec_file)], capsys)
    code, out2, _ = run(["lip", "--spec", "koch"], capsys)
    assert out1 == out2


def test_input_errors_exit_1(tmp_path, capsys):
    assert run(["lip", "--spec", "nosuch"], capsys)[0] == 1
    assert run(["cloud", "--spec", "cantor", "--max-word-len", "0"], capsys)[0] == 1
    assert run(["escape", "--spec", "cantor", "--r-max", "0.5"], capsys)[0] == 1
    assert run(["examples", "dump"], capsys)[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{\"generators\": []}")
    assert run(["lip", "--spec", str(bad)], capsys)[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_numerical_failure_exit_2(monkeypatch, capsys):
    from semijulia import cli

    def boom(*a, **k):
        raise RootFindingError("no convergence", 1e-3, {"word": (0, 1)})

    monkeypatch.setattr(cli, "lipschitz_constant", boom)
    code, _, err = run(["lip", "--spec", "cantor"], capsys)
    assert code == 2
    diag = json.loads(err)
    assert diag["error"] == "RootFindingError" and diag["residual"] == 1e-3
    assert diag["context"] == {"word": "(0, 1)"}


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "semijulia", "examples", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "koch" in res.stdout
