from __future__ import annotations

import json
import subprocess
import sys

import pytest

from conftest import MODELS
from piff.cli import main
from piff.formats import read_matrix

INIT = "QSh:0.5,QIh:0.5"


def run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("compile", MODELS / "si.piff", "-o", d / "si.ff", "--matrix", d / "full.json", "-q") == 0
    assert run("reduce", d / "full.json", "--labels", MODELS / "si_state_loc.lbl", "--prefix", "",
               "-o", d / "s8.json", "-q") == 0
    assert run("reduce", d / "s8.json", "--labels", MODELS / "si_hl.lbl", "-o", d / "red.json",
               "--emit-ff", d / "red.ff", "--partition", d / "part.json", "-q") == 0
    return d


def test_compile_outputs(work):
    full = read_matrix(work / "full.json")
    assert full.S == 40
    text = (work / "si.ff").read_text()
    assert text.startswith("// generated from si.piff")
    assert "init{" in text


def test_reduce_prints_partition(work, capsys):
    assert run("reduce", work / "s8.json", "--labels", MODELS / "si_hl.lbl") == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["QSh: SA SC", "QSl: SB SD", "QIh: IA IC", "QIl: IB ID"]
    part = json.loads((work / "part.json").read_text())
    assert [b["members"] for b in part["blocks"]] == [["SA", "SC"], ["SB", "SD"], ["IA", "IC"], ["IB", "ID"]]
    ff = (work / "red.ff").read_text()
    assert "action QIh_to_QIh: 12/25;" in ff
    assert "state QSh{QSh_to_QSh.QSh + QSh_to_QSl.QSl + QSh_to_QIh.QIh + QSh_to_QIl.QIl}" in ff


def test_coarse_labels_give_two_states(work, capsys):
    assert run("reduce", work / "s8.json", "--labels", MODELS / "si_loc.lbl", "-o", work / "two.json") == 0
    assert capsys.readouterr().out.splitlines() == ["Qh: SA SC IA IC", "Ql: SB SD IB ID"]
    assert read_matrix(work / "two.json").states == ["Qh", "Ql"]


def test_mf_csv(work, capsys):
    assert run("mf", work / "red.json", "--init", INIT, "--steps", 1) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,QSh,QSl,QIh,QIl"
    row = [float(x) for x in lines[2].split(",")[1:]]
    assert max(abs(a - b) for a, b in zip(row, [0.21, 0.14, 0.39, 0.26])) <= 1e-12


def test_fastsim_csv(work, capsys):
    assert run("fastsim", work / "red.json", "--init", INIT, "--start", "QSh", "--steps", 1) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "0,1.0,0.0,0.0,0.0"
    assert [float(x) for x in lines[2].split(",")[1:]] == pytest.approx([0.3, 0.2, 0.3, 0.2], abs=1e-15)
    assert run("fastsim", work / "red.json", "--start", "nowhere", "--steps", 1) == 1


def test_check_json(work, capsys):
    assert run("check", work / "red.json", "--labels", MODELS / "si_hl.lbl", "--init", INIT,
               "--state", "QSh", "--time", 0, "--formula", "P<=0.4 [X Ih]") == 0
    v = json.loads(capsys.readouterr().out)
    assert v["verdict"] is True and abs(v["probability"] - 0.3) <= 1e-12
    assert run("check", work / "red.json", "--init", INIT, "--formula", "Sh", "--formula", "Ih") == 0
    assert len(json.loads(capsys.readouterr().out)) == 8


def test_simulate_writes_directory(work):
    out = work / "sim"
    assert run("simulate", work / "red.json", "--N", 100, "--steps", 5, "--replicas", 3,
               "--seed", 42, "-o", out, "-q") == 0
    assert sorted(p.name for p in out.iterdir()) == ["replica_0000.csv", "replica_0001.csv",
                                                     "replica_0002.csv", "summary.csv"]


def test_verify(work, capsys):
    assert run("verify", work / "s8.json", work / "red.json", "--labels", MODELS / "si_hl.lbl",
               "--formula", "P<=0.4 [X Ih]", "--formula", "P>=0.3 [Sh U<=5 Il]") == 0
    assert capsys.readouterr().out.splitlines()[-1] == "verified"
    # a quotient with the wrong labels is rejected
    assert run("verify", work / "s8.json", work / "two.json", "--labels", MODELS / "si_hl.lbl") == 1


def test_reduce_twice_equals_once(work):
    assert run("reduce", work / "red.json", "--labels", MODELS / "si_hl.lbl",
               "-o", work / "again.json", "-q") == 0
    a, b = read_matrix(work / "red.json"), read_matrix(work / "again.json")
    assert a.states == b.states and a.entries == b.entries


def test_reruns_are_byte_identical(work, tmp_path):
    assert run("compile", MODELS / "si.piff", "-o", tmp_path / "si.ff", "--matrix", tmp_path / "full.json", "-q") == 0
    assert (tmp_path / "si.ff").read_bytes() == (work / "si.ff").read_bytes()
    assert (tmp_path / "full.json").read_bytes() == (work / "full.json").read_bytes()
    for n in (1, 2):
        assert run("simulate", work / "red.json", "--N", 50, "--steps", 4, "--replicas", 2,
                   "--seed", 7, "--threads", n, "-o", tmp_path / f"sim{n}", "-q") == 0
    for name in ("replica_0000.csv", "replica_0001.csv", "summary.csv"):
        assert (tmp_path / "sim1" / name).read_bytes() == (tmp_path / "sim2" / name).read_bytes()


def test_diagnostics_exit_one(work, tmp_path, capsys):
    bad = tmp_path / "bad.piff"
    bad.write_text("const h = 0.5;\nstate S {\n}\n")
    assert run("compile", bad) == 1
    err = capsys.readouterr().err
    assert err.startswith(f"{bad}:") and ": error: " in err
    assert run("mf", tmp_path / "missing.json", "--steps", 1) == 1
    (tmp_path / "junk.json").write_text("{not json")
    assert run("mf", tmp_path / "junk.json", "--steps", 1) == 1
    assert run("check", work / "red.json", "--formula", "P<0.5 [X]") == 1
    assert run("mf", work / "red.json", "--init", "QSh:0.7", "--steps", 1) == 1


def test_full_matrix_reduces_directly(work, capsys):
    assert run("reduce", work / "full.json", "--labels", MODELS / "si_hl.lbl") == 0
    assert [l.split(":")[0] for l in capsys.readouterr().out.splitlines()] == ["QSh", "QSl", "QIh", "QIl"]


@pytest.mark.parametrize("argv", [[], ["mf"], ["mf", "x.json", "--steps", "-1"], ["bogus"],
                                  ["simulate", "x.json", "--N", "10", "--steps", "5", "-o", "d"]])
def test_usage_errors_exit_two(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "piff.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("piff ")
