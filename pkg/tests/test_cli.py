import json
import subprocess
import sys
from pathlib import Path


from clocksit.cli import main

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
COFFEE = str(CORPUS / "coffee.bat")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check(capsys, tmp_path):
    code, out, _ = run(capsys, "check", COFFEE)
    assert code == 0 and "ok" in out
    bad = tmp_path / "bad.bat"
    bad.write_text("bat b { objects P; actions s/1; fluents f/1; clocks c/1;\n"
                   "poss s(p) := true; ssa f(p) := f(p);\n"
                   "reset c(p) := a == s(p) & c(p) >= 1; }")
    code, out, _ = run(capsys, "check", bad)
    assert code == 1 and "reset not time-independent" in out


def test_parse_error_reports_span(capsys, tmp_path):
    bad = tmp_path / "bad.bat"
    bad.write_text("bat b {\n  objects P;\n  actions s/1\n}")
    code, _, err = run(capsys, "check", bad)
    assert code == 2 and "bad.bat:4:1" in err


def test_reach_witness(capsys):
    code, out, _ = run(capsys, "reach", COFFEE, "--phi", "forall o. isFull(o)", "--witness")
    assert code == 0 and "witness (7 actions)" in out


def test_reach_negative(capsys):
    code, out, _ = run(capsys, "reach", COFFEE, "--phi", "c_glob() <= 1 & strong(Mug1)")
    assert code == 1 and out.startswith("not reachable")


def test_reach_errors(capsys):
    code, _, err = run(capsys, "reach", COFFEE, "--phi", "isFull(Pot)", "--K", "1")
    assert code == 2 and "maximal constant" in err
    code, _, err = run(capsys, "reach", COFFEE, "--phi", "forall o. isFull(o)",
                       "--max-states", "10")
    assert code == 2 and "state limit" in err


def test_realize(capsys):
    code, out, _ = run(capsys, "realize", COFFEE, CORPUS / "strongfill.gpr")
    assert code == 1 and out.strip() == "no realization"
    code, out, _ = run(capsys, "realize", COFFEE, CORPUS / "example4.gpr", "--decimal")
    assert code == 0 and "wait(2)" in out


def test_regress(capsys):
    code, out, _ = run(capsys, "regress", COFFEE, "--phi", "c_brew(Pot) >= 1",
                       "--sigma", "wait(3/2)")
    assert code == 0 and out.splitlines() == ["c_brew(Pot) >= -1/2", "true"]
    code, out, _ = run(capsys, "regress", COFFEE, "--phi", "isFull(Mug2)", "--sigma", "S0", "-q")
    assert code == 1 and out.strip() == "false"


def test_tsuccs(capsys):
    code, out, _ = run(capsys, "tsuccs", COFFEE, "--sigma", "S0")
    assert code == 0 and out.split() == ["0", "1/2", "1", "3/2", "2", "5/2"]


def test_absts_json(capsys, tmp_path):
    target = tmp_path / "oven.json"
    code, _, _ = run(capsys, "absts", CORPUS / "oven.bat", "--format", "json", "-o", target)
    doc = json.loads(target.read_text())
    assert code == 0 and doc["schema"] == "absts/1" and len(doc["states"]) == 64


def test_encode_and_reach_ta(capsys, tmp_path):
    out_bat = tmp_path / "ta.bat"
    assert run(capsys, "encode", "ta", CORPUS / "simple.ta", "-o", out_bat)[0] == 0
    assert out_bat.read_text().startswith("// query: loc(lf)")
    code, out, _ = run(capsys, "reach", out_bat, "--witness")
    assert code == 0 and "sw1()" in out


def test_encode_and_simulate_2cm(capsys, tmp_path):
    out_bat = tmp_path / "m.bat"
    assert run(capsys, "encode", "2cm", CORPUS / "countdown.2cm", "-o", out_bat)[0] == 0
    code, out, _ = run(capsys, "simulate", out_bat, "--depth", "50")
    lines = out.splitlines()
    assert code == 0 and "{next(s4)}" in lines[-1] and "f2()=2" in lines[-1]
    code, _, err = run(capsys, "reach", out_bat, "--phi", "true")
    assert code == 2 and "clocked engine cannot run it" in err


def test_simulate_clocked(capsys):
    code, out, _ = run(capsys, "simulate", COFFEE, "--actions", "sBrew(Pot); wait(2); eBrew(Pot)")
    assert code == 0 and "strong(Pot)" in out.splitlines()[-1]
    code, out, _ = run(capsys, "simulate", COFFEE, "--actions", "eBrew(Pot)")
    assert code == 1 and "blocked" in out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "clocksit.cli", "tsuccs", COFFEE,
                           "--sigma", "wait(5)"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.split() == ["0"]
