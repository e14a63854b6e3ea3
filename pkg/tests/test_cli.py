import json
import subprocess
import sys

from ircdesync.cli import main


def test_run_builtin(capsys, tmp_path):
    trace, dump = tmp_path / "t.jsonl", tmp_path / "d.json"
    assert main(["run", "--builtin", "flowing-topic", "--trace", str(trace), "--dump", str(dump)]) == 0
    assert "assertions passed" in capsys.readouterr().out
    assert json.loads(trace.read_text().splitlines()[0])["observer"] in ("a", "x")
    assert json.loads(dump.read_text())["A"]["#channel"]["topic"]["text"] == "I am x!"


def test_failing_assertion_exits_1(tmp_path):
    f = tmp_path / "f.scn"
    f.write_text("chain A B\nclient a@A\nchannel #c members a ops a\nassert topic * #c = nope\n")
    assert main(["run", str(f)]) == 1


def test_bad_script_exits_2(tmp_path, capsys):
    f = tmp_path / "f.scn"
    f.write_text("chain A B\n@1 fly away\n")
    assert main(["run", str(f)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_list_and_attempts(capsys):
    assert main(["list"]) == 0
    assert "cloak" in capsys.readouterr().out
    assert main(["attempts", "--builtin", "jitter-desync", "--max", "5", "--trials", "3"]) == 0
    assert "median" in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ircdesync", "run", "--builtin", "colliding-deop", "--json"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["passed"] is True
