import json
import subprocess
import sys
from pathlib import Path

import pytest

from phatic.cli import main
from phatic.engine import Trace

GOLDEN = Path(__file__).parent / "golden"


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_generate_is_deterministic(capsys):
    a = call(capsys, "--seed", "7", "--count", "1", "--format", "transcript")
    b = call(capsys, "--seed", "7", "--count", "1", "--format", "transcript")
    assert a == b and a[0] == 0
    assert a[1].startswith("# phatic generate seed=7 ")
    assert "\n## seed 7: " in a[1]


def test_table_header(capsys):
    code, out, _ = call(capsys, "--seed", "3", "--format", "table")
    assert code == 0 and "\nDialogue | Guideline\n" in out


def test_trace_json_lines(capsys):
    code, out, err = call(capsys, "generate", "--seed", "100", "--count", "3", "--format", "trace-json")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 3
    assert [Trace.loads(ln).seed for ln in lines] == [100, 101, 102]
    assert err.startswith("# phatic generate seed=100 count=3")


def test_random_seed_is_echoed(capsys):
    _, out, err = call(capsys, "--format", "trace-json")
    seed = Trace.loads(out).seed
    assert f"seed={seed} " in err
    assert call(capsys, "--seed", str(seed), "--format", "trace-json")[1] == out


def test_seed_wraps_at_64_bits(capsys):
    code, out, _ = call(capsys, "--seed", str(2**64 - 1), "--count", "2", "--format", "trace-json")
    assert [Trace.loads(ln).seed for ln in out.splitlines()] == [2**64 - 1, 0]


def test_out_file(tmp_path, capsys):
    target = tmp_path / "t.txt"
    code, out, _ = call(capsys, "--seed", "1", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().startswith("# phatic generate seed=1")


def test_replay_golden(capsys):
    code, out, err = call(capsys, "replay", str(GOLDEN / "dominated_exit.jsonl"))
    assert code == 0
    assert out.splitlines()[0] == "Bob: Good morning, Alice!"
    code, out, _ = call(capsys, "replay", str(GOLDEN / "dominated_exit.jsonl"), "--format", "table")
    assert out == (GOLDEN / "dominated_exit_table.txt").read_text()


def test_replay_tampered(tmp_path, capsys):
    d = json.loads((GOLDEN / "dominated_exit.jsonl").read_text())
    k = next(s["index"] for s in d["steps"] if s["rule"].startswith("continue_talking"))
    d["steps"][k]["consumed"] = ["clock(1)" if a.startswith("clock(") else a for a in d["steps"][k]["consumed"]]
    bad = tmp_path / "bad.jsonl"
    bad.write_text(json.dumps(d) + "\n")
    code, _, err = call(capsys, "replay", str(bad))
    assert code == 3
    assert f"at step {k}" in err


def test_replay_empty_steps(tmp_path, capsys):
    d = json.loads((GOLDEN / "dominated_exit.jsonl").read_text())
    d["steps"], d["final_state"] = [], d["initial_state"]
    f = tmp_path / "empty.jsonl"
    f.write_text(json.dumps(d) + "\n")
    assert call(capsys, "replay", str(f))[:2] == (0, "")


def test_replay_round_trip_from_generate(tmp_path, capsys):
    _, out, _ = call(capsys, "--seed", "5", "--count", "4", "--format", "trace-json")
    f = tmp_path / "batch.jsonl"
    f.write_text(out)
    code, out, _ = call(capsys, "replay", str(f))
    assert code == 0 and out.count("## seed ") == 4


def test_stats(capsys):
    code, out, _ = call(capsys, "stats", "--count", "100", "--seed", "0")
    assert code == 0 and "adherent fraction:" in out and "rule frequencies" in out
    code, out, err = call(capsys, "stats", "--count", "100", "--seed", "0", "--format", "trace-json")
    summary = json.loads(out)
    assert summary["n"] == 100 and 0 < summary["adherent_fraction"] < 1


def test_stats_needs_100(capsys):
    code, _, err = call(capsys, "stats", "--count", "99")
    assert code == 1 and "--count >= 100" in err


@pytest.mark.parametrize("argv", [["--count", "0"], ["--format", "pdf"], ["--seed", "-1"],
                                  ["--seed", str(2**64)], ["check", "--depth", "13"]])
def test_usage_errors(capsys, argv):
    assert call(capsys, *argv)[0] == 1


def test_io_error(capsys):
    assert call(capsys, "--scenario", "/nonexistent/scenario.json")[0] == 2


def test_bad_rules_file(tmp_path, capsys):
    f = tmp_path / "bad.phatic"
    f.write_text("rule oops: a(X) -o b(Y).\n")
    code, _, err = call(capsys, "--rules", str(f))
    assert code == 1 and f"{f}:1:20: error: unbound variable Y in effect" in err


def test_rules_env_fallback(tmp_path, capsys, monkeypatch):
    f = tmp_path / "tiny.phatic"
    f.write_text("rule only: phase(greeting) -o ().\n")
    monkeypatch.setenv("PHATIC_RULES", str(f))
    code, out, _ = call(capsys, "check")
    assert code == 1 and "1 rules" in out  # the bank has no entry for "only"


def test_check_shipped(capsys):
    code, out, _ = call(capsys, "check", "--depth", "3")
    assert code == 0 and "0 uncovered" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "phatic", "--seed", "9", "--format", "table"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "Dialogue | Guideline" in r.stdout
