import os
import subprocess
import sys

import pytest

from manetq.cli import EXIT_CONFIG, UsageError, main, parse_protocols, parse_seeds
from manetq.metrics import recompute

SMALL = "nodes: 10\nsim_time: 15\n"


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text(SMALL)
    return p


def test_parse_seeds():
    assert parse_seeds("1..4") == [1, 2, 3, 4]
    assert parse_seeds("3") == [3]
    assert parse_seeds("1,4..5") == [1, 4, 5]
    for bad in ("5..1", "x", "1..", "-2"):
        with pytest.raises(UsageError):
            parse_seeds(bad)


def test_parse_protocols():
    assert parse_protocols("dsr, nfpqr") == ["dsr", "nfpqr"]
    with pytest.raises(UsageError):
        parse_protocols("ospf")
    with pytest.raises(UsageError):
        parse_protocols(",")


def test_simulate_to_stdout(cfg_file, capsys):
    assert main(["simulate", str(cfg_file), "--seed", "2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("protocol,seed,period")
    assert out[1].startswith("dsr,2,1,")


def test_simulate_files_and_trace(cfg_file, tmp_path, capsys):
    out, trace = tmp_path / "r.csv", tmp_path / "r.trace"
    rc = main(["simulate", str(cfg_file), "--protocol", "nfpqr", "--out", str(out),
               "--trace", str(trace)])
    assert rc == 0
    assert "wrote" in capsys.readouterr().out
    assert recompute(trace).csv_text() == out.read_text()


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("protcol: dsr\n")
    assert main(["simulate", str(bad)]) == EXIT_CONFIG
    assert "protcol" in capsys.readouterr().err
    assert main(["simulate", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    good = tmp_path / "g.cfg"
    good.write_text(SMALL)
    assert main(["compare", str(good), "--seeds", "9..1", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["compare", str(good), "--period", "9", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_compare_writes_outputs(cfg_file, tmp_path, capsys):
    out = tmp_path / "cmp"
    assert main(["compare", str(cfg_file), "--protocols", "dsr,nfpqr", "--seeds", "1..2",
                 "--out", str(out), "--period", "2"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["lifetimes.csv", "runs.csv", "summary.csv"]
    assert ",2,dsr," in (out / "summary.csv").read_text()


def _run_cli(args, hashseed, cwd):
    env = dict(os.environ, PYTHONHASHSEED=str(hashseed))
    return subprocess.run([sys.executable, "-m", "manetq", *args], env=env, cwd=cwd,
                          capture_output=True, text=True, check=True).stdout


def test_output_independent_of_hash_seed(cfg_file, tmp_path):
    a = _run_cli(["simulate", str(cfg_file), "--protocol", "nfpqr-clustered"], 1, tmp_path)
    b = _run_cli(["simulate", str(cfg_file), "--protocol", "nfpqr-clustered"], 4242, tmp_path)
    assert a == b and a.count("\n") == 7
