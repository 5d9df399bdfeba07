import json

import numpy as np

from rankpoison.cli import main
from rankpoison.data_io import read_dataset, read_scores


def run(*argv):
    return main([str(a) for a in argv])


def test_generate_aggregate_evaluate(tmp_path, capsys):
    d = tmp_path / "d.csv"
    assert run("generate", "--n", 10, "--votes", 2000, "--noise", 0, "--seed", 7, "-o", d) == 0
    assert run("aggregate", d, "-o", tmp_path / "theta.csv") == 0
    capsys.readouterr()
    out = tmp_path / "m.json"
    assert run("evaluate", "--truth", tmp_path / "d.truth.csv", "--scores", tmp_path / "theta.csv",
               "--k", 3, "-o", out) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["kendall_tau"] == 1.0
    assert json.loads(out.read_text()) == printed


def test_static_attack_file_respects_dosage(tmp_path):
    d = tmp_path / "d.csv"
    run("generate", "--n", 10, "--votes", 2000, "--seed", 1, "-o", d)
    p = tmp_path / "p.csv"
    diag = tmp_path / "diag.json"
    assert run("attack", "--method", "static", "--budget", "1e-3", "--kappa", 0, d, "-o", p,
               "--diagnostics", diag) == 0
    poisoned = read_dataset(p, n=10)
    assert poisoned.total <= 2000 + 90
    assert json.loads(diag.read_text())["lambda_star"] > 0


def test_random_attack_l1_change(tmp_path):
    d = tmp_path / "d.csv"
    run("generate", "--n", 10, "--votes", 2000, "--seed", 2, "-o", d)
    p = tmp_path / "p.csv"
    assert run("attack", "--method", "random", "--s1", 0.05, "--s2", 0.05, d, "-o", p) == 0
    change = np.abs(read_dataset(p, n=10).weights - read_dataset(d).weights).sum()
    assert change <= 0.10 * 2000 + 1


def test_dynamic_attack_and_robust_aggregate(tmp_path):
    d = tmp_path / "d.csv"
    run("generate", "--n", 6, "--votes", 600, "--noise", 0.1, "--seed", 3, "-o", d)
    assert run("attack", "--method", "dynamic", "--budget", 0.1, "--rounds", 2, "--robust",
               "--lambda", 0.2, d, "-o", tmp_path / "q.csv") == 0
    assert run("aggregate", "--robust", "--lambda", 0.3, d, "-o", tmp_path / "t.csv") == 0
    assert read_scores(tmp_path / "t.csv").n == 6


def test_ballot_input(tmp_path):
    b = tmp_path / "b.txt"
    b.write_text("n=3\n2: 0 > 1 > 2\n1: 2 > 1\n")
    assert run("aggregate", b, "-o", tmp_path / "t.csv") == 0
    assert read_scores(tmp_path / "t.csv").theta[0] > read_scores(tmp_path / "t.csv").theta[2]


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[defaults]\nn = 5\n[generate]\nvotes = 30\nout = {tmp_path / 'from_cfg.csv'}\n")
    assert run("--config", cfg, "generate", "--votes", 40) == 0
    d = read_dataset(tmp_path / "from_cfg.csv")
    assert d.n == 5 and d.total == 40


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[generate]\ncolour = blue\n")
    assert run("--config", cfg, "generate", "-o", tmp_path / "x.csv") == 2
    assert "colour" in capsys.readouterr().err


def test_errors_are_one_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("i,j,weight\n0,0,3\n")
    assert run("aggregate", bad, "-o", tmp_path / "t.csv") == 1
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "self-pair" in err and "data_io" in err
    assert run("aggregate", tmp_path / "missing.csv", "-o", tmp_path / "t.csv") == 1


def test_usage_error_exit_code(capsys):
    assert run("attack", "--method", "sideways", "x.csv", "-o", "y.csv") == 2
    assert "invalid choice" in capsys.readouterr().err
