import json
import subprocess
import sys

from blws_nnm.bench import parse_csv
from blws_nnm.cli import EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, main


def test_rpca_to_stdout(capsys):
    assert main(["rpca", "--m", "60", "--seed", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("m,method,rel_err,rank_hat,e_l0,iters,time_s,matvecs\n")
    row = parse_csv(out)[0]
    assert row.method == "BLWS-ADM" and row.rank_hat == 6


def test_mc_markdown_to_file(tmp_path):
    out = tmp_path / "t.md"
    assert main(["mc", "--m", "100", "--rank", "3", "--ratio", "6", "--backend", "lanczos",
                 "--format", "markdown", "--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith("| m | r |")


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m": 60, "backend": "lanczos", "max-iter": 200}))
    assert main(["rpca", "--config", str(cfg), "--backend", "full"]) == EXIT_OK
    assert parse_csv(capsys.readouterr().out)[0].method == "ADM-exact"


def test_config_errors(tmp_path, capsys):
    assert main(["rpca", "--m", "1"]) == EXIT_CONFIG
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "mc"}))
    assert main(["rpca", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["rpca", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    cfg.write_text("[1]")
    assert main(["rpca", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["svd-check", "--trials", "0"]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_not_converged_exit(capsys):
    assert main(["rpca", "--m", "40", "--max-iter", "2"]) == EXIT_NOT_CONVERGED
    captured = capsys.readouterr()
    assert ",converged" in captured.out.splitlines()[0]
    assert "iteration cap" in captured.err


def test_repro_quick_grid(tmp_path, monkeypatch):
    monkeypatch.setenv("BLWS_NNM_THREADS", "1")
    out = tmp_path / "grid.csv"
    assert main(["repro", "--grid", "quick", "--workers", "4", "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    rpca_part, mc_part = text.split("\n\n")
    assert [r.method for r in parse_csv(rpca_part)] == ["ADM", "BLWS-ADM"]
    assert [r.algorithm for r in parse_csv(mc_part)] == ["SVT", "BLWS-SVT"]
    assert text.count("speedup=") == 2


def test_svd_check_small(capsys):
    assert main(["svd-check", "--trials", "5", "--prox-trials", "1"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert [ln.split()[1] for ln in lines] == ["augmented-spectrum", "lanczos-oracle", "prox-agreement"]
    assert all(ln.startswith("PASS") for ln in lines)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "blws_nnm", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "svd-check" in proc.stdout
