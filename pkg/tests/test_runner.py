import json
import os
import stat

import numpy as np
import pytest

from blocktoep.cli import main
from blocktoep.presets import PRESETS, get_preset, list_presets
from blocktoep.runner import (OUT_ENV, ResultTable, emit_table, format_value, output_dir, render_table,
                              run_experiment, run_row)


def test_list(capsys):
    assert len(list_presets()) == 10
    assert main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 10
    g2c = next(l for l in lines if l.startswith("group2c"))
    assert "n₁=η, n₂=2η+⌈√η⌉" in g2c
    assert get_preset("ex1").build(4).spec.grid[0, 0].alpha == 1.5


def test_unknown_preset():
    with pytest.raises(KeyError):
        get_preset("group9")
    assert main(["spectrum", "group9", "--eta", "3"]) == 1


def test_group2c_shape():
    prob = get_preset("group2c").build(100)
    assert prob.A.shape == (310, 620) and prob.d_n == 310


def test_empty_solver_set():
    row = run_row(get_preset("group1a"), 4, solvers=False, analyses=())
    assert row["status"] == "ok" and row["iter"] is None and row["d_n"] == 20


def test_empty_eta_rejected():
    with pytest.raises(ValueError):
        run_experiment("group1a", etas=())


def test_row_values_group1a(tmp_path):
    t = run_experiment("group1a", etas=(6,), out=str(tmp_path))
    r = t.row(6)
    assert r["status"] == "ok" and r["conv_prec"] and r["iter_prec"] < r["iter"]
    assert r["lambda"] == pytest.approx(r["iter_prec"] / 30)
    assert r["mu_A"] == pytest.approx(r["max_sigma_A"] / r["min_sigma_A"])
    for name in ("group1a.csv", "group1a_6_A.csv", "group1a_6_precond.csv", "group1a_6_pgmres_history.csv"):
        assert (tmp_path / name).exists()
    sv = np.loadtxt(tmp_path / "group1a_6_precond.csv")
    assert len(sv) == 30 and np.all(np.diff(sv) >= 0)


def test_json_roundtrip_and_csv(tmp_path):
    t = run_experiment("ex1", etas=(8,), out=str(tmp_path), fmt="json")
    back = ResultTable.from_json(json.loads((tmp_path / "ex1.json").read_text()))
    assert back.rows == json.loads(json.dumps(t.to_json()))["rows"]
    csv_text = render_table(t, "csv").splitlines()
    assert len(csv_text) == 2 and csv_text[0].startswith("preset,eta,d_n")


def test_markdown_header():
    t = run_experiment("ex1", etas=(8,), analyses=())
    head = render_table(t, "markdown").splitlines()[0]
    assert "η" in head and "d_n" in head and "iter." in head
    with pytest.raises(ValueError):
        render_table(t, "xml")


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        run_experiment("group2a", etas=(5,), out=str(d))
    assert (a / "group2a.csv").read_bytes() == (b / "group2a.csv").read_bytes()
    assert (a / "group2a_5_A.csv").read_bytes() == (b / "group2a_5_A.csv").read_bytes()


def test_format_value():
    assert format_value("iter", 17) == "17"
    assert format_value("res", 1.23456e-9) == "1.23e-09"
    assert format_value("mu_A", 8724.1) == "8.724e+03"
    assert format_value("lambda", 0.05) == "0.0500"
    assert format_value("mu_M", float("inf")) == "inf"
    assert format_value("res", None) == ""


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert output_dir() == str(tmp_path / "env")
    assert main(["run", "group1a", "--eta", "3", "--no-solve"]) == 0
    assert (tmp_path / "env" / "group1a.csv").exists()
    monkeypatch.delenv(OUT_ENV)
    assert output_dir() == "results"


def test_exit_code_on_row_failure(tmp_path, capsys):
    assert main(["run", "group3", "--eta", "6", "--out", str(tmp_path)]) == 2
    out = capsys.readouterr().out
    assert "nonpositive curvature" in out
    row = next(l for l in (tmp_path / "group3.csv").read_text().splitlines() if l.startswith("group3,"))
    assert ",error," in row


def test_cli_formats(tmp_path):
    assert main(["run", "ex1", "--eta", "4,6", "--out", str(tmp_path), "--format", "markdown"]) == 0
    md = (tmp_path / "ex1.md").read_text().splitlines()
    assert len(md) == 4
    with pytest.raises(SystemExit):
        main(["run", "ex1", "--eta", "0"])
    with pytest.raises(SystemExit):
        main(["run", "ex1", "--coupling", "fast_2n", "--eta", "4"])


def test_cli_spectrum(tmp_path, capsys):
    assert main(["spectrum", "ex1", "--eta", "6", "--what", "precond", "--out", str(tmp_path)]) == 0
    ev = np.loadtxt(tmp_path / "ex1_6_precond.csv")
    assert len(ev) == 18 and np.all(ev > 0)
    assert main(["spectrum", "group1a", "--eta", "4", "--what", "diff", "--out", str(tmp_path)]) == 0
    assert len(np.loadtxt(tmp_path / "group1a_4_diff.csv")) == 20


def test_cli_check_subset(capsys):
    assert main(["check", "permutation", "oracles"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and all(l.startswith("[PASS]") for l in out)
    with pytest.raises(SystemExit):
        main(["check", "nope"])


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable(tmp_path):
    t = run_experiment("group1a", etas=(3,), solvers=False, analyses=())
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(stat.S_IRUSR | stat.S_IXUSR)
    with pytest.raises(OSError):
        emit_table(t, "csv", str(ro / "t.csv"))


def test_missing_directory():
    t = run_experiment("group1a", etas=(3,), solvers=False, analyses=())
    with pytest.raises(OSError):
        emit_table(t, "csv", "/nonexistent/dir/t.csv")


def test_ex3_coupling_override():
    a = run_row(get_preset("ex3"), 4, analyses=())
    b = run_row(get_preset("ex3"), 4, analyses=(), coupling="fast_2n")
    assert a["status"] == b["status"] == "ok" and a["d_n"] == b["d_n"] == 48


def test_all_presets_build_small():
    for name in PRESETS:
        prob = get_preset(name).build(4)
        assert prob.A.shape[0] == prob.d_n
