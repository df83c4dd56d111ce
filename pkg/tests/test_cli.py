import csv
import json

import numpy as np
import pytest

from conftest import ref15_matrix
from supchol.cli import main
from supchol.generators import grid_laplacian
from supchol.matrix import SymmetricSparseMatrix, write_matrix_market
from supchol.ordering import minimum_degree, write_permutation


@pytest.fixture
def files(tmp_path):
    def put(name, A):
        p = tmp_path / name
        with open(p, "w") as fh:
            write_matrix_market(A, fh)
        return str(p)

    grid = put("grid.mtx", grid_laplacian(12))
    bad = put("bad.mtx", SymmetricSparseMatrix.from_dense([[4.0, 0, 0], [0, 1.0, 3.0], [0, 3.0, 1.0]]))
    fig = put("ref15.mtx", ref15_matrix())
    perm = tmp_path / "p.txt"
    with open(perm, "w") as fh:
        write_permutation(minimum_degree(grid_laplacian(12)), fh)
    return {"grid": grid, "bad": bad, "fig": fig, "perm": str(perm), "dir": tmp_path}


def test_analyze_report(files, capsys):
    assert main(["analyze", "--matrix", files["grid"], "--perm", files["perm"], "--merge-cap", "0.25"]) == 0
    rep = json.loads(capsys.readouterr().out)
    for key in ("supernodes_before_merge", "supernodes_after_merge", "factor_nnz",
                "storage_growth_pct", "blocks_before_refine", "blocks_after_refine"):
        assert key in rep
    assert rep["storage_growth_pct"] <= 25.0
    assert rep["blocks_after_refine"] <= rep["blocks_before_refine"]


def test_analyze_ref15_no_merge(files, capsys):
    perm = files["dir"] / "id.txt"
    perm.write_text(" ".join(str(i) for i in range(1, 16)))
    assert main(["analyze", "--matrix", files["fig"], "--perm", str(perm), "--merge-cap", "0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["supernodes_before_merge"] == rep["supernodes_after_merge"] == 6


def test_factor_simdev_writes_ledger(files, capsys):
    ledger = files["dir"] / "ledger.csv"
    argv = ["factor", "--matrix", files["grid"], "--method", "rlb", "--backend", "simdev",
            "--rlb-threshold", "0", "--variant", "streamed", "--ledger", str(ledger)]
    assert main(argv) == 0
    out = json.loads(capsys.readouterr().out)
    rows = list(csv.DictReader(open(ledger)))
    assert rows and list(rows[0]) == ["event_index", "kind", "bytes", "sync", "supernode", "label"]
    assert out["ledger"]["counts"]["H2D"] == out["supernodes_after_merge"]


def test_factor_default_threshold_keeps_small_matrix_on_host(files, capsys):
    ledger = files["dir"] / "l.csv"
    argv = ["factor", "--matrix", files["grid"], "--method", "rlb", "--backend", "simdev",
            "--rlb-threshold", "750000", "--variant", "streamed", "--ledger", str(ledger)]
    assert main(argv) == 0
    assert len(open(ledger).read().splitlines()) == 1


def test_factor_not_spd_names_column(files, capsys):
    assert main(["factor", "--matrix", files["bad"], "--method", "rl"]) == 2
    err = capsys.readouterr().err
    assert "not positive definite" in err and "original column" in err


def test_usage_errors_exit_1(files, capsys):
    assert main(["factor", "--matrix", files["grid"], "--bogus"]) == 1
    assert main([]) == 1
    assert main(["bench", "--matrix", files["grid"], "--methods", "nope"]) == 1


def test_missing_file_exit_2(capsys):
    assert main(["analyze", "--matrix", "/nonexistent/x.mtx"]) == 2
    assert "No such file" in capsys.readouterr().err


def test_solve_round_trip(files, capsys):
    out = files["dir"] / "x.txt"
    assert main(["solve", "--matrix", files["grid"], "--out", str(out)]) == 0
    x = np.loadtxt(out)
    assert np.allclose(x, 1.0, atol=1e-12)
    assert "backward error" in capsys.readouterr().err


def test_bench_and_profile(files, capsys):
    timings = files["dir"] / "t.csv"
    prof = files["dir"] / "p.csv"
    argv = ["bench", "--matrix", files["grid"], "--matrix", files["bad"],
            "--methods", "rl,rlb", "--repeats", "1", "--output", str(timings)]
    assert main(argv) == 0
    rows = list(csv.DictReader(open(timings)))
    assert len(rows) == 4 and [r["status"] for r in rows] == ["ok", "ok", "fail", "fail"]
    assert main(["profile", "--timings", str(timings), "--output", str(prof)]) == 0
    lines = open(prof).read().splitlines()
    assert lines[0] == "method,tau,rho"
