import json

import numpy as np
import pytest

from revmarkov import io as rmio
from revmarkov import stationary_mixture
from revmarkov.cli import main


@pytest.fixture
def chain_files(tmp_path, chain_factory):
    P = chain_factory(8, 2)
    matrix = tmp_path / "P.mtx"
    rmio.write_matrix(matrix, P)
    pi = stationary_mixture(P)
    pi_file = tmp_path / "pi.txt"
    rmio.write_probability_vector(pi_file, pi)
    return tmp_path, matrix, pi_file, P, pi


def test_nearest_writes_output_and_diagnostics(chain_files, capsys):
    tmp, matrix, pi_file, P, pi = chain_files
    out = tmp / "R.mtx"
    diag = tmp / "diag.json"
    code = main(["nearest", str(matrix), "--out", str(out), "--diag", str(diag)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "|Delta|_F" in printed
    R = rmio.read_matrix(out)
    payload = json.loads(diag.read_text())
    assert payload["num_classes"] == 1
    assert max(payload["residuals"].values()) <= 1e-10
    from revmarkov import detailed_balance_residual

    assert detailed_balance_residual(R, stationary_mixture(P)) <= 1e-10


def test_nearest_with_explicit_pi_and_pg(chain_files):
    tmp, matrix, pi_file, *_ = chain_files
    code = main(
        ["nearest", str(matrix), "--pi", str(pi_file), "--solver", "pg",
         "--max-iterations", "5000"]
    )
    assert code == 0


def test_nearest_missing_file_is_io_error(tmp_path):
    assert main(["nearest", str(tmp_path / "absent.mtx")]) == 1


def test_mh_exit_codes(chain_files, capsys):
    tmp, matrix, pi_file, *_ = chain_files
    out = tmp / "T.mtx"
    assert main(["mh", str(matrix), "--out", str(out)]) == 0
    assert "distance" in capsys.readouterr().out
    assert out.exists()


def test_check_reversible_vs_not(tmp_path, reversible_factory, chain_factory):
    P, pi = reversible_factory(6, 1)
    matrix = tmp_path / "rev.mtx"
    pi_file = tmp_path / "pi.txt"
    rmio.write_matrix(matrix, P)
    rmio.write_probability_vector(pi_file, pi)
    assert main(["check", str(matrix), "--pi", str(pi_file)]) == 0

    Q = chain_factory(6, 5)
    matrix2 = tmp_path / "chain.mtx"
    pi2 = stationary_mixture(Q)
    pi2_file = tmp_path / "pi2.txt"
    rmio.write_matrix(matrix2, Q)
    rmio.write_probability_vector(pi2_file, pi2)
    assert main(["check", str(matrix2), "--pi", str(pi2_file), "--cycles", "4"]) == 2


def test_bench_small(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code = main(
        ["bench", "--n", "3", "--nmin", "30", "--nmax", "50", "--seed", "9",
         "--out", str(out)]
    )
    assert code == 0
    assert "dominance holds: True" in capsys.readouterr().out
    assert out.exists()


def test_langevin_writes_counts(tmp_path, capsys):
    out = tmp_path / "counts.mtx"
    code = main(
        ["langevin", "--steps", "20000", "--bins", "12", "--seed", "4",
         "--out", str(out)]
    )
    assert code == 0
    counts = rmio.read_matrix(out, stochastic=False)
    assert counts.n == 12
    assert counts.csr.sum() == 20000


def test_langevin_to_nearest_composition(tmp_path, capsys):
    # sigma high enough that every bin is visited in a short run
    counts = tmp_path / "counts.mtx"
    assert main(["langevin", "--steps", "200000", "--bins", "15", "--seed", "3",
                 "--sigma", "1.8", "--out", str(counts)]) == 0
    out = tmp_path / "R.mtx"
    assert main(["nearest", str(counts), "--normalize", "--out", str(out)]) == 0
    assert "|Delta|_F" in capsys.readouterr().out
    R = rmio.read_matrix(out)
    assert R.n == 15


def test_nearest_rejects_counts_with_unvisited_state(tmp_path, capsys):
    # an unvisited bin leaves a zero row: that is an input error, reported
    # cleanly rather than silently dropped
    counts = tmp_path / "counts.mtx"
    assert main(["langevin", "--steps", "50000", "--bins", "15", "--seed", "3",
                 "--out", str(counts)]) == 0
    assert main(["nearest", str(counts), "--normalize"]) == 1
    assert "no positive entries" in capsys.readouterr().err


def test_pattern_override_via_cli(chain_files):
    tmp, matrix, pi_file, P, pi = chain_files
    from revmarkov import SparsityPattern

    pattern_file = tmp / "pattern.mtx"
    rmio.write_pattern(pattern_file, SparsityPattern(np.ones((8, 8))))
    assert main(["nearest", str(matrix), "--pattern", str(pattern_file)]) == 0
