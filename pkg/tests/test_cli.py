import json

import numpy as np
import pytest

from seqmem.cli import main
from seqmem.experiments import CounterStream, sample_bernoulli_matrix
from seqmem.io import load_network, read_matrix, write_matrix
from seqmem.network import FiringMatrix, verify_memorization


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_bound_invert(capsys):
    code, out, _ = run(capsys, "bound-invert", "--N", 10, "--p", 0.5, "--eta-tilde", 0.125, "--target", 1e-3)
    assert code == 0 and out == "34002\n"


def test_bound_eval(capsys):
    code, out, _ = run(capsys, "bound-eval", "--L", 100, "--N", 2)
    assert code == 0 and json.loads(out)["clamped"] == 1.0
    code, out, _ = run(capsys, "bound-eval", "--L", 100, "--N", 2, "--format", "csv")
    assert out.splitlines()[0] == "term_hebb,term_binom,total,clamped"


def test_bound_sweep_default(tmp_path, capsys):
    out_path = tmp_path / "fig.csv"
    code, _, _ = run(capsys, "bound-sweep", "--out", out_path)
    lines = out_path.read_text().splitlines()
    assert code == 0 and len(lines) == 69
    assert lines[1].startswith("10,0.001,34002,")
    assert any(line.startswith("100,1e-06,540231,") for line in lines)
    assert lines[-1].startswith("10000,1e-12,93434406,")


def test_bad_parameter_exit_2(capsys):
    code, _, err = run(capsys, "bound-eval", "--L", 0, "--N", 2)
    assert code == 2 and "L must be" in err


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["bound-eval", "--N"])
    assert info.value.code == 2


@pytest.fixture
def zeros(tmp_path):
    path = tmp_path / "zeros.mat"
    write_matrix(path, FiringMatrix(np.zeros((4, 3), dtype=np.uint8)))
    return path


def test_verify_zero_instance(tmp_path, capsys, zeros):
    net = tmp_path / "zero.net"
    assert run(capsys, "train", "--matrix", zeros, "--out", net)[0] == 0
    code, out, _ = run(capsys, "verify", "--net", net, "--matrix", zeros)
    assert code == 0 and json.loads(out)["perfect"] is True


def test_verify_imperfect_exit_1(tmp_path, capsys):
    mat = tmp_path / "a.mat"
    write_matrix(mat, FiringMatrix.from_columns([[1, 0], [1, 0], [0, 1]]))
    net = tmp_path / "a.net"
    run(capsys, "train", "--matrix", mat, "--out", net)
    code, out, err = run(capsys, "verify", "--net", net, "--matrix", mat)
    assert code == 1 and json.loads(out)["inconsistencies"] == [[1, 2]]
    assert "imperfect" in err


@pytest.mark.parametrize("mode", ["single", "multi"])
def test_train_verify_round_trip(tmp_path, capsys, mode):
    for seed in range(5):
        A = sample_bernoulli_matrix(60, 6, 0.5, CounterStream(seed, 0))
        mat, net = tmp_path / f"{seed}.mat", tmp_path / f"{seed}.net"
        write_matrix(mat, A)
        assert run(capsys, "train", "--matrix", mat, "--mode", mode, "--out", net)[0] == 0
        in_memory = verify_memorization(load_network(net), A).perfect
        code, out, _ = run(capsys, "verify", "--net", net, "--matrix", mat)
        assert json.loads(out)["perfect"] == in_memory and code == (0 if in_memory else 1)


def test_residual_csv(tmp_path, capsys):
    mat, res = tmp_path / "a.mat", tmp_path / "res.csv"
    write_matrix(mat, sample_bernoulli_matrix(40, 8, 0.5, CounterStream(3, 0)))
    run(capsys, "train", "--matrix", mat, "--mode", "multi", "--residual-csv", res, "--out", tmp_path / "n")
    assert res.read_text().splitlines()[0] == "update_index,residual_max,residual_l2"


def test_structural_failure_exit_2(tmp_path, capsys):
    mat = tmp_path / "a.mat"
    write_matrix(mat, FiringMatrix.from_columns([[0, 0], [1, 0], [0, 1]]))
    code, _, err = run(capsys, "train", "--matrix", mat, "--mode", "multi")
    assert code == 2 and "structurally" in err


def test_malformed_matrix_exit_2(tmp_path, capsys):
    mat = tmp_path / "bad.mat"
    mat.write_text("2 3\n101\n10\n")
    code, _, err = run(capsys, "rank", "--matrix", mat)
    assert code == 2 and "line 3" in err


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, _ = run(capsys, "rank", "--matrix", tmp_path / "nope.mat")
    assert code == 2


def test_version_mismatch_exit_2(tmp_path, capsys, zeros):
    net = tmp_path / "zero.net"
    run(capsys, "train", "--matrix", zeros, "--out", net)
    d = json.loads(net.read_text())
    d["format_version"] = 99
    net.write_text(json.dumps(d))
    code, _, err = run(capsys, "verify", "--net", net, "--matrix", zeros)
    assert code == 2 and "format_version" in err


def test_run_adversarial(tmp_path, capsys, worked_matrix):
    mat, net = tmp_path / "w.mat", tmp_path / "w.net"
    write_matrix(mat, worked_matrix)
    run(capsys, "train", "--matrix", mat, "--eta-tilde", 0.125, "--out", net)
    out_path = tmp_path / "traj.mat"
    code, _, _ = run(capsys, "run", "--net", net, "--matrix", mat, "--init-col", 1,
                     "--steps", 3, "--policy", "adversarial", "--out", out_path)
    traj = read_matrix(out_path)
    assert code == 0 and traj.bits.T.tolist() == [[0, 1, 1], [1, 0, 1], [0, 1, 1]]


def test_mc_report(capsys):
    code, out, _ = run(capsys, "mc", "--L", 1, "--N", 2, "--p", 0.5, "--eta-tilde", 0.125,
                       "--trials", 4096, "--seed", 7)
    rep = json.loads(out)
    assert code == 0 and rep["ci_low"] <= 0.5 <= rep["ci_high"]


def test_mc_idempotent(tmp_path, capsys, monkeypatch):
    args = ["mc", "--L", 6, "--N", 3, "--trials", 500, "--seed", 4]
    first = json.loads(run(capsys, *args)[1])
    monkeypatch.setenv("SEQMEM_WORKERS", "2")
    second = json.loads(run(capsys, *args, "--workers", 2)[1])
    first.pop("elapsed_seconds"), second.pop("elapsed_seconds")
    assert first == second


def test_mc_trial_csv(tmp_path, capsys):
    path = tmp_path / "trials.csv"
    run(capsys, "mc", "--L", 3, "--N", 2, "--trials", 10, "--trial-csv", path)
    assert path.read_text().splitlines()[0] == "trial_index,perfect,failure_count"


def test_exhaustive(capsys):
    code, out, _ = run(capsys, "exhaustive", "--L", 1, "--N", 2, "--p", 0.5, "--eta-tilde", 0.125)
    assert code == 0 and json.loads(out)["probability"] == 0.5


def test_exhaustive_cap(capsys):
    code, _, err = run(capsys, "exhaustive", "--L", 5, "--N", 5)
    assert code == 2 and "cap" in err


def test_mgf(capsys):
    code, out, _ = run(capsys, "mgf", "--samples", 2000)
    d = json.loads(out)
    assert code == 0 and d["bound"] == pytest.approx(1.06449, abs=1e-5)


def test_capacity(capsys):
    code, out, _ = run(capsys, "capacity", "--L", 1000000, "--N", 100)
    d = json.loads(out)
    assert code == 0 and d["sufficient_N"] == 216 and d["multi_pass_per_connection_lb"] == 1.0


def test_rank(tmp_path, capsys):
    mat = tmp_path / "p.mat"
    write_matrix(mat, FiringMatrix.from_columns([[1, 0], [0, 1]]))
    code, out, _ = run(capsys, "rank", "--matrix", mat)
    assert code == 0 and json.loads(out) == {"N": 2, "rank": 2, "full_rank": True, "exact": True}
    code, _, err = run(capsys, "rank", "--matrix", mat, "--cap", 1)
    assert code == 2 and "--float" in err
    code, out, _ = run(capsys, "rank", "--matrix", mat, "--float")
    assert json.loads(out)["exact"] is False


def test_sample_is_idempotent(tmp_path, capsys):
    a, b = tmp_path / "a.mat", tmp_path / "b.mat"
    run(capsys, "sample", "--L", 5, "--N", 4, "--seed", 3, "--out", a)
    run(capsys, "sample", "--L", 5, "--N", 4, "--seed", 3, "--out", b)
    assert a.read_bytes() == b.read_bytes()
