import json
import subprocess
import sys

import numpy as np
import pytest

from ds3.admm import objective
from ds3.cli import main
from ds3.matrix import load_matrix, normalize, save_matrix


@pytest.fixture
def scene(tmp_path):
    prefix = str(tmp_path / "s")
    assert main(["synth", "--means", "0,0;5,5;-1,7", "--std", "1",
                 "--count", "15", "--seed", "4", "--out", prefix]) == 0
    return prefix


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, out


def test_synth_outputs(scene):
    D = load_matrix(scene + "_dissim.csv")
    assert D.shape == (45, 45)
    with open(scene + "_labels.csv") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "role,index,label" and len(lines) == 91
    with open(scene + "_points.csv") as fh:
        assert fh.readline().strip() == "role,index,x,y"


def test_solve_report(scene, capsys):
    code, out = _run(["solve", "--dissim", scene + "_dissim.csv", "--alpha",
                      "0.1", "--emit-z"], capsys)
    assert code == 0
    r = json.loads(out)
    assert r["schema"] == "ds3/1" and r["converged"]
    assert len(r["representatives"]) >= 3
    assert set(r["assignment_hard"]) <= set(r["representatives"])
    assert r["outliers"] is None
    D = normalize(load_matrix(scene + "_dissim.csv"))
    again = objective(D, np.array(r["Z"]), r["lambda_used"], r["settings"]["p"])
    assert abs(again - r["objective"]) <= 1e-9
    norms = np.array(r["row_norms"])
    want = np.flatnonzero(norms > 0.01 * norms.max()).tolist()
    assert r["representatives"] == want


@pytest.mark.parametrize("p", ["inf", "2"])
def test_alpha_above_threshold_one_rep(scene, capsys, p):
    code, out = _run(["solve", "--dissim", scene + "_dissim.csv", "--p", p,
                      "--alpha", "1.05"], capsys)
    r = json.loads(out)
    assert code == 0 and r["representatives"] == [r["l_star"]]


def test_deterministic_bytes_and_threads(scene, tmp_path):
    outs = []
    for threads in ("1", "8", "8"):
        path = tmp_path / ("r%d.json" % len(outs))
        assert main(["solve", "--dissim", scene + "_dissim.csv", "--alpha",
                     "0.05", "--threads", threads, "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_lambda_command(scene, capsys):
    code, out = _run(["lambda", "--dissim", scene + "_dissim.csv"], capsys)
    r = json.loads(out)
    assert code == 0
    assert r["lambda_max_inf"] > 0 and r["lambda_max_2"] > 0
    assert r["lambda_min"] > 0


def test_lambda_min_absent_for_rectangular(tmp_path, capsys):
    save_matrix(np.array([[0.0, 1, 2], [1, 0, 3]]), tmp_path / "d.csv")
    code, out = _run(["lambda", "--dissim", str(tmp_path / "d.csv")], capsys)
    assert code == 0 and json.loads(out)["lambda_min"] is None


def test_sweep_command(scene, capsys):
    code = main(["sweep", "--dissim", scene + "_dissim.csv", "--alphas",
                 "0.01,0.1,0.5"])
    cap = capsys.readouterr()
    r = json.loads(cap.out)
    assert code == 0 and len(r["reports"]) == 3
    counts = [s["n_representatives"] for s in r["summary"]]
    assert counts == sorted(counts, reverse=True)
    assert "#reps" in cap.err


def test_outliers_command(scene, capsys):
    code, out = _run(["outliers", "--dissim", scene + "_dissim.csv",
                      "--alpha", "0.1", "--beta", "1", "--tau", "0.2"],
                     capsys)
    r = json.loads(out)
    assert code == 0
    assert len(r["outliers"]) == 45
    assert r["outlier_labels"] == [e > 0.5 for e in r["outliers"]]
    code = main(["outliers", "--dissim", scene + "_dissim.csv", "--alpha",
                 "0.1", "--beta", "1"])
    assert code == 2


def test_assign_command(scene, tmp_path, capsys):
    rep = tmp_path / "r.json"
    main(["solve", "--dissim", scene + "_dissim.csv", "--alpha", "0.1",
          "--emit-z", "--out", str(rep)])
    code, out = _run(["assign", "--dissim", scene + "_dissim.csv",
                      "--report", str(rep), "--soft"], capsys)
    r = json.loads(out)
    solved = json.loads(rep.read_text())
    assert code == 0
    assert r["assignment_hard"] == solved["assignment_hard"]
    soft = np.array(r["assignment_soft"])
    assert np.allclose(soft.sum(axis=0), 1)
    code, out = _run(["assign", "--dissim", scene + "_dissim.csv",
                      "--reps", "0,20"], capsys)
    assert code == 0 and set(json.loads(out)["assignment_hard"]) <= {0, 20}
    assert main(["assign", "--dissim", scene + "_dissim.csv",
                 "--reps", "99"]) == 2


def test_exit_codes(tmp_path, scene, capsys):
    assert main(["solve", "--dissim", str(tmp_path / "none.csv"),
                 "--alpha", "0.1"]) == 2
    assert "no such file" in capsys.readouterr().err
    (tmp_path / "bad.csv").write_text("0,1\n2\n")
    assert main(["solve", "--dissim", str(tmp_path / "bad.csv"),
                 "--alpha", "0.1"]) == 2
    code, out = _run(["solve", "--dissim", scene + "_dissim.csv", "--alpha",
                      "0.1", "--max-iter", "3"], capsys)
    assert code == 4 and json.loads(out)["converged"] is False
    with pytest.raises(SystemExit) as info:
        main(["solve", "--dissim", scene + "_dissim.csv"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main(["solve", "--dissim", scene + "_dissim.csv", "--alpha", "1",
              "--lambda", "1"])


def test_binary_input_and_raw_scale(tmp_path, capsys):
    d = np.array([[0.0, 4.0], [4.0, 0.0]])
    save_matrix(d, tmp_path / "d.bin", "bin")
    code, out = _run(["solve", "--dissim", str(tmp_path / "d.bin"),
                      "--format", "bin", "--lambda", "1", "--no-normalize"],
                     capsys)
    r = json.loads(out)
    assert code == 0 and r["scale_factor"] == 1 and r["lambda_used"] == 1
    assert r["representatives"] == [0, 1]


def test_module_entry_point(scene):
    res = subprocess.run([sys.executable, "-m", "ds3", "lambda", "--dissim",
                          scene + "_dissim.csv"], capture_output=True,
                         text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["schema"] == "ds3/1"
