import json

import numpy as np
import pytest

from eqvardag import Dag, Dataset, ParseError, SemSpec, load_csv, save_csv, simulate
from eqvardag.cli import main
from eqvardag.io import load_dag, save_spec


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_plain(self, tmp_path):
        d = load_csv(write(tmp_path, "a.csv", "1,0\n0,1\n"))
        assert (d.n, d.p) == (2, 2)
        assert d.column_names is None

    def test_header(self, tmp_path):
        d = load_csv(write(tmp_path, "a.csv", "x,y\n1,0\n0,1\n"), has_header=True)
        assert d.column_names == ("x", "y")
        assert d.n == 2

    def test_center(self, tmp_path):
        d = load_csv(write(tmp_path, "a.csv", "1\n3\n"), center=True)
        np.testing.assert_array_equal(d.values[:, 0], [-1.0, 1.0])
        assert d.metadata["centered"]

    def test_ragged(self, tmp_path):
        with pytest.raises(ParseError) as err:
            load_csv(write(tmp_path, "a.csv", "1,2\n3\n"))
        assert err.value.row == 2

    def test_non_numeric(self, tmp_path):
        with pytest.raises(ParseError) as err:
            load_csv(write(tmp_path, "a.csv", "1,2\n3,abc\n"))
        assert (err.value.row, err.value.column) == (2, 2)

    def test_empty(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, "a.csv", ""))

    def test_round_trip(self, tmp_path, chain3):
        d = simulate(chain3, 20, seed=0)
        save_csv(d, tmp_path / "d.csv")
        e = load_csv(tmp_path / "d.csv", has_header=True)
        np.testing.assert_array_equal(d.values, e.values)


@pytest.fixture
def files(tmp_path, chain3):
    spec_path = tmp_path / "spec.json"
    save_spec(chain3, spec_path, seed=1)
    data_path = tmp_path / "data.csv"
    save_csv(simulate(chain3, 4000, seed=1), data_path, header=False)
    true_path = write(tmp_path, "true.json", json.dumps(chain3.gamma_star.to_dict()))
    empty_path = write(tmp_path, "empty.json", json.dumps(Dag.empty(3).to_dict()))
    return tmp_path, spec_path, data_path, true_path, empty_path


class TestCli:
    def test_simulate(self, files):
        tmp, spec, *_ = files
        assert main(["simulate", "--spec", str(spec), "-n", "50", "--csv", str(tmp / "s.csv"),
                     "--seed", "3"]) == 0
        assert load_csv(tmp / "s.csv", has_header=True).n == 50

    def test_verify_chain(self, files, capsys):
        tmp, spec, *_ = files
        assert main(["verify-theorem1", "--spec", str(spec), "--out", str(tmp / "r.json")]) == 0
        rep = json.loads((tmp / "r.json").read_text())
        assert rep["verdict"] is True
        assert len(rep["argmin"]) == 2
        assert "argmin set (2 DAGs)" in capsys.readouterr().out

    def test_verify_two_node(self, tmp_path, chain2):
        save_spec(chain2, tmp_path / "s.json")
        assert main(["verify-theorem1", "--spec", str(tmp_path / "s.json"),
                     "--out", str(tmp_path / "r.json")]) == 0
        rep = json.loads((tmp_path / "r.json").read_text())
        assert rep["verdict"] and rep["delta_star"] == pytest.approx(0.2231, abs=1e-4)

    def test_verify_empty(self, tmp_path):
        save_spec(SemSpec(Dag.empty(2), ((), ())), tmp_path / "s.json")
        assert main(["verify-theorem1", "--spec", str(tmp_path / "s.json"),
                     "--out", str(tmp_path / "r.json")]) == 0
        rep = json.loads((tmp_path / "r.json").read_text())
        assert rep["verdict"] is True and rep["delta_star"] is None

    def test_score_all(self, files):
        tmp, _, data, *_ = files
        assert main(["score", str(data), "--all", "--out", str(tmp / "p.json")]) == 0
        rep = json.loads((tmp / "p.json").read_text())
        assert len(rep["dags"]) == 25
        assert sum(d["posterior"] for d in rep["dags"]) == pytest.approx(1.0, abs=1e-12)

    def test_score_single(self, files):
        tmp, _, data, true, empty = files
        assert main(["score", str(data), "--dag", str(true), "--out", str(tmp / "t.json")]) == 0
        assert main(["score", str(data), "--dag", str(empty), "--out", str(tmp / "e.json")]) == 0
        t = json.loads((tmp / "t.json").read_text())
        e = json.loads((tmp / "e.json").read_text())
        assert t["log_marginal"] > e["log_marginal"]
        assert len(t["r_jn"]) == 3

    def test_posterior_and_searches(self, files):
        tmp, _, data, *_ = files
        assert main(["posterior", str(data), "--top-k", "3", "--out", str(tmp / "p.json")]) == 0
        assert len(json.loads((tmp / "p.json").read_text())["dags"]) == 3
        assert main(["search-dp", str(data), "--out", str(tmp / "dp.json")]) == 0
        assert main(["score", str(data), "--dp"]) == 0
        assert main(["search-greedy", str(data), "--restarts", "3", "--out", str(tmp / "g.json")]) == 0
        dp = json.loads((tmp / "dp.json").read_text())
        gr = json.loads((tmp / "g.json").read_text())
        assert dp["map"] == gr["map"]
        assert dp["method"] == "dp"

    def test_dp_resource_exit(self, tmp_path):
        save_csv(Dataset(np.random.default_rng(0).normal(size=(40, 25))), tmp_path / "w.csv",
                 header=False)
        assert main(["score", str(tmp_path / "w.csv"), "--dp"]) == 4

    def test_enumeration_cap_exit(self, tmp_path):
        save_csv(Dataset(np.random.default_rng(0).normal(size=(40, 5))), tmp_path / "w.csv",
                 header=False)
        assert main(["posterior", str(tmp_path / "w.csv"), "--cap", "4"]) == 4

    def test_input_error_exit(self, tmp_path):
        write(tmp_path, "bad.csv", "1,2\nx,3\n")
        assert main(["posterior", str(tmp_path / "bad.csv")]) == 2
        assert main(["posterior", str(tmp_path / "missing.csv")]) == 2

    def test_numeric_error_exit(self, tmp_path):
        X = np.random.default_rng(0).normal(size=(30, 3))
        X[:, 2] = X[:, 0]
        save_csv(Dataset(X), tmp_path / "c.csv", header=False)
        assert main(["posterior", str(tmp_path / "c.csv")]) == 3

    def test_experiment(self, tmp_path, chain2, capsys):
        save_spec(chain2, tmp_path / "s.json")
        out = tmp_path / "exp"
        assert main(["experiment", "--spec", str(tmp_path / "s.json"), "--n-grid", "50", "200",
                     "--seeds", "3", "--families", "gaussian", "uniform", "--out", str(out)]) == 0
        assert {p.name for p in out.iterdir()} == {"report.json", "runs.csv", "manifest.json"}
        assert (out / "runs.csv").read_text().splitlines()[0] == \
            "family,n,seed,posterior_true,map_correct,rank_true"

    def test_experiment_config_file(self, tmp_path, chain2):
        cfg = {"spec": chain2.to_dict(), "n_grid": [30], "seeds": 2, "families": ["laplace"],
               "master_seed": 5}
        write(tmp_path, "cfg.json", json.dumps(cfg))
        assert main(["experiment", "--config", str(tmp_path / "cfg.json"),
                     "--out", str(tmp_path / "o")]) == 0
        rep = json.loads((tmp_path / "o" / "report.json").read_text())
        assert rep["config"]["master_seed"] == 5
        assert len(rep["runs"]) == 2


def test_load_dag(tmp_path):
    write(tmp_path, "d.json", '{"p": 3, "edges": [[0, 1], [1, 2]]}')
    assert load_dag(tmp_path / "d.json") == Dag.from_edges(3, [(0, 1), (1, 2)])
