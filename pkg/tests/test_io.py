import numpy as np
import pytest

from forestprune.ensembles import fit_bagging, fit_boosting, predict_ensemble
from forestprune.io import (ModelFile, ModelFormatError, emit_report, load_csv,
                            load_model, report_rows, save_model)
from forestprune.solver import (build_problem, cbcd_solve, make_weights,
                                regularization_path, solution_metrics)
from helpers import random_dataset


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")


def test_load_csv_basic(tmp_path):
    p = tmp_path / "d.csv"
    write_csv(p, ["a", "b", "y"], [[1, 2, 3], [4, 5, 6]])
    data = load_csv(str(p), "y")
    assert data.m == 2 and data.p == 2
    assert data.feature_names == ["a", "b"]
    assert np.array_equal(data.y, [3.0, 6.0])
    assert np.array_equal(data.X, [[1.0, 2.0], [4.0, 5.0]])


def test_load_csv_missing_target_named(tmp_path):
    p = tmp_path / "d.csv"
    write_csv(p, ["a", "b"], [[1, 2]])
    with pytest.raises(ValueError, match="'resp'"):
        load_csv(str(p), "resp")


def test_load_csv_bad_cell_cites_location(tmp_path):
    p = tmp_path / "d.csv"
    rows = [[1, 2], [3, 4], [5, 6], [7, 8], [9, "oops"]]
    write_csv(p, ["a", "y"], rows)
    with pytest.raises(ValueError, match="row 5"):
        load_csv(str(p), "y")
    p2 = tmp_path / "nan.csv"
    write_csv(p2, ["a", "y"], [[1, 2], ["nan", 4]])
    with pytest.raises(ValueError, match="row 2.*'a'"):
        load_csv(str(p2), "y")


def test_load_csv_empty_and_ragged(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(ValueError, match="empty"):
        load_csv(str(p), "y")
    p2 = tmp_path / "ragged.csv"
    p2.write_text("a,y\n1,2\n3\n")
    with pytest.raises(ValueError, match="row 2"):
        load_csv(str(p2), "y")


@pytest.mark.parametrize("kind", ["bagging", "boosting"])
def test_roundtrip_prediction_bit_exact(kind, tmp_path):
    data = random_dataset(150, 5, seed=0)
    if kind == "bagging":
        e = fit_bagging(data, n_trees=10, max_depth=4, rng_seed=1)
    else:
        e = fit_boosting(data, n_trees=10, max_depth=3, gamma=0.17, rng_seed=1)
    path = tmp_path / "m.fp"
    save_model(ModelFile(e, provenance={"seed": "1"}), str(path))
    back = load_model(str(path))
    rng = np.random.default_rng(2)
    Xnew = rng.uniform(size=(1000, 5))
    assert np.array_equal(predict_ensemble(e, Xnew),
                          predict_ensemble(back.ensemble, Xnew))
    assert back.provenance["seed"] == "1"
    assert back.ensemble.kind == kind
    assert back.ensemble.gamma == e.gamma
    assert back.ensemble.train_mean == e.train_mean


def test_roundtrip_restores_solution_exactly(tmp_path):
    data = random_dataset(100, 4, seed=3)
    e = fit_bagging(data, n_trees=6, max_depth=3, rng_seed=2)
    prob = build_problem(e, data.X, data.y)
    sol = cbcd_solve(prob, 0.03, make_weights(e, "node"))
    beta = sol.beta * 1.1234567890123456
    path = tmp_path / "m.fp"
    save_model(ModelFile(e, (sol.z, beta)), str(path))
    back = load_model(str(path))
    assert np.array_equal(back.solution[0], sol.z)
    assert np.array_equal(back.solution[1], beta)


def test_truncated_file_rejected(tmp_path):
    data = random_dataset(60, 3, seed=4)
    e = fit_bagging(data, n_trees=3, max_depth=2, rng_seed=3)
    path = tmp_path / "m.fp"
    save_model(e, str(path))
    text = path.read_text().splitlines()
    broken = tmp_path / "broken.fp"
    broken.write_text("\n".join(text[:len(text) // 2]))
    with pytest.raises(ModelFormatError):
        load_model(str(broken))


def test_future_version_rejected(tmp_path):
    path = tmp_path / "m.fp"
    path.write_text("forestprune-model 99\nend\n")
    with pytest.raises(ModelFormatError, match="version"):
        load_model(str(path))
    not_model = tmp_path / "x.fp"
    not_model.write_text("something else\n")
    with pytest.raises(ModelFormatError):
        load_model(str(not_model))


def test_report_header_only_when_empty(tmp_path):
    out = tmp_path / "r.csv"
    emit_report([], str(out))
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("alpha,")


def test_report_rows_follow_path(tmp_path):
    data = random_dataset(120, 4, seed=5)
    e = fit_bagging(data, n_trees=8, max_depth=3, rng_seed=4)
    prob = build_problem(e, data.X, data.y)
    w = make_weights(e, "node")
    path = regularization_path(prob, w, grid_size=50, seed=0)
    rows = report_rows(path.alphas, path.solutions, None, path.passes)
    out = tmp_path / "r.csv"
    emit_report(rows, str(out))
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 51
    alphas = [float(ln.split(",")[0]) for ln in lines[1:]]
    assert all(a > b for a, b in zip(alphas, alphas[1:]))
    assert lines[1].split(",")[1] == "0"  # first point keeps no trees


def test_report_counts_match_model_recount(tmp_path):
    data = random_dataset(100, 4, seed=6)
    e = fit_bagging(data, n_trees=6, max_depth=4, rng_seed=5)
    prob = build_problem(e, data.X, data.y)
    w = make_weights(e, "node")
    sol = cbcd_solve(prob, 0.02, w)
    rows = report_rows([0.02], [sol])
    mpath = tmp_path / "m.fp"
    save_model(ModelFile(e, (sol.z, sol.beta)), str(mpath))
    back = load_model(str(mpath))
    z, beta = back.solution
    recount = solution_metrics(back.ensemble, z, beta, data.X, data.y)
    assert rows[0]["nodes_kept"] == recount["nodes_kept"]
    assert rows[0]["trees_kept"] == recount["trees_kept"]
    assert rows[0]["layers_kept"] == recount["layers_kept"]
    assert rows[0]["train_mse"] == pytest.approx(recount["train_mse"], abs=1e-12)


def test_text_format_report(tmp_path):
    rows = [{"alpha": 0.5, "trees_kept": 2, "layers_kept": 4, "nodes_kept": 10,
             "train_mse": 0.25, "valid_mse": None, "passes": 3}]
    out = tmp_path / "r.txt"
    emit_report(rows, str(out), fmt="text")
    text = out.read_text().splitlines()
    assert len(text) == 2
    assert "alpha" in text[0] and "passes" in text[0]
    with pytest.raises(ValueError):
        emit_report(rows, str(out), fmt="xml")
