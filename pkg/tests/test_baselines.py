import numpy as np
import pytest

from forestprune.baselines import (baseline_trim, bsts, ccp_sweep,
                                   lasso_lambda_max, lasso_prune,
                                   predict_weighted, tree_node_counts)
from forestprune.ensembles import fit_bagging, fit_boosting, predict_ensemble
from forestprune.trees import predict_tree
from helpers import random_dataset


def test_trim_keep_all_is_identity():
    data = random_dataset(80, 4, seed=0)
    e = fit_bagging(data, n_trees=5, max_depth=3, rng_seed=0)
    sub, idx = baseline_trim(e, 5, rng_seed=1)
    assert np.array_equal(idx, np.arange(5))
    assert sub.gamma == e.gamma
    assert np.array_equal(predict_ensemble(sub, data.X), predict_ensemble(e, data.X))


def test_trim_boosting_keeps_prefix():
    data = random_dataset(80, 4, seed=1)
    e = fit_boosting(data, n_trees=6, max_depth=2, gamma=0.3, rng_seed=0)
    sub, idx = baseline_trim(e, 1, rng_seed=9)
    assert np.array_equal(idx, [0])
    manual = e.train_mean + e.gamma * predict_tree(e.trees[0], data.X)
    assert np.abs(predict_ensemble(sub, data.X) - manual).max() < 1e-12


def test_trim_bagging_deterministic_and_nested():
    data = random_dataset(80, 4, seed=2)
    e = fit_bagging(data, n_trees=8, max_depth=3, rng_seed=0)
    _, idx3a = baseline_trim(e, 3, rng_seed=5)
    _, idx3b = baseline_trim(e, 3, rng_seed=5)
    assert np.array_equal(idx3a, idx3b)
    _, idx5 = baseline_trim(e, 5, rng_seed=5)
    assert set(idx3a).issubset(set(idx5))  # same seed gives nested subsets
    sub, idx = baseline_trim(e, 4, rng_seed=5)
    assert sub.gamma == pytest.approx(1.0 / 4)


def test_lasso_lambda_max_zeroes_everything():
    data = random_dataset(100, 4, seed=3)
    e = fit_boosting(data, n_trees=8, max_depth=2, gamma=0.2, rng_seed=0)
    lmax = lasso_lambda_max(e, data.X, data.y)
    path = lasso_prune(e, data.X, data.y, np.array([lmax * 1.001]))
    assert np.all(path[0] == 0.0)
    below = lasso_prune(e, data.X, data.y, np.array([lmax * 0.9]))
    assert np.any(below[0] != 0.0)


def test_lasso_small_lambda_approaches_ols():
    data = random_dataset(120, 4, seed=4)
    e = fit_boosting(data, n_trees=5, max_depth=2, gamma=0.3, rng_seed=1)
    lmax = lasso_lambda_max(e, data.X, data.y)
    grid = np.geomspace(lmax * 0.999, lmax * 1e-8, 25)
    beta = lasso_prune(e, data.X, data.y, grid)[-1]
    T = np.column_stack([e.gamma * predict_tree(t, data.X) for t in e.trees])
    ols, *_ = np.linalg.lstsq(T, data.y - e.train_mean, rcond=None)
    assert np.abs(beta - ols).max() < 1e-4


@pytest.mark.parametrize("seed", range(5))
def test_lasso_kkt_conditions(seed):
    data = random_dataset(90, 4, seed=20 + seed)
    e = fit_boosting(data, n_trees=10, max_depth=2, gamma=0.2, rng_seed=seed)
    lmax = lasso_lambda_max(e, data.X, data.y)
    grid = np.geomspace(lmax * 0.8, lmax * 1e-3, 8)
    path = lasso_prune(e, data.X, data.y, grid)
    T = np.column_stack([e.gamma * predict_tree(t, data.X) for t in e.trees])
    yc = data.y - e.train_mean
    m = len(yc)
    for lam, beta in zip(grid, path):
        grad = (2.0 / m) * (T.T @ (yc - T @ beta))
        viol = np.where(beta != 0.0, np.abs(grad - lam * np.sign(beta)),
                        np.maximum(np.abs(grad) - lam, 0.0))
        assert viol.max() < 1e-6


def test_lasso_support_grows_down_the_path():
    data = random_dataset(100, 4, seed=5)
    e = fit_boosting(data, n_trees=10, max_depth=2, gamma=0.2, rng_seed=2)
    lmax = lasso_lambda_max(e, data.X, data.y)
    grid = np.geomspace(lmax * 0.999, lmax * 1e-4, 12)
    sizes = [int(np.count_nonzero(b)) for b in lasso_prune(e, data.X, data.y, grid)]
    assert all(a <= b for a, b in zip(sizes, sizes[1:]))


def test_lasso_rejects_bad_grid():
    data = random_dataset(40, 3, seed=6)
    e = fit_boosting(data, n_trees=3, max_depth=2, gamma=0.2, rng_seed=0)
    with pytest.raises(ValueError):
        lasso_prune(e, data.X, data.y, np.array([0.1, 0.5]))
    with pytest.raises(ValueError):
        lasso_prune(e, data.X, data.y, np.array([-0.1]))


def test_ccp_sweep_identity_and_collapse():
    data = random_dataset(90, 4, seed=7)
    e = fit_bagging(data, n_trees=4, max_depth=4, rng_seed=1)
    same = ccp_sweep(e, 0.0)
    assert int(tree_node_counts(same).sum()) == int(tree_node_counts(e).sum())
    stumps = ccp_sweep(e, np.inf)
    assert int(tree_node_counts(stumps).sum()) == 0
    assert all(t.node_count == 1 for t in stumps.trees)


def test_ccp_sweep_monotone_in_alpha():
    data = random_dataset(120, 4, seed=8)
    e = fit_bagging(data, n_trees=5, max_depth=5, rng_seed=2)
    counts = [int(tree_node_counts(ccp_sweep(e, a)).sum())
              for a in np.geomspace(1e-5, 1e3, 10)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_bsts_full_budget_is_global_ols():
    data = random_dataset(90, 4, seed=9)
    e = fit_boosting(data, n_trees=6, max_depth=2, gamma=0.3, rng_seed=3)
    total = int(tree_node_counts(e).sum())
    beta, sel = bsts(e, data.X, data.y, total, mode="exact")
    assert np.array_equal(sel, np.arange(6))
    T = np.column_stack([e.gamma * predict_tree(t, data.X) for t in e.trees])
    ols, *_ = np.linalg.lstsq(T, data.y - e.train_mean, rcond=None)
    assert np.abs(beta - ols).max() < 1e-8


def test_bsts_single_tree_budget_picks_best_tree():
    data = random_dataset(200, 4, seed=10)
    e = fit_bagging(data, n_trees=3, max_depth=2, rng_seed=4)
    sizes = tree_node_counts(e)
    assert np.all(sizes == sizes[0])  # complete depth-2 trees, equal sizes
    nu = int(sizes[0])
    beta, sel = bsts(e, data.X, data.y, nu, mode="exact")
    assert len(sel) == 1
    # enumeration oracle over the three single-tree fits
    best_i, best_sse = -1, np.inf
    for i, t in enumerate(e.trees):
        col = e.gamma * predict_tree(t, data.X)
        b = (col @ data.y) / (col @ col)
        sse = np.sum((data.y - b * col) ** 2)
        if sse < best_sse:
            best_i, best_sse = i, sse
    assert sel[0] == best_i


def test_bsts_budget_respected_and_empty_when_too_small():
    data = random_dataset(100, 4, seed=11)
    e = fit_boosting(data, n_trees=8, max_depth=3, gamma=0.2, rng_seed=5)
    sizes = tree_node_counts(e)
    for nu in (int(sizes.min()) - 1, int(sizes.min()), int(sizes.sum()) // 2):
        for mode in ("exact", "heuristic"):
            beta, sel = bsts(e, data.X, data.y, nu, mode=mode)
            assert sizes[sel].sum() <= nu
            assert np.all(beta[np.setdiff1d(np.arange(8), sel)] == 0.0)
    beta, sel = bsts(e, data.X, data.y, max(1, int(sizes.min()) - 1))
    assert sel.size == 0 and np.all(beta == 0.0)


def test_bsts_heuristic_close_to_exact():
    # exact mode always dominates; the heuristic lands within 5% on >= 90%
    close = 0
    trials = 20
    for seed in range(trials):
        data = random_dataset(80, 4, seed=40 + seed)
        e = fit_boosting(data, n_trees=9, max_depth=2, gamma=0.25, rng_seed=seed)
        sizes = tree_node_counts(e)
        nu = int(np.sort(sizes)[:3].sum())  # roughly a three-tree budget

        def obj(beta):
            pred = predict_weighted(e, data.X, beta)
            return float(np.mean((data.y - pred) ** 2))

        b_ex, _ = bsts(e, data.X, data.y, nu, mode="exact")
        b_h, _ = bsts(e, data.X, data.y, nu, mode="heuristic")
        assert obj(b_h) >= obj(b_ex) - 1e-10
        if obj(b_h) <= obj(b_ex) * 1.05 + 1e-12:
            close += 1
    assert close >= int(0.9 * trials)


def test_predict_weighted_matches_manual():
    data = random_dataset(60, 4, seed=12)
    e = fit_boosting(data, n_trees=4, max_depth=2, gamma=0.3, rng_seed=6)
    beta = np.array([0.5, 0.0, 1.2, -0.3])
    manual = e.train_mean + sum(
        beta[i] * e.gamma * predict_tree(t, data.X)
        for i, t in enumerate(e.trees))
    assert np.abs(predict_weighted(e, data.X, beta) - manual).max() < 1e-12
