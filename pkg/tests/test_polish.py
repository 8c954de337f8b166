import numpy as np
import pytest

from forestprune.ensembles import fit_bagging
from forestprune.polish import (PolishBasis, build_polish_basis, expand_beta,
                                ridge_polish, subset_polish,
                                subset_polish_exact)
from forestprune.solver import build_problem, cbcd_solve, make_weights
from helpers import random_dataset


def random_basis(m, s, seed, orthonormal=False):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(m, s))
    if orthonormal:
        B, _ = np.linalg.qr(B)
        B = B[:, :s]
    y = rng.normal(size=m)
    return PolishBasis(B, np.arange(s)), y


def test_ridge_orthonormal_small_alpha_is_ols():
    basis, y = random_basis(30, 4, seed=0, orthonormal=True)
    beta = ridge_polish(basis, y, alpha2=1e-12)
    # for orthonormal columns OLS is B'y (with the 1/m folded out)
    assert np.abs(beta - basis.B.T @ y).max() < 1e-8


def test_ridge_large_alpha_shrinks_to_zero():
    basis, y = random_basis(30, 4, seed=1)
    beta = ridge_polish(basis, y, alpha2=1e12)
    assert np.abs(beta).max() < 1e-9


def test_ridge_requires_positive_alpha():
    basis, y = random_basis(10, 2, seed=2)
    with pytest.raises(ValueError):
        ridge_polish(basis, y, alpha2=0.0)


@pytest.mark.parametrize("seed", range(10))
def test_ridge_normal_equations_and_gradient(seed):
    basis, y = random_basis(20, 5, seed=10 + seed)
    a2 = float(10.0 ** np.random.default_rng(seed).uniform(-4, 0))
    beta = ridge_polish(basis, y, a2)
    B = basis.B
    m = B.shape[0]
    res = (B.T @ B / m + a2 * np.eye(5)) @ beta - B.T @ y / m
    assert np.abs(res).max() < 1e-8

    def f(b):
        return np.mean((y - B @ b) ** 2) + a2 * np.sum(b ** 2)

    h = 1e-6
    for j in range(5):
        e = np.zeros(5)
        e[j] = h
        fd = (f(beta + e) - f(beta - e)) / (2 * h)
        assert abs(fd) < 1e-6


def test_ridge_objective_beats_all_ones_start():
    data = random_dataset(100, 4, seed=3)
    e = fit_bagging(data, n_trees=6, max_depth=3, rng_seed=1)
    prob = build_problem(e, data.X, data.y)
    w = make_weights(e, "node")
    sol = cbcd_solve(prob, 0.02, w)
    basis = build_polish_basis(prob, sol.z)
    y_resid = prob.y - prob.base
    a2 = 1e-2
    beta = ridge_polish(basis, y_resid, a2)

    def f(b):
        return np.mean((y_resid - basis.B @ b) ** 2) + a2 * np.sum(b ** 2)

    assert f(beta) <= f(np.ones(basis.B.shape[1])) + 1e-12


def test_subset_zero_alpha_approaches_least_squares():
    basis, y = random_basis(40, 4, seed=4)
    beta = subset_polish(basis, y, alpha2=0.0, max_iters=20000, tol=1e-14)
    ols, *_ = np.linalg.lstsq(basis.B, y, rcond=None)
    assert np.abs(beta - ols).max() < 1e-5


def test_subset_huge_alpha_empties():
    basis, y = random_basis(40, 4, seed=5)
    assert np.all(subset_polish(basis, y, alpha2=1e12) == 0.0)


def test_subset_orthogonal_matches_enumeration():
    rng = np.random.default_rng(6)
    B = np.linalg.qr(rng.normal(size=(24, 3)))[0][:, :3] * 3.0
    basis = PolishBasis(B, np.arange(3))
    y = rng.normal(size=24)
    for a2 in (1e-4, 1e-3, 1e-2, 1e-1):
        iht = subset_polish(basis, y, a2, max_iters=5000)
        exact = subset_polish_exact(basis, y, a2)
        assert np.array_equal(iht != 0, exact != 0)
        assert np.abs(iht - exact).max() < 1e-6


def test_subset_objective_nonincreasing():
    for seed in range(5):
        basis, y = random_basis(30, 6, seed=20 + seed)
        trace = []
        subset_polish(basis, y, alpha2=0.03, trace=trace)
        assert all(a >= b - 1e-12 for a, b in zip(trace, trace[1:]))


def test_subset_support_shrinks_with_alpha2():
    basis, y = random_basis(50, 6, seed=7)
    supports = []
    for a2 in np.geomspace(1e-5, 1.0, 10):
        beta = subset_polish(basis, y, float(a2), max_iters=5000)
        supports.append(int(np.count_nonzero(beta)))
    assert all(a >= b for a, b in zip(supports, supports[1:]))


def test_exact_enumerator_caps_at_20():
    basis, y = random_basis(30, 21, seed=8)
    with pytest.raises(ValueError):
        subset_polish_exact(basis, y, 0.1)


@pytest.mark.parametrize("seed", range(10))
def test_iht_matches_enumeration_on_small_random(seed):
    rng = np.random.default_rng(100 + seed)
    s = int(rng.integers(3, 9))
    basis, y = random_basis(20, s, seed=100 + seed)
    a2 = float(10.0 ** rng.uniform(-3, -0.5))
    iht = subset_polish(basis, y, a2, max_iters=5000)
    exact = subset_polish_exact(basis, y, a2)

    def f(b):
        return np.mean((y - basis.B @ b) ** 2) + a2 * np.count_nonzero(b)

    assert f(iht) <= f(exact) * (1 + 1e-9) + 1e-12


def test_basis_construction_drops_zero_columns_and_maps_indices():
    data = random_dataset(80, 4, seed=9)
    e = fit_bagging(data, n_trees=5, max_depth=3, rng_seed=2)
    prob = build_problem(e, data.X, data.y)
    w = make_weights(e, "node")
    sol = cbcd_solve(prob, 0.02, w)
    basis = build_polish_basis(prob, sol.z)
    assert basis.B.shape[1] == len(basis.tree_indices)
    for j in range(basis.B.shape[1]):
        assert np.any(basis.B[:, j] != 0.0)
        i = basis.tree_indices[j]
        assert np.array_equal(basis.B[:, j], prob.gamma * prob.prefix[i, sol.z[i]])
    full = expand_beta(basis, np.arange(1.0, basis.B.shape[1] + 1), prob.n)
    assert full.shape == (prob.n,)
    assert np.all(full[basis.tree_indices] == np.arange(1.0, basis.B.shape[1] + 1))
