"""Competing ensemble post-processors: trimming, LASSO, per-tree CCP, BSTS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import Ensemble
from .trees import ccp_prune, layer_node_counts, predict_tree

__all__ = [
    "Budget",
    "baseline_trim",
    "lasso_prune",
    "lasso_lambda_max",
    "ccp_sweep",
    "bsts",
    "predict_weighted",
    "tree_node_counts",
]


@dataclass
class Budget:
    max_nodes: int | None = None
    max_trees: int | None = None

    def __post_init__(self):
        if self.max_nodes is not None and self.max_nodes <= 0:
            raise ValueError("max_nodes must be positive")
        if self.max_trees is not None and self.max_trees <= 0:
            raise ValueError("max_trees must be positive")


def tree_node_counts(e: Ensemble) -> np.ndarray:
    """Per-tree node counts over layers 1..d (roots excluded, as everywhere)."""
    return np.array([int(layer_node_counts(t, e.d).sum()) for t in e.trees],
                    dtype=np.int64)


def baseline_trim(e: Ensemble, keep: int, rng_seed: int = 0) -> tuple[Ensemble, np.ndarray]:
    """Fewer-iterations baseline: keep a subset of trees.

    Bagging keeps a random subset (the same seed yields nested subsets
    across keep values, so budget sweeps are monotone) and renormalizes
    gamma to 1/keep; boosting keeps the first ``keep`` trees of the
    sequence unchanged. Returns the reduced ensemble and the kept indices.
    """
    if keep > e.n:
        raise ValueError("keep exceeds ensemble size")
    if e.kind == "bagging":
        if keep < 1:
            raise ValueError("bagging trim needs keep >= 1")
        perm = np.random.default_rng(rng_seed).permutation(e.n)
        idx = np.sort(perm[:keep])
        gamma = 1.0 / keep
    else:
        if keep < 0:
            raise ValueError("keep must be >= 0")
        idx = np.arange(keep)
        gamma = e.gamma
    trees = [e.trees[i] for i in idx]
    return Ensemble(trees, gamma, e.kind, e.d, e.train_mean,
                    list(e.feature_names)), idx


def _tree_pred_matrix(e: Ensemble, X: np.ndarray) -> np.ndarray:
    """Columns gamma * T_i(X)."""
    if e.n == 0:
        return np.zeros((X.shape[0], 0))
    return np.column_stack([e.gamma * predict_tree(t, X) for t in e.trees])


def predict_weighted(e: Ensemble, X: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """base + sum_i beta_i * gamma * T_i(X); evaluator for LASSO/BSTS models."""
    out = np.full(np.asarray(X).shape[0], e.base_prediction)
    for i, b in enumerate(np.asarray(beta, dtype=np.float64)):
        if b != 0.0:
            out += b * e.gamma * predict_tree(e.trees[i], X)
    return out


def lasso_lambda_max(e: Ensemble, X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty at which the all-zero weight vector is optimal."""
    T = _tree_pred_matrix(e, X)
    r = np.asarray(y, dtype=np.float64) - e.base_prediction
    if T.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs((2.0 / len(r)) * (T.T @ r))))


def lasso_prune(e: Ensemble, X: np.ndarray, y: np.ndarray,
                lambdas: np.ndarray, tol: float = 1e-10,
                max_sweeps: int = 10000) -> list[np.ndarray]:
    """L1-penalized tree weights along a descending penalty grid.

    Cyclic coordinate descent with soft thresholding on
    (1/m)||y - base - sum beta_i gamma T_i(X)||^2 + lam * sum |beta_i|,
    warm-started between grid points and iterated until the subgradient
    optimality conditions hold to 1e-8.
    """
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if np.any(lambdas <= 0):
        raise ValueError("lambda values must be positive")
    if np.any(np.diff(lambdas) > 0):
        raise ValueError("lambda grid must be descending")
    T = _tree_pred_matrix(e, X)
    m, n = T.shape
    yc = np.asarray(y, dtype=np.float64) - e.base_prediction
    col_sq = (2.0 / m) * np.einsum("ij,ij->j", T, T)
    beta = np.zeros(n)
    resid = yc.copy()
    path = []
    scale = max(1.0, float(np.abs(yc).max()))
    for lam in lambdas:
        for _ in range(max_sweeps):
            delta = 0.0
            for i in range(n):
                if col_sq[i] == 0.0:
                    continue
                old = beta[i]
                rho = (2.0 / m) * (T[:, i] @ resid) + col_sq[i] * old
                new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[i]
                if new != old:
                    resid -= T[:, i] * (new - old)
                    beta[i] = new
                    delta = max(delta, abs(new - old))
            if delta < tol * scale:
                grad = (2.0 / m) * (T.T @ resid)
                viol = np.where(beta != 0.0,
                                np.abs(grad - lam * np.sign(beta)),
                                np.maximum(np.abs(grad) - lam, 0.0))
                if viol.max() < 1e-8:
                    break
        path.append(beta.copy())
    return path


def ccp_sweep(e: Ensemble, ccp_alpha: float) -> Ensemble:
    """Apply cost-complexity pruning with one shared alpha to every tree."""
    trees = [ccp_prune(t, ccp_alpha) for t in e.trees]
    return Ensemble(trees, e.gamma, e.kind, e.d, e.train_mean,
                    list(e.feature_names))


def _ols_objective(G, c, yty, m, supp):
    sl = list(supp)
    if not sl:
        return yty / m, np.zeros(0)
    Gs = G[np.ix_(sl, sl)]
    cs = c[sl]
    try:
        b = np.linalg.solve(Gs, cs)
    except np.linalg.LinAlgError:
        b = np.linalg.lstsq(Gs, cs, rcond=None)[0]
    sse = yty - 2.0 * cs @ b + b @ Gs @ b
    return sse / m, b


def bsts(e: Ensemble, X: np.ndarray, y: np.ndarray, nu: int,
         mode: str = "exact", rng_seed: int = 0,
         lambda_grid_size: int = 30) -> tuple[np.ndarray, np.ndarray]:
    """Best subset tree selection under a total node budget.

    Picks whole trees with refit least-squares weights so that the chosen
    trees' node counts sum to at most ``nu``. Exact mode (n <= 22)
    enumerates the maximal feasible subsets, which is lossless because the
    refit loss only improves when a tree is added; heuristic mode seeds a
    swap search with supports from the LASSO path. Returns the full-length
    weight vector and the selected indices; a budget below every single
    tree yields the empty model.
    """
    sizes = tree_node_counts(e)
    n = e.n
    T = _tree_pred_matrix(e, X)
    yc = np.asarray(y, dtype=np.float64) - e.base_prediction
    m = len(yc)
    G = T.T @ T
    c = T.T @ yc
    yty = float(yc @ yc)

    def refit(supp):
        return _ols_objective(G, c, yty, m, supp)

    if mode == "exact":
        if n > 22:
            raise ValueError("exact mode supports at most 22 trees")
        best = [yty / m, (), np.zeros(0)]

        def rec(i, used, chosen):
            if used + sizes[i:].sum() <= nu:
                chosen = chosen + tuple(range(i, n))
                obj, b = refit(chosen)
                if obj < best[0] - 1e-15 * max(1.0, best[0]):
                    best[0], best[1], best[2] = obj, chosen, b
                return
            if i == n:
                for j in range(n):
                    if j not in chosen and sizes[j] <= nu - used:
                        return  # not maximal; a superset is enumerated elsewhere
                obj, b = refit(chosen)
                if obj < best[0] - 1e-15 * max(1.0, best[0]):
                    best[0], best[1], best[2] = obj, chosen, b
                return
            if sizes[i] <= nu - used:
                rec(i + 1, used + sizes[i], chosen + (i,))
            rec(i + 1, used, chosen)

        rec(0, 0, ())
        supp, b = best[1], best[2]
    elif mode == "heuristic":
        def greedy_fill(supp):
            """Forward-add the best-fitting tree while the budget allows."""
            supp = tuple(sorted(supp))
            used = int(sizes[list(supp)].sum()) if supp else 0
            obj, b = refit(supp)
            while True:
                step = None
                for j in range(n):
                    if j in supp or used + sizes[j] > nu:
                        continue
                    o, bj = refit(tuple(sorted(supp + (j,))))
                    if step is None or o < step[0]:
                        step = (o, j, bj)
                if step is None or step[0] >= obj - 1e-12:
                    break
                obj, b = step[0], step[2]
                supp = tuple(sorted(supp + (step[1],)))
                used += int(sizes[step[1]])
            return obj, supp, b

        incumbent = greedy_fill(())
        lmax = lasso_lambda_max(e, X, y)
        if lmax > 0:
            grid = np.geomspace(lmax * 0.999, lmax * 1e-4, lambda_grid_size)
            for bl in lasso_prune(e, X, y, grid):
                supp = [int(i) for i in np.nonzero(bl)[0]]
                supp.sort(key=lambda i: -abs(bl[i]))
                while supp and sizes[supp].sum() > nu:
                    supp.pop()
                cand = greedy_fill(supp)
                if cand[0] < incumbent[0]:
                    incumbent = cand
        for _ in range(50):
            obj0, supp0, _ = incumbent
            used = int(sizes[list(supp0)].sum()) if supp0 else 0
            moved = False
            for out in supp0:  # drop one, refill greedily
                cand = greedy_fill(tuple(k for k in supp0 if k != out))
                if cand[0] < incumbent[0] - 1e-12:
                    incumbent = cand
                    moved = True
                    break
            if moved:
                continue
            for out in supp0:  # one-for-one swaps
                for j in range(n):
                    if j in supp0 or used - sizes[out] + sizes[j] > nu:
                        continue
                    o, b = refit(tuple(sorted(
                        [k for k in supp0 if k != out] + [j])))
                    if o < incumbent[0] - 1e-12:
                        incumbent = (o, tuple(sorted(
                            [k for k in supp0 if k != out] + [j])), b)
                        moved = True
                        break
                if moved:
                    break
            if not moved:
                break
        supp, b = incumbent[1], incumbent[2]
    else:
        raise ValueError(f"unknown bsts mode {mode!r}")

    beta = np.zeros(n)
    if supp:
        beta[list(supp)] = b
    return beta, np.array(sorted(supp), dtype=np.int64)
