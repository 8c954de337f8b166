"""Bagging and gradient-boosting ensembles over regression trees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .trees import Dataset, RegressionTree, fit_tree, predict_tree, truncate_tree

__all__ = ["Ensemble", "fit_bagging", "fit_boosting", "predict_ensemble"]


@dataclass
class Ensemble:
    """Ordered tree collection with dampening factor gamma.

    For bagging gamma is 1/n and the base prediction is 0; each tree keeps
    its own intercept (root mean). For boosting gamma is the learning rate
    and the never-pruned intercept is ``train_mean``, added outside the
    gamma-sum so an empty model predicts the training mean instead of 0.
    """

    trees: list[RegressionTree]
    gamma: float
    kind: str  # "bagging" | "boosting"
    d: int
    train_mean: float = 0.0
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("bagging", "boosting"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.trees:
            p = self.trees[0].n_features
            if any(t.n_features != p for t in self.trees):
                raise ValueError("trees disagree on feature dimensionality")

    @property
    def n(self) -> int:
        return len(self.trees)

    @property
    def p(self) -> int:
        if not self.trees:
            return len(self.feature_names)
        return self.trees[0].n_features

    @property
    def base_prediction(self) -> float:
        return self.train_mean if self.kind == "boosting" else 0.0

    def tree_baselines(self) -> np.ndarray:
        """Per-tree root-layer baseline: root mean for bagging, 0 for boosting.

        A tree pruned to depth 0 contributes exactly its baseline, so under
        boosting it is removed entirely while under bagging its intercept
        stays folded into the ensemble constant.
        """
        if self.kind == "bagging":
            return np.array([t.mu[0] for t in self.trees], dtype=np.float64)
        return np.zeros(self.n, dtype=np.float64)


def fit_bagging(data: Dataset, n_trees: int, max_depth: int,
                feature_subsample: int | None = None, rng_seed: int = 0,
                min_leaf: int = 1) -> Ensemble:
    """Fit trees on bootstrap resamples with per-split feature subsampling.

    ``feature_subsample`` defaults to floor(sqrt(p)).
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if feature_subsample is None:
        feature_subsample = max(1, int(np.sqrt(data.p)))
    m = data.m
    seeds = np.random.SeedSequence(rng_seed).spawn(n_trees)
    trees = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        rows = rng.integers(0, m, size=m)
        sub = Dataset(data.X[rows], data.y[rows], data.feature_names)
        tree_seed = int(ss.generate_state(1)[0])
        trees.append(fit_tree(sub, max_depth, min_leaf, feature_subsample, tree_seed))
    return Ensemble(trees, gamma=1.0 / n_trees, kind="bagging", d=max_depth,
                    feature_names=list(data.feature_names))


def fit_boosting(data: Dataset, n_trees: int, max_depth: int, gamma: float,
                 row_subsample: float = 1.0, rng_seed: int = 0,
                 min_leaf: int = 5) -> Ensemble:
    """Stochastic gradient boosting: each tree fits the current residuals.

    Rows are subsampled without replacement; the base prediction is the
    training mean. ``n_trees=0`` yields the constant-mean predictor.
    """
    if n_trees < 0:
        raise ValueError("n_trees must be >= 0")
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1]")
    if not 0.0 < row_subsample <= 1.0:
        raise ValueError("row_subsample must be in (0, 1]")
    m = data.m
    train_mean = float(data.y.mean())
    pred = np.full(m, train_mean)
    n_rows = max(1, int(round(row_subsample * m)))
    seeds = np.random.SeedSequence(rng_seed).spawn(max(1, n_trees))
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng(seeds[i])
        rows = rng.choice(m, size=n_rows, replace=False) if n_rows < m else np.arange(m)
        resid = data.y - pred
        sub = Dataset(data.X[rows], resid[rows], data.feature_names)
        tree = fit_tree(sub, max_depth, min_leaf, data.p,
                        int(seeds[i].generate_state(1)[0]))
        pred += gamma * predict_tree(tree, data.X)
        trees.append(tree)
    return Ensemble(trees, gamma=gamma, kind="boosting", d=max_depth,
                    train_mean=train_mean, feature_names=list(data.feature_names))


def predict_ensemble(e: Ensemble, X: np.ndarray,
                     z: np.ndarray | None = None,
                     beta: np.ndarray | None = None) -> np.ndarray:
    """Ensemble prediction under optional prune depths ``z`` and weights ``beta``.

    Tree i contributes gamma * (b_i + beta_i * (T_i^(z_i)(X) - b_i)) where
    T^(k) is the tree truncated to k layers and b_i is its root-layer
    baseline; pruning to depth 0 leaves exactly the baseline, so a pruned
    boosting tree vanishes from the sum. With z and beta omitted this is
    the plain base + gamma * sum of full-tree predictions.
    """
    X = np.asarray(X, dtype=np.float64)
    n = e.n
    if z is None:
        z = np.full(n, e.d, dtype=np.int64)
    else:
        z = np.asarray(z, dtype=np.int64)
        if z.shape != (n,):
            raise ValueError(f"z has shape {z.shape}, expected ({n},)")
    if beta is None:
        beta = np.ones(n)
    else:
        beta = np.asarray(beta, dtype=np.float64)
        if beta.shape != (n,):
            raise ValueError(f"beta has shape {beta.shape}, expected ({n},)")
    baselines = e.tree_baselines()
    out = np.full(X.shape[0], e.base_prediction + e.gamma * baselines.sum())
    for i, tree in enumerate(e.trees):
        if z[i] == 0 or beta[i] == 0.0:
            continue
        pred = predict_tree(truncate_tree(tree, int(z[i])), X)
        out += e.gamma * beta[i] * (pred - baselines[i])
    return out
