"""Depth-difference matrices: layer-wise prediction increments per row.

For a tree and training matrix X, row j of the m-by-d matrix holds the
increments of the node means along row j's decision path,

    v_j = [mu_1 - baseline, mu_2 - mu_1, ..., mu_k - mu_{k-1}, 0, ..., 0],

where mu_l is the mean of the node at depth l on the path and k is the
leaf depth. Columns past the path length are exactly zero, and the prefix
sum of the first k columns plus the baseline reproduces the prediction of
the tree truncated to depth k (for k >= 1; at k = 0 the product is the
baseline itself, which equals the truncated root prediction under the
root-mean baseline convention used for bagging).

Keeping the prune vector as an integer kept-depth makes the prefix
constraint impossible to violate: a tree can only be cut from the bottom
up, never skip a layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trees import RegressionTree

__all__ = ["DepthDiffMatrix", "compute_depth_diff", "pruned_predictions"]


@dataclass
class DepthDiffMatrix:
    values: np.ndarray  # (m, d), response units
    baseline: float
    tree_index: int = -1

    @property
    def d(self) -> int:
        return self.values.shape[1]


def compute_depth_diff(tree: RegressionTree, X: np.ndarray, baseline: float = 0.0,
                       d: int | None = None, tree_index: int = -1) -> DepthDiffMatrix:
    """Build the depth-difference matrix of ``tree`` over the rows of X.

    ``d`` is the ensemble-wide depth the matrix is zero-padded to; it
    defaults to the tree's own grown depth. Single tree traversal per row,
    O(m * d) total.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise ValueError(
            f"X has {X.shape[1] if X.ndim == 2 else '?'} columns, "
            f"tree expects {tree.n_features}")
    if d is None:
        d = tree.max_depth_grown
    m = X.shape[0]
    D = np.zeros((m, d), dtype=np.float64)
    cur = np.zeros(m, dtype=np.int64)
    prev = np.full(m, baseline, dtype=np.float64)
    rows = np.nonzero(tree.feature[cur] >= 0)[0]
    level = 0
    while rows.size and level < d:
        nd = cur[rows]
        go_left = X[rows, tree.feature[nd]] <= tree.threshold[nd]
        child = np.where(go_left, tree.left[nd], tree.right[nd])
        D[rows, level] = tree.mu[child] - prev[rows]
        prev[rows] = tree.mu[child]
        cur[rows] = child
        rows = rows[tree.feature[child] >= 0]
        level += 1
    return DepthDiffMatrix(D, baseline=float(baseline), tree_index=tree_index)


def pruned_predictions(D: DepthDiffMatrix, kept_depth: int) -> np.ndarray:
    """Predictions of the tree pruned to ``kept_depth`` layers, minus baseline.

    Equals the matrix product D z for the prefix vector with ``kept_depth``
    ones; the all-ones case is the full-tree column sum.
    """
    if not 0 <= kept_depth <= D.d:
        raise ValueError(f"kept_depth must be in [0, {D.d}]")
    return D.values[:, :kept_depth].sum(axis=1)
