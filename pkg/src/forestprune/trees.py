"""CART-style regression trees with per-node sample means.

Trees are stored columnar (flat numpy arrays indexed by node id) so that
prediction, truncation and depth bookkeeping stay vectorized. Node ids are
assigned in DFS order during growing, so a child id is always larger than
its parent's. The root has id 0 and depth 0; its split produces layer 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "Dataset",
    "Node",
    "RegressionTree",
    "fit_tree",
    "predict_tree",
    "truncate_tree",
    "ccp_prune",
    "layer_node_counts",
]


@dataclass
class Dataset:
    """Design matrix, response vector and feature names."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-d matrix")
        m, p = self.X.shape
        if m < 1 or p < 1:
            raise ValueError("dataset must have at least one row and one column")
        if self.y.shape != (m,):
            raise ValueError(f"y has length {self.y.shape}, expected ({m},)")
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.y)):
            raise ValueError("dataset contains non-finite values")
        if not self.feature_names:
            self.feature_names = [f"x{j}" for j in range(p)]
        elif len(self.feature_names) != p:
            raise ValueError("feature_names length does not match number of columns")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass
class Node:
    """One tree node. ``feature == -1`` marks a leaf."""

    feature: int
    threshold: float
    left: int
    right: int
    mu: float
    n_samples: int
    depth: int
    sse: float  # sum of squared deviations from mu over training rows here


class RegressionTree:
    """Binary regression tree over flat node arrays.

    Internal nodes route a row to ``left`` iff ``x[feature] <= threshold``.
    Every node stores the mean response ``mu`` of the training rows routed
    through it; a leaf predicts its own mu.
    """

    def __init__(self, feature, threshold, left, right, mu, n_samples, depth,
                 sse, n_features: int):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.mu = np.asarray(mu, dtype=np.float64)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)
        self.depth = np.asarray(depth, dtype=np.int64)
        self.sse = np.asarray(sse, dtype=np.float64)
        self.n_features = int(n_features)
        self.root = 0
        self.max_depth_grown = int(self.depth.max()) if len(self.depth) else 0

    @property
    def node_count(self) -> int:
        return len(self.mu)

    @property
    def nodes(self) -> list[Node]:
        return [
            Node(int(self.feature[i]), float(self.threshold[i]),
                 int(self.left[i]), int(self.right[i]), float(self.mu[i]),
                 int(self.n_samples[i]), int(self.depth[i]), float(self.sse[i]))
            for i in range(self.node_count)
        ]

    @classmethod
    def from_nodes(cls, nodes: list[Node], n_features: int) -> "RegressionTree":
        """Build a tree from explicit Node records (used for hand-built trees)."""
        n = len(nodes)
        for nd in nodes:
            if nd.feature >= 0 and not (0 <= nd.left < n and 0 <= nd.right < n):
                raise ValueError("internal node must reference two valid children")
        return cls(
            [nd.feature for nd in nodes], [nd.threshold for nd in nodes],
            [nd.left for nd in nodes], [nd.right for nd in nodes],
            [nd.mu for nd in nodes], [nd.n_samples for nd in nodes],
            [nd.depth for nd in nodes], [nd.sse for nd in nodes], n_features,
        )

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] < 0


@njit(cache=True)
def _grow(X, y, max_depth, min_leaf, n_sub, seed):  # pragma: no cover - jitted
    m, p = X.shape
    cap = 2 * m + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    mu = np.zeros(cap, np.float64)
    nsamp = np.zeros(cap, np.int64)
    depth = np.zeros(cap, np.int64)
    sse = np.zeros(cap, np.float64)

    np.random.seed(seed)
    feats = np.arange(p)
    idx = np.arange(m)
    buf = np.empty(m, np.int64)

    # explicit stack of segments [s, e) of idx
    st_s = np.empty(cap, np.int64)
    st_e = np.empty(cap, np.int64)
    st_d = np.empty(cap, np.int64)
    st_id = np.empty(cap, np.int64)
    sp = 0
    st_s[sp], st_e[sp], st_d[sp], st_id[sp] = 0, m, 0, 0
    sp += 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        s, e, dep, nid = st_s[sp], st_e[sp], st_d[sp], st_id[sp]
        n = e - s
        tot = 0.0
        for i in range(s, e):
            tot += y[idx[i]]
        mval = tot / n
        node_sse = 0.0
        for i in range(s, e):
            dv = y[idx[i]] - mval
            node_sse += dv * dv
        mu[nid] = mval
        nsamp[nid] = n
        depth[nid] = dep
        sse[nid] = node_sse

        if dep >= max_depth or n < 2 * min_leaf:
            continue
        ylo = y[idx[s]]
        yhi = y[idx[s]]
        for i in range(s + 1, e):
            v = y[idx[i]]
            if v < ylo:
                ylo = v
            if v > yhi:
                yhi = v
        if ylo == yhi:
            continue

        # sample n_sub features without replacement (partial Fisher-Yates),
        # then scan them in ascending index order so SSE ties resolve to the
        # lowest feature index / lowest threshold
        for j in range(n_sub):
            r = j + np.random.randint(0, p - j)
            feats[j], feats[r] = feats[r], feats[j]
        chosen = np.sort(feats[:n_sub])

        best_red = 0.0
        best_f = -1
        best_thr = 0.0
        tiny = 1e-12 * max(1.0, tot * tot / n)
        xv = np.empty(n, np.float64)
        yv = np.empty(n, np.float64)
        for jf in range(n_sub):
            f = chosen[jf]
            for i in range(n):
                xv[i] = X[idx[s + i], f]
            order = np.argsort(xv)
            csum = 0.0
            prev_x = xv[order[0]]
            for i in range(n):
                yv[i] = y[idx[s + order[i]]]
            tsq = tot * tot / n
            for i in range(n - 1):
                csum += yv[i]
                xi = xv[order[i]]
                xn = xv[order[i + 1]]
                nl = i + 1
                nr = n - nl
                if xn <= xi or nl < min_leaf or nr < min_leaf:
                    continue
                rsum = tot - csum
                red = csum * csum / nl + rsum * rsum / nr - tsq
                if red > best_red + tiny:
                    best_red = red
                    best_f = f
                    best_thr = 0.5 * (xi + xn)

        if best_f < 0:
            continue

        # stable partition of the segment by the chosen split
        nl = 0
        nr = 0
        for i in range(s, e):
            if X[idx[i], best_f] <= best_thr:
                idx[s + nl] = idx[i]
                nl += 1
            else:
                buf[nr] = idx[i]
                nr += 1
        for i in range(nr):
            idx[s + nl + i] = buf[i]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[nid] = best_f
        threshold[nid] = best_thr
        left[nid] = lid
        right[nid] = rid
        st_s[sp], st_e[sp], st_d[sp], st_id[sp] = s, s + nl, dep + 1, lid
        sp += 1
        st_s[sp], st_e[sp], st_d[sp], st_id[sp] = s + nl, e, dep + 1, rid
        sp += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], mu[:n_nodes], nsamp[:n_nodes],
            depth[:n_nodes], sse[:n_nodes])


def fit_tree(data: Dataset, max_depth: int, min_leaf: int = 1,
             feature_subsample: int | None = None, rng_seed: int = 0) -> RegressionTree:
    """Grow a regression tree by greedy variance-reduction splits.

    Split thresholds are midpoints of consecutive distinct sorted feature
    values; the exhaustive scan accepts a split only if it strictly reduces
    the sum of squared errors. Growing stops at ``max_depth``, when a child
    would fall under ``min_leaf`` samples, or when no split helps.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    p = data.p
    if feature_subsample is None:
        feature_subsample = p
    if not 1 <= feature_subsample <= p:
        raise ValueError(f"feature_subsample must be in [1, {p}]")
    arrays = _grow(data.X, data.y, max_depth, min_leaf, feature_subsample,
                   rng_seed & 0x7FFFFFFF)
    return RegressionTree(*arrays, n_features=p)


def predict_tree(tree: RegressionTree, X: np.ndarray) -> np.ndarray:
    """Route each row to its leaf and return the leaf means."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise ValueError(
            f"X has {X.shape[1] if X.ndim == 2 else '?'} columns, "
            f"tree expects {tree.n_features}")
    m = X.shape[0]
    cur = np.zeros(m, dtype=np.int64)
    rows = np.nonzero(tree.feature[cur] >= 0)[0]
    while rows.size:
        nd = cur[rows]
        go_left = X[rows, tree.feature[nd]] <= tree.threshold[nd]
        cur[rows] = np.where(go_left, tree.left[nd], tree.right[nd])
        rows = rows[tree.feature[cur[rows]] >= 0]
    return tree.mu[cur]


def truncate_tree(tree: RegressionTree, keep_depth: int) -> RegressionTree:
    """Drop all layers below ``keep_depth``.

    Nodes at exactly ``keep_depth`` become leaves predicting their mu;
    ``keep_depth=0`` leaves only the root (the training-mean predictor).
    Values beyond the grown depth leave the tree unchanged.
    """
    if keep_depth < 0:
        raise ValueError("keep_depth must be >= 0")
    if keep_depth >= tree.max_depth_grown:
        return tree
    keep = tree.depth <= keep_depth
    new_id = np.cumsum(keep) - 1
    at_cut = keep & (tree.depth == keep_depth)
    feature = np.where(at_cut, -1, tree.feature)[keep]
    left = tree.left[keep]
    right = tree.right[keep]
    internal = feature >= 0
    left[internal] = new_id[left[internal]]
    right[internal] = new_id[right[internal]]
    left[~internal] = -1
    right[~internal] = -1
    return RegressionTree(
        feature, tree.threshold[keep], left, right, tree.mu[keep],
        tree.n_samples[keep], tree.depth[keep], tree.sse[keep],
        tree.n_features)


def ccp_prune(tree: RegressionTree, ccp_alpha: float) -> RegressionTree:
    """Minimal cost-complexity (weakest-link) pruning.

    Repeatedly collapses the internal node whose per-leaf training-SSE
    increase g = (sse(node) - sse(subtree leaves)) / (leaves - 1) is
    smallest, while g <= ccp_alpha. Ties go to the lowest node index. The
    collapse sequence itself does not depend on ccp_alpha, so node counts
    are monotone in it.
    """
    if ccp_alpha < 0:
        raise ValueError("ccp_alpha must be >= 0")
    n = tree.node_count
    cl = tree.left.copy()
    cr = tree.right.copy()
    parent = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if cl[i] >= 0:
            parent[cl[i]] = i
            parent[cr[i]] = i

    leaves = np.ones(n, dtype=np.int64)
    sub_sse = tree.sse.copy()
    # children always have larger ids, so one descending pass aggregates
    for i in range(n - 1, -1, -1):
        if cl[i] >= 0:
            leaves[i] = leaves[cl[i]] + leaves[cr[i]]
            sub_sse[i] = sub_sse[cl[i]] + sub_sse[cr[i]]

    alive_internal = set(np.nonzero(cl >= 0)[0].tolist())
    removed = np.zeros(n, dtype=bool)
    while alive_internal:
        best_g = np.inf
        best_i = -1
        for i in sorted(alive_internal):
            g = (tree.sse[i] - sub_sse[i]) / (leaves[i] - 1)
            if g < best_g:
                best_g = g
                best_i = i
        if best_g > ccp_alpha:
            break
        i = best_i
        d_leaves = 1 - leaves[i]
        d_sse = tree.sse[i] - sub_sse[i]
        a = parent[i]
        while a >= 0:
            leaves[a] += d_leaves
            sub_sse[a] += d_sse
            a = parent[a]
        stack = [cl[i], cr[i]]
        while stack:
            j = stack.pop()
            removed[j] = True
            alive_internal.discard(j)
            if cl[j] >= 0:
                stack.extend((cl[j], cr[j]))
        cl[i] = -1
        cr[i] = -1
        leaves[i] = 1
        sub_sse[i] = tree.sse[i]
        alive_internal.discard(i)

    keep = ~removed
    new_id = np.cumsum(keep) - 1
    feature = np.where(cl >= 0, tree.feature, -1)[keep]
    left = cl[keep]
    right = cr[keep]
    internal = feature >= 0
    left[internal] = new_id[left[internal]]
    right[internal] = new_id[right[internal]]
    return RegressionTree(
        feature, tree.threshold[keep], left, right, tree.mu[keep],
        tree.n_samples[keep], tree.depth[keep], tree.sse[keep],
        tree.n_features)


def layer_node_counts(tree: RegressionTree, d: int | None = None) -> np.ndarray:
    """Number of nodes in each depth layer 1..d (zero-padded past the grown depth)."""
    if d is None:
        d = tree.max_depth_grown
    counts = np.bincount(tree.depth, minlength=d + 1)
    return counts[1:d + 1].astype(np.int64)
