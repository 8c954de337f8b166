import numpy as np

from forestprune.trees import Dataset, Node, RegressionTree


def friedman1(m, seed, noise=1.0, p=10):
    """Synthetic regression benchmark: smooth + interaction + linear terms."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(m, p))
    y = (10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
         + 20.0 * (X[:, 2] - 0.5) ** 2
         + 10.0 * X[:, 3] + 5.0 * X[:, 4]
         + noise * rng.normal(size=m))
    return Dataset(X, y)


def random_dataset(m, p, seed, noise=0.3):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(m, p))
    y = (3.0 * X[:, 0] + np.sin(6.0 * X[:, 1 % p])
         + 2.0 * (X[:, 2 % p] > 0.5) + noise * rng.normal(size=m))
    return Dataset(X, y)


def complete_depth2_tree():
    """Hand-built complete binary tree of depth 2 over 8 training rows.

    Root splits x0 at 0.5; the left child's split on x1 is useless (both
    grandchildren predict 2.0), the right child's split separates 0s from
    10s. y = [2,2,2,2,0,0,10,10].
    """
    nodes = [
        Node(0, 0.5, 1, 2, 3.25, 8, 0, 118.5),   # root
        Node(1, 0.5, 3, 4, 2.0, 4, 1, 0.0),      # useless split
        Node(1, 0.5, 5, 6, 5.0, 4, 1, 100.0),    # useful split
        Node(-1, 0.0, -1, -1, 2.0, 2, 2, 0.0),
        Node(-1, 0.0, -1, -1, 2.0, 2, 2, 0.0),
        Node(-1, 0.0, -1, -1, 0.0, 2, 2, 0.0),
        Node(-1, 0.0, -1, -1, 10.0, 2, 2, 0.0),
    ]
    return RegressionTree.from_nodes(nodes, 2)


def route_rows(tree, X):
    """Independent per-row walk returning the node-id path of every row."""
    paths = []
    for row in X:
        i = 0
        path = [0]
        while tree.feature[i] >= 0:
            if row[tree.feature[i]] <= tree.threshold[i]:
                i = int(tree.left[i])
            else:
                i = int(tree.right[i])
            path.append(i)
        paths.append(path)
    return paths
