"""Reweighting of a pruned ensemble: ridge and best-subset polishing.

The basis columns are the per-tree pruned prediction vectors
b_i = gamma * D_i z_i (training rows, baselines excluded), so the
polished model is base + B beta and beta = 1 reproduces the pruned
ensemble exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .solver import PruneProblem

__all__ = [
    "PolishBasis",
    "build_polish_basis",
    "ridge_polish",
    "subset_polish",
    "subset_polish_exact",
    "expand_beta",
]


@dataclass
class PolishBasis:
    B: np.ndarray             # (m, s) columns gamma * D_i z_i, no all-zero columns
    tree_indices: np.ndarray  # (s,) original tree ids


def build_polish_basis(problem: PruneProblem, z: np.ndarray) -> PolishBasis:
    """Collect the nonzero pruned-tree prediction columns for a solution."""
    z = np.asarray(z, dtype=np.int64)
    cols = []
    idx = []
    for i in range(problem.n):
        if z[i] > 0:
            col = problem.gamma * problem.prefix[i, z[i]]
            if np.any(col != 0.0):
                cols.append(col)
                idx.append(i)
    if not cols:
        return PolishBasis(np.zeros((problem.m, 0)), np.zeros(0, dtype=np.int64))
    return PolishBasis(np.column_stack(cols), np.array(idx, dtype=np.int64))


def expand_beta(basis: PolishBasis, beta: np.ndarray, n: int) -> np.ndarray:
    """Scatter basis-level weights back to full ensemble length."""
    full = np.zeros(n)
    full[basis.tree_indices] = beta
    return full


def ridge_polish(basis: PolishBasis, y_resid: np.ndarray, alpha2: float) -> np.ndarray:
    """Ridge reweighting: argmin (1/m)||y_resid - B beta||^2 + alpha2 ||beta||^2.

    Solved by the normal equations (B'B/m + alpha2 I) beta = B'y/m, which
    alpha2 > 0 makes strictly convex and uniquely solvable even with more
    trees than rows or correlated columns.
    """
    if alpha2 <= 0:
        raise ValueError("alpha2 must be > 0 for ridge polishing")
    B = basis.B
    m, s = B.shape
    if s == 0:
        return np.zeros(0)
    A = B.T @ B / m + alpha2 * np.eye(s)
    return np.linalg.solve(A, B.T @ y_resid / m)


def _power_iteration_largest(G: np.ndarray, iters: int = 500, tol: float = 1e-12) -> float:
    s = G.shape[0]
    v = np.ones(s) + 1e-3 * np.arange(s)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = float(v @ (G @ v))
        if abs(new - lam) <= tol * max(abs(new), 1.0):
            lam = new
            break
        lam = new
    return lam


def subset_polish(basis: PolishBasis, y_resid: np.ndarray, alpha2: float,
                  max_iters: int = 1000, tol: float = 1e-8,
                  trace: list | None = None) -> np.ndarray:
    """Best-subset reweighting by iterative hard thresholding.

    Objective (1/m)||y_resid - B beta||^2 + alpha2 ||beta||_0. Gradient
    steps of size 1/L (L = top eigenvalue of 2B'B/m via power iteration)
    followed by the per-coordinate threshold that keeps a coefficient only
    when zeroing it would cost more than alpha2 on the majorizer, i.e.
    theta^2 > 2 alpha2 / L. Starts from all-ones; the objective never
    increases. Thresholding alone stalls on correlated columns, so the
    converged support is then refined greedily with refit weights (single
    support flips, plus pair flips while the basis is small) until no move
    improves the objective.
    """
    if alpha2 < 0:
        raise ValueError("alpha2 must be >= 0")
    B = basis.B
    m, s = B.shape
    if s == 0:
        return np.zeros(0)
    G = (2.0 / m) * (B.T @ B)
    c = (2.0 / m) * (B.T @ y_resid)
    L = _power_iteration_largest(G) * (1.0 + 1e-9)
    if L <= 0.0:
        return np.zeros(s)
    thr = 2.0 * alpha2 / L

    def obj(b):
        r = y_resid - B @ b
        return float(np.mean(r ** 2)) + alpha2 * int(np.count_nonzero(b))

    beta = np.ones(s)
    prev = obj(beta)
    if trace is not None:
        trace.append(prev)
    for _ in range(max_iters):
        theta = beta - (G @ beta - c) / L
        beta = np.where(theta * theta > thr, theta, 0.0)
        cur = obj(beta)
        if trace is not None:
            trace.append(cur)
        if prev - cur < tol * max(prev, 1e-12):
            break
        prev = cur
    beta = _support_refine(B, y_resid, alpha2, beta, obj, trace)
    return beta


def _refit_on(B, y_resid, supp, s):
    cand = np.zeros(s)
    if supp:
        sl = sorted(int(i) for i in supp)
        Bs = B[:, sl]
        try:
            b = np.linalg.solve(Bs.T @ Bs, Bs.T @ y_resid)
        except np.linalg.LinAlgError:
            b = np.linalg.lstsq(Bs, y_resid, rcond=None)[0]
        cand[sl] = b
    return cand


def _support_refine(B, y_resid, alpha2, beta, obj, trace, max_rounds=100):
    """Greedy add/drop/swap moves with refit weights from the IHT point.

    The same escape idea the depth solver uses: thresholding alone stalls on
    correlated columns, so walk the support neighbourhood and keep strict
    improvements.
    """
    s = B.shape[1]
    supp = frozenset(int(i) for i in np.nonzero(beta)[0])
    best = _refit_on(B, y_resid, supp, s)
    if obj(best) > obj(beta):
        best = beta
    best_obj = obj(best)
    flips_far = 2 if s <= 25 else 1  # pair moves only while they stay cheap
    for _ in range(max_rounds):
        moved = False
        singles = [supp ^ {j} for j in range(s)]
        pairs = [supp ^ {j, k} for j in range(s) for k in range(j + 1, s)] \
            if flips_far == 2 else []
        for cand_supp in singles + pairs:
            cand = _refit_on(B, y_resid, cand_supp, s)
            o = obj(cand)
            if o < best_obj - 1e-12 * max(1.0, best_obj):
                best, best_obj = cand, o
                supp = frozenset(int(i) for i in np.nonzero(cand)[0])
                moved = True
                if trace is not None:
                    trace.append(best_obj)
                break
        if not moved:
            break
    return best


def subset_polish_exact(basis: PolishBasis, y_resid: np.ndarray,
                        alpha2: float) -> np.ndarray:
    """Exact best-subset reweighting by support enumeration (s <= 20).

    Refits least squares on every support and charges alpha2 per kept
    column; the stand-in for an integer-programming solve at test scale.
    Cost grows as 2^s.
    """
    B = basis.B
    m, s = B.shape
    if s > 20:
        raise ValueError("exact enumeration supports at most 20 columns")
    if s == 0:
        return np.zeros(0)
    G = B.T @ B
    c = B.T @ y_resid
    yty = float(y_resid @ y_resid)
    best_obj = yty / m
    best = np.zeros(s)
    for r in range(1, s + 1):
        for supp in itertools.combinations(range(s), r):
            sl = list(supp)
            Gs = G[np.ix_(sl, sl)]
            cs = c[sl]
            try:
                b = np.linalg.solve(Gs, cs)
            except np.linalg.LinAlgError:
                b = np.linalg.lstsq(Gs, cs, rcond=None)[0]
            sse = yty - 2.0 * cs @ b + b @ Gs @ b
            o = sse / m + alpha2 * r
            if o < best_obj - 1e-15 * max(1.0, abs(best_obj)):
                best_obj = o
                best = np.zeros(s)
                best[sl] = b
    return best
