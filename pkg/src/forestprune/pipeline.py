"""End-to-end framework runs: prune, optionally polish, select along paths."""

from __future__ import annotations

import numpy as np

from .ensembles import Ensemble, predict_ensemble
from .polish import build_polish_basis, expand_beta, ridge_polish, subset_polish
from .solver import (PathResult, PruneProblem, PruneSolution, build_problem,
                     cbcd_solve, make_weights)

__all__ = ["run_framework", "polish_solution", "select_within_phi",
           "best_under_budget", "mse"]


def mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))


def run_framework(e: Ensemble, X: np.ndarray, y: np.ndarray, alpha: float,
                  weighting: str = "node", polish: str | None = None,
                  alpha2: float = 1e-2, search_rule: str = "smallest_index",
                  tol: float = 1e-8, seed: int = 0,
                  threads: int = 1) -> PruneSolution:
    """Single-alpha prune, then optional reweighting of the kept trees."""
    problem = build_problem(e, X, y, threads=threads)
    weights = make_weights(e, weighting)
    sol = cbcd_solve(problem, alpha, weights, search_rule=search_rule,
                     tol=tol, seed=seed)
    if polish is not None:
        sol = polish_solution(problem, sol, polish, alpha2)
    return sol


def polish_solution(problem: PruneProblem, sol: PruneSolution, mode: str,
                    alpha2: float, max_iters: int = 1000) -> PruneSolution:
    """Replace a solution's tree weights by their ridge or subset polish."""
    basis = build_polish_basis(problem, sol.z)
    y_resid = problem.y - problem.base
    if mode == "ridge":
        b = ridge_polish(basis, y_resid, alpha2)
    elif mode == "subset":
        b = subset_polish(basis, y_resid, alpha2, max_iters=max_iters)
    else:
        raise ValueError(f"unknown polish mode {mode!r}")
    beta = expand_beta(basis, b, problem.n)
    resid = y_resid - (basis.B @ b if basis.B.shape[1] else 0.0)
    metrics = dict(sol.metrics)
    metrics["train_mse"] = float(np.mean(resid ** 2))
    kept = (sol.z > 0) & (beta != 0.0)
    metrics["trees_kept"] = int(np.count_nonzero(kept))
    metrics["layers_kept"] = int(sol.z[kept].sum())
    if problem.layer_counts is not None:
        metrics["nodes_kept"] = int(sum(
            problem.layer_counts[i, :sol.z[i]].sum() for i in np.nonzero(kept)[0]))
    return PruneSolution(sol.z.copy(), beta, sol.objective, metrics,
                         sol.passes, sol.candidate_evals)


def select_within_phi(path: PathResult, phi: float,
                      full_valid_mse: float) -> int | None:
    """Index of the smallest model whose validation loss is within phi of full.

    Scans the path (sparse to dense) and returns the first point with
    valid MSE <= (1 + phi) * full model valid MSE; None if nothing
    qualifies.
    """
    if path.valid_mse is None:
        raise ValueError("path carries no validation losses")
    limit = (1.0 + phi) * full_valid_mse
    for i, v in enumerate(path.valid_mse):
        if v <= limit:
            return i
    return None


def best_under_budget(path: PathResult, max_nodes: int) -> int | None:
    """Index of the best-validation path point using at most max_nodes nodes."""
    if path.valid_mse is None:
        raise ValueError("path carries no validation losses")
    best = None
    for i, sol in enumerate(path.solutions):
        if sol.metrics.get("nodes_kept", 0) <= max_nodes:
            if best is None or path.valid_mse[i] < path.valid_mse[best]:
                best = i
    return best


def validation_curve(e: Ensemble, Xv: np.ndarray, yv: np.ndarray,
                     path: PathResult) -> list[float]:
    """Validation MSE per path point, for paths solved without valid data."""
    return [mse(yv, predict_ensemble(e, Xv, s.z, s.beta)) for s in path.solutions]
