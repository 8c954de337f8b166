"""Regularized layer pruning by cyclic block coordinate descent.

The model fit over the training rows is

    y  ~  base + gamma * sum_i beta_i * P_i[z_i]

where P_i[k] is the prefix sum of the first k columns of tree i's
depth-difference matrix (its candidate prediction at kept depth k),
``base`` absorbs the ensemble intercept plus all per-tree baselines, and
z_i in {0..d} is the number of depth layers kept. The objective adds the
weighted layer penalty (alpha/K) * sum_i sum_{k<=z_i} w_{i,k}, and in
joint mode a penalty alpha2 * |beta_i|^rho on the tree weights.

A block update enumerates the d+1 prefix candidates of one tree, which
solves that block exactly; cycling to a fixed point gives block-optimal
solutions, and a random swap local search (zero one in-support tree, pull
in an out-of-support one, re-converge, keep on improvement) walks out of
the combinatorial local minima that plain cycling gets stuck in.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .depthdiff import compute_depth_diff
from .ensembles import Ensemble, predict_ensemble
from .trees import layer_node_counts, predict_tree

__all__ = [
    "WeightScheme",
    "PruneProblem",
    "SolverState",
    "PruneSolution",
    "PathResult",
    "make_weights",
    "build_problem",
    "objective",
    "block_update",
    "joint_block_update",
    "cbcd_solve",
    "joint_solve",
    "solution_from",
    "local_search_step",
    "alpha_max",
    "regularization_path",
    "exhaustive_oracle",
    "solution_metrics",
]

ALPHA_FLOOR = 1e-12


@dataclass
class WeightScheme:
    """Per-tree, per-layer penalty weights with normalization constant K."""

    w: np.ndarray  # (n, d), nonnegative
    K: float
    scheme: str
    cum: np.ndarray = field(init=False)  # (n, d+1) prefix sums, cum[:,0] = 0

    def __post_init__(self):
        n, d = self.w.shape
        self.cum = np.zeros((n, d + 1))
        np.cumsum(self.w, axis=1, out=self.cum[:, 1:])


def make_weights(e: Ensemble, scheme: str) -> WeightScheme:
    """Build the depth- or node-weighting scheme for an ensemble.

    depth: w_{i,k} = 1 iff layer k exists in tree i; charges each kept
    layer equally and favours dropping whole trees.
    node: w_{i,k} = number of nodes in layer k of tree i; charges model
    size directly and favours shallow trees. K is the total weight mass,
    which for full-depth trees equals n*d (depth) or the ensemble node
    count (node).
    """
    if scheme not in ("depth", "node"):
        raise ValueError(f"unknown weighting scheme {scheme!r}")
    n, d = e.n, e.d
    w = np.zeros((n, d))
    for i, tree in enumerate(e.trees):
        counts = layer_node_counts(tree, d)
        w[i] = (counts > 0).astype(float) if scheme == "depth" else counts
    return WeightScheme(w, K=float(w.sum()), scheme=scheme)


@dataclass
class PruneProblem:
    """Precomputed quantities the solver needs: prefix predictions per tree."""

    prefix: np.ndarray  # (n, d+1, m): prefix[i, k] = D_i @ z(k)
    psq: np.ndarray     # (n, d+1): squared norms of the prefix vectors
    y: np.ndarray
    gamma: float
    base: float         # ensemble base prediction + gamma * sum of baselines
    tree_order: np.ndarray  # rank per tree for the smallest-index swap rule
    layer_counts: np.ndarray | None = None  # (n, d) node counts per layer
    ensemble: Ensemble | None = None

    @property
    def n(self) -> int:
        return self.prefix.shape[0]

    @property
    def d(self) -> int:
        return self.prefix.shape[1] - 1

    @property
    def m(self) -> int:
        return self.prefix.shape[2]


def build_problem(e: Ensemble, X: np.ndarray, y: np.ndarray,
                  threads: int = 1) -> PruneProblem:
    """Assemble the solver problem from a fitted ensemble and its training data."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d, m = e.n, e.d, X.shape[0]
    baselines = e.tree_baselines()

    def one(i):
        D = compute_depth_diff(e.trees[i], X, baseline=baselines[i], d=d,
                               tree_index=i).values
        pref = np.zeros((d + 1, m))
        np.cumsum(D.T, axis=0, out=pref[1:])
        return pref

    if threads > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            prefs = list(ex.map(one, range(n)))
    else:
        prefs = [one(i) for i in range(n)]
    prefix = np.stack(prefs) if n else np.zeros((0, d + 1, m))
    psq = np.einsum("ikm,ikm->ik", prefix, prefix) if n else np.zeros((0, d + 1))

    if e.kind == "bagging" and n > 1:
        # swap rule rank: best-fitting trees first
        sse = np.array([np.sum((y - predict_tree(t, X)) ** 2) for t in e.trees])
        tree_order = np.empty(n, dtype=np.int64)
        tree_order[np.argsort(sse, kind="stable")] = np.arange(n)
    else:
        tree_order = np.arange(n, dtype=np.int64)

    layer_counts = np.stack([layer_node_counts(t, d) for t in e.trees]) if n \
        else np.zeros((0, d), dtype=np.int64)
    base = e.base_prediction + e.gamma * baselines.sum()
    return PruneProblem(prefix, psq, y, e.gamma, float(base), tree_order,
                        layer_counts, e)


@dataclass
class SolverState:
    """Mutable solve state; the residual cache is maintained incrementally."""

    z: np.ndarray       # (n,) kept depths
    beta: np.ndarray    # (n,) tree weights, all ones outside joint mode
    resid: np.ndarray   # y - base - gamma * sum_i beta_i * prefix[i, z_i]
    objective: float
    alpha: float
    alpha2: float = 0.0
    rho: int = 2
    joint: bool = False


def _beta_penalty(state: SolverState) -> float:
    if not state.joint or state.alpha2 == 0.0:
        return 0.0
    if state.rho == 2:
        return state.alpha2 * float(np.sum(state.beta ** 2))
    return state.alpha2 * int(np.count_nonzero(state.beta))


def _init_state(problem: PruneProblem, weights: WeightScheme, alpha: float,
                z0=None, beta0=None, alpha2: float = 0.0, rho: int = 2,
                joint: bool = False) -> SolverState:
    n, m = problem.n, problem.m
    z = np.zeros(n, dtype=np.int64) if z0 is None else np.asarray(z0, dtype=np.int64).copy()
    beta = np.ones(n) if beta0 is None else np.asarray(beta0, dtype=np.float64).copy()
    if joint:
        beta = np.where(z > 0, beta, 0.0)
    resid = problem.y - problem.base
    for i in range(n):
        if z[i] > 0 and beta[i] != 0.0:
            resid = resid - problem.gamma * beta[i] * problem.prefix[i, z[i]]
    state = SolverState(z, beta, resid, 0.0, alpha, alpha2, rho, joint)
    state.objective = float(np.mean(resid ** 2)
                            + (alpha / weights.K) * np.sum(weights.cum[np.arange(n), z])
                            + _beta_penalty(state))
    return state


def objective(problem: PruneProblem, state: SolverState,
              weights: WeightScheme) -> float:
    """Objective recomputed from scratch (independent of the cached residual)."""
    n = problem.n
    resid = problem.y - problem.base
    for i in range(n):
        if state.z[i] > 0 and state.beta[i] != 0.0:
            resid = resid - problem.gamma * state.beta[i] * problem.prefix[i, state.z[i]]
    pen = (state.alpha / weights.K) * float(np.sum(weights.cum[np.arange(n), state.z]))
    return float(np.mean(resid ** 2)) + pen + _beta_penalty(state)


@dataclass
class SolveStats:
    passes: int = 0
    candidate_evals: int = 0


def block_update(problem: PruneProblem, state: SolverState,
                 weights: WeightScheme, omega: int) -> int:
    """Exactly minimize the objective over block omega's d+1 prefix candidates.

    Ties go to the smaller kept depth. Residual cache and objective are
    updated in place; returns the chosen depth.
    """
    P = problem.prefix[omega]
    g = problem.gamma
    m = problem.m
    z_old = int(state.z[omega])
    y_delta = state.resid + g * P[z_old] if z_old > 0 else state.resid
    qty = P @ y_delta
    var = (g * g * problem.psq[omega] - 2.0 * g * qty) / m \
        + (state.alpha / weights.K) * weights.cum[omega]
    k = int(np.argmin(var))
    if k != z_old:
        state.objective -= var[z_old] - var[k]
        state.resid = y_delta - g * P[k] if k > 0 else y_delta
        state.z[omega] = k
    return k


def joint_block_update(problem: PruneProblem, state: SolverState,
                       weights: WeightScheme, omega: int) -> tuple[int, float]:
    """Block update optimizing the kept depth and the tree weight together.

    For each candidate q_k = gamma * P[k]: under the ridge penalty the best
    weight is <q, y_delta> / (<q, q> + m*alpha2) in closed form; under the
    subset penalty it is the plain least-squares coefficient or zero,
    whichever is cheaper once the alpha2 charge for a nonzero weight is
    counted. Returns the winning (depth, weight) pair.
    """
    P = problem.prefix[omega]
    g = problem.gamma
    m = problem.m
    a2 = state.alpha2
    z_old = int(state.z[omega])
    b_old = float(state.beta[omega])
    y_delta = state.resid + g * b_old * P[z_old] if z_old > 0 and b_old != 0.0 \
        else state.resid
    qty = g * (P @ y_delta)          # <q_k, y_delta>
    qsq = g * g * problem.psq[omega]  # <q_k, q_k>

    if state.rho == 2:
        denom = qsq + m * a2
        bet = np.divide(qty, denom, out=np.zeros_like(qty), where=denom > 0)
        var = (-2.0 * bet * qty + bet ** 2 * qsq) / m + a2 * bet ** 2
    else:
        bet = np.divide(qty, qsq, out=np.zeros_like(qty), where=qsq > 0)
        var_nz = (-2.0 * bet * qty + bet ** 2 * qsq) / m + a2
        # hard threshold: zero beats the unpenalized coefficient unless the
        # fit gain exceeds the alpha2 charge
        keep = (var_nz < 0.0) & (qsq > 0)
        bet = np.where(keep, bet, 0.0)
        var = np.where(keep, var_nz, 0.0)
    var = var + (state.alpha / weights.K) * weights.cum[omega]

    pen_old = a2 * (b_old ** 2 if state.rho == 2 else float(b_old != 0.0))
    var_old = (-2.0 * b_old * qty[z_old] + b_old ** 2 * qsq[z_old]) / m \
        + (state.alpha / weights.K) * weights.cum[omega, z_old] + pen_old
    k = int(np.argmin(var))
    b_new = float(bet[k])
    if k != z_old or b_new != b_old:
        state.objective -= var_old - var[k]
        state.resid = y_delta - b_new * g * P[k] if k > 0 and b_new != 0.0 else y_delta
        state.z[omega] = k
        state.beta[omega] = b_new if k > 0 else 0.0
    return int(state.z[omega]), float(state.beta[omega])


def _cbcd_passes(problem, state, weights, stats, max_passes, trace):
    """Cycle block updates until a full pass changes nothing."""
    n, d = problem.n, problem.d
    update = joint_block_update if state.joint else block_update
    for _ in range(max_passes):
        z_before = state.z.copy()
        b_before = state.beta.copy()
        for omega in range(n):
            update(problem, state, weights, omega)
            stats.candidate_evals += d + 1
            if trace is not None:
                trace.append(state.objective)
        stats.passes += 1
        if np.array_equal(z_before, state.z) and np.array_equal(b_before, state.beta):
            break


def local_search_step(problem: PruneProblem, state: SolverState,
                      weights: WeightScheme, rule: str,
                      rng: np.random.Generator, ls_tol: float = 1e-5,
                      stats: SolveStats | None = None,
                      max_passes: int = 500,
                      corr_target: str = "residual",
                      forced_xi: int | None = None) -> bool:
    """One swap move: zero a random in-support tree, pull in a replacement.

    The replacement is the out-of-support tree with the best rank
    (smallest_index rule) or whose full-tree prediction correlates most
    with the current residual (best_correlation rule; set
    ``corr_target="response"`` to correlate with y - base instead). After
    the swap CBCD re-converges; the move is kept only if the objective
    improves by at least ``ls_tol`` relative, otherwise the prior state
    is restored (a loose threshold: swaps between near-exchangeable trees
    yield endless sub-1e-6 reshuffles that cost full re-convergences).
    No-op when the support or its complement is empty.
    """
    if stats is None:
        stats = SolveStats()
    support = np.nonzero(state.z > 0)[0]
    if support.size == 0 or support.size == problem.n:
        return False
    snap = (state.z.copy(), state.beta.copy(), state.resid.copy(), state.objective)
    comp = np.nonzero(state.z == 0)[0]

    xi = int(rng.choice(support)) if forced_xi is None else int(forced_xi)
    g = problem.gamma
    b_xi = state.beta[xi] if state.joint else 1.0
    state.resid = state.resid + g * b_xi * problem.prefix[xi, state.z[xi]]
    state.z[xi] = 0
    if state.joint:
        state.beta[xi] = 0.0

    if rule == "best_correlation":
        target = state.resid if corr_target == "residual" else problem.y - problem.base
        full = problem.prefix[comp, problem.d]
        sd = full.std(axis=1)
        tsd = target.std()
        cov = (full - full.mean(axis=1, keepdims=True)) @ (target - target.mean()) / problem.m
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.where((sd > 0) & (tsd > 0), np.abs(cov) / (sd * tsd), 0.0)
        star = int(comp[np.argmax(corr)])
    elif rule == "smallest_index":
        star = int(comp[np.argmin(problem.tree_order[comp])])
    else:
        raise ValueError(f"unknown local search rule {rule!r}")

    state.resid = state.resid - g * problem.prefix[star, problem.d]
    state.z[star] = problem.d
    if state.joint:
        state.beta[star] = 1.0
    state.objective = float(
        np.mean(state.resid ** 2)
        + (state.alpha / weights.K) * np.sum(weights.cum[np.arange(problem.n), state.z])
        + _beta_penalty(state))

    _cbcd_passes(problem, state, weights, stats, max_passes, None)

    if snap[3] - state.objective >= ls_tol * max(snap[3], ALPHA_FLOOR):
        return True
    state.z, state.beta, state.resid, state.objective = snap
    return False


def _run_solve(problem, weights, alpha, z0, beta0, search_rule, tol, seed,
               max_passes, corr_target, trace, alpha2=0.0, rho=2,
               joint=False, ls_tol=1e-5, ls_draws=1):
    state = _init_state(problem, weights, alpha, z0, beta0, alpha2, rho, joint)
    stats = SolveStats()
    rng = np.random.default_rng(seed)
    if trace is not None:
        trace.append(state.objective)
    _cbcd_passes(problem, state, weights, stats, max_passes, trace)
    if search_rule != "none" and problem.n > 0:
        accepted = 0
        while accepted < problem.n:
            hit = False
            tried: set[int] = set()  # a rejected trial is deterministic per xi
            for _ in range(3 * problem.n):
                support = np.nonzero(state.z > 0)[0]
                if support.size == 0 or support.size == problem.n:
                    break
                draw_cap = min(int(support.size), ls_draws)
                xi = int(rng.choice(support))
                if xi in tried:
                    continue
                tried.add(xi)
                if local_search_step(problem, state, weights, search_rule, rng,
                                     ls_tol, stats, max_passes, corr_target,
                                     forced_xi=xi):
                    hit = True
                    break
                if len(tried) >= draw_cap:
                    break
            if not hit:
                break
            accepted += 1
            if trace is not None:
                trace.append(state.objective)
    return state, stats


def _make_solution(problem, state, stats) -> "PruneSolution":
    metrics = {"train_mse": float(np.mean(state.resid ** 2))}
    kept = (state.z > 0) & (state.beta != 0.0)
    metrics["trees_kept"] = int(np.count_nonzero(kept))
    metrics["layers_kept"] = int(state.z[kept].sum())
    if problem.layer_counts is not None:
        nodes = 0
        for i in np.nonzero(kept)[0]:
            nodes += int(problem.layer_counts[i, :state.z[i]].sum())
        metrics["nodes_kept"] = nodes
    return PruneSolution(state.z.copy(), state.beta.copy(),
                         float(state.objective), metrics,
                         passes=stats.passes,
                         candidate_evals=stats.candidate_evals)


@dataclass
class PruneSolution:
    z: np.ndarray
    beta: np.ndarray
    objective: float
    metrics: dict
    passes: int = 0
    candidate_evals: int = 0


def cbcd_solve(problem: PruneProblem, alpha: float, weights: WeightScheme, *,
               z0=None, beta0=None, search_rule: str = "smallest_index",
               tol: float = 1e-8, ls_tol: float = 1e-5, ls_draws: int = 1,
               seed=0, max_passes: int = 500, corr_target: str = "residual",
               trace: list | None = None) -> PruneSolution:
    """Solve the layer-pruning problem at one alpha by CBCD plus local search.

    Starts from the all-zero state unless warm-started through ``z0``.
    Local search stops at the first round whose swap attempts all fail;
    ``ls_draws`` sets the distinct random removals tried per round (default
    one, trials capped at 3n draws) and at most n accepted swaps run per
    solve. ``trace``, when given, collects the objective after every block
    update and accepted swap; the sequence is nonincreasing by construction.
    """
    state, stats = _run_solve(problem, weights, alpha, z0, beta0, search_rule,
                              tol, seed, max_passes, corr_target, trace,
                              ls_tol=ls_tol, ls_draws=ls_draws)
    return _make_solution(problem, state, stats)


def joint_solve(problem: PruneProblem, alpha: float, alpha2: float, rho: int,
                weights: WeightScheme, *, z0=None, beta0=None,
                search_rule: str = "smallest_index", tol: float = 1e-8,
                ls_tol: float = 1e-5, ls_draws: int = 1, seed=0,
                max_passes: int = 500, corr_target: str = "residual",
                trace: list | None = None) -> PruneSolution:
    """Prune and reweight in one CBCD run (depths and weights jointly).

    Same convergence and local-search contract as :func:`cbcd_solve`;
    swapped-in trees restart at weight 1. ``rho`` selects the ridge (2) or
    subset (0) weight penalty at strength ``alpha2``.
    """
    if rho not in (0, 2):
        raise ValueError("rho must be 0 or 2")
    if alpha2 < 0:
        raise ValueError("alpha2 must be >= 0")
    b0 = beta0
    if beta0 is None and z0 is not None:
        b0 = (np.asarray(z0) > 0).astype(float)
    state, stats = _run_solve(problem, weights, alpha, z0, b0, search_rule,
                              tol, seed, max_passes, corr_target, trace,
                              alpha2=alpha2, rho=rho, joint=True, ls_tol=ls_tol,
                              ls_draws=ls_draws)
    return _make_solution(problem, state, stats)


def solution_from(problem: PruneProblem, weights: WeightScheme, alpha: float,
                  z: np.ndarray, beta: np.ndarray | None = None) -> PruneSolution:
    """Wrap an explicit (z, beta) assignment as a solution with fresh metrics."""
    state = _init_state(problem, weights, alpha, z0=z, beta0=beta)
    return _make_solution(problem, state, SolveStats())


def alpha_max(problem: PruneProblem, weights: WeightScheme) -> float:
    """Smallest alpha at which no single block update leaves the zero state.

    For every tree and prefix depth, the loss drop of adopting that prefix
    from the empty model is divided by its penalty mass; the maximum ratio
    (floored at a small positive value) is where the whole path starts.
    """
    if weights.K <= 0 or not np.any(weights.w > 0):
        raise ValueError("degenerate weighting scheme: all weights are zero")
    r0 = problem.y - problem.base
    g = problem.gamma
    best = ALPHA_FLOOR
    for i in range(problem.n):
        qty = problem.prefix[i] @ r0
        drop = (2.0 * g * qty - g * g * problem.psq[i]) / problem.m
        cum = weights.cum[i]
        ok = cum[1:] > 0
        if np.any(ok):
            ratios = drop[1:][ok] * weights.K / cum[1:][ok]
            best = max(best, float(ratios.max()))
    return best


@dataclass
class PathResult:
    alphas: np.ndarray
    solutions: list[PruneSolution]
    valid_mse: list[float] | None
    passes: list[int]


def regularization_path(problem: PruneProblem, weights: WeightScheme,
                        grid_size: int = 50, search_rule: str = "smallest_index",
                        *, tol: float = 1e-8, ls_tol: float = 1e-5,
                        ls_draws: int = 1, seed=0,
                        valid: tuple[np.ndarray, np.ndarray] | None = None,
                        corr_target: str = "residual",
                        alpha_min_ratio: float = 1e-4) -> PathResult:
    """Warm-started solve sequence over a geometric alpha grid.

    The grid runs from alpha_max down to alpha_max * alpha_min_ratio; each
    solve starts from the previous solution with local search enabled, so
    the first entry is the all-zero model and later entries densify.
    Validation MSE per point is recorded when ``valid=(X, y)`` is given
    (requires the problem to carry its ensemble).
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    amax = alpha_max(problem, weights)
    alphas = np.geomspace(amax, amax * alpha_min_ratio, grid_size)
    rng = np.random.default_rng(seed)
    z = np.zeros(problem.n, dtype=np.int64)
    beta = np.ones(problem.n)
    solutions = []
    passes = []
    vmse = [] if valid is not None else None
    for a in alphas:
        sol = cbcd_solve(problem, float(a), weights, z0=z, beta0=beta,
                         search_rule=search_rule, tol=tol, ls_tol=ls_tol,
                         ls_draws=ls_draws, seed=rng, corr_target=corr_target)
        z, beta = sol.z, sol.beta
        solutions.append(sol)
        passes.append(sol.passes)
        if valid is not None:
            if problem.ensemble is None:
                raise ValueError("validation scoring needs the problem's ensemble")
            pred = predict_ensemble(problem.ensemble, valid[0], z, beta)
            vmse.append(float(np.mean((valid[1] - pred) ** 2)))
    return PathResult(alphas, solutions, vmse, passes)


def exhaustive_oracle(problem: PruneProblem, alpha: float,
                      weights: WeightScheme) -> PruneSolution:
    """Global optimum by full enumeration of all (d+1)^n depth assignments.

    Test-support oracle; refuses instances beyond 1e7 combinations. Ties
    resolve to the lexicographically smallest depth vector.
    """
    n, d, m = problem.n, problem.d, problem.m
    if (d + 1) ** n > 1e7:
        raise ValueError("instance too large for exhaustive enumeration")
    g = problem.gamma
    r0 = problem.y - problem.base
    pen = (alpha / weights.K) * weights.cum
    best_obj = np.inf
    best_z = None
    for combo in itertools.product(range(d + 1), repeat=n):
        pred = np.zeros(m)
        p = 0.0
        for i, k in enumerate(combo):
            if k > 0:
                pred += problem.prefix[i, k]
            p += pen[i, k]
        obj = float(np.mean((r0 - g * pred) ** 2)) + p
        if obj < best_obj:
            best_obj = obj
            best_z = combo
    z = np.array(best_z, dtype=np.int64)
    state = _init_state(problem, weights, alpha, z0=z)
    stats = SolveStats()
    return _make_solution(problem, state, stats)


def solution_metrics(e: Ensemble, z: np.ndarray, beta: np.ndarray,
                     X: np.ndarray, y: np.ndarray) -> dict:
    """Recompute solution metrics from the ensemble itself (report cross-check)."""
    z = np.asarray(z, dtype=np.int64)
    beta = np.asarray(beta, dtype=np.float64)
    kept = (z > 0) & (beta != 0.0)
    nodes = 0
    layers = 0
    for i in np.nonzero(kept)[0]:
        nodes += int(layer_node_counts(e.trees[i], e.d)[:z[i]].sum())
        layers += int(z[i])
    pred = predict_ensemble(e, X, z, beta)
    return {"trees_kept": int(np.count_nonzero(kept)),
            "layers_kept": layers,
            "nodes_kept": nodes,
            "train_mse": float(np.mean((y - pred) ** 2))}
