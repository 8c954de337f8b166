"""Command-line driver: train, prune, path, polish, joint, baseline, predict,
report, compare."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import io as model_io
from .baselines import (Budget, baseline_trim, bsts, ccp_sweep,
                        lasso_lambda_max, lasso_prune, predict_weighted,
                        tree_node_counts)
from .ensembles import Ensemble, fit_bagging, fit_boosting, predict_ensemble
from .pipeline import best_under_budget, mse, polish_solution, select_within_phi
from .solver import (build_problem, cbcd_solve, joint_solve, make_weights,
                     regularization_path, solution_from, solution_metrics)
from .trees import Dataset

PRESETS = {
    # trees, depth, gamma, row subsample
    "bagging": dict(trees=500, depth=20, gamma=None, subsample=1.0),
    "boosting": dict(trees=250, depth=5, gamma=0.1, subsample=0.25),
}

BASELINE_COLUMNS = ["method", "budget_nodes", "nodes_kept", "trees_kept",
                    "valid_mse", "test_mse"]


@dataclass
class RunConfig:
    """Validated bundle of run options shared across subcommands."""

    args: argparse.Namespace

    def __post_init__(self):
        a = self.args
        if getattr(a, "valid_frac", None) is not None \
                and not 0.0 <= a.valid_frac < 1.0:
            raise ValueError("--valid-frac must be in [0, 1)")
        if getattr(a, "scale", None) is not None and not 0.0 < a.scale <= 1.0:
            raise ValueError("--scale must be in (0, 1]")
        if getattr(a, "gamma", None) is not None and not 0.0 < a.gamma <= 1.0:
            raise ValueError("--gamma must be in (0, 1]")
        if getattr(a, "alpha", None) is not None and a.alpha < 0:
            raise ValueError("--alpha must be >= 0")
        if getattr(a, "grid", None) is not None and a.grid < 2:
            raise ValueError("--grid must be >= 2")
        if getattr(a, "folds", 0) and a.folds < 2:
            raise ValueError("--folds must be >= 2")
        if getattr(a, "budget_nodes", 0):
            Budget(max_nodes=a.budget_nodes)

    @property
    def threads(self) -> int:
        return max(1, int(os.environ.get("FORESTPRUNE_THREADS", "1")))


class StageError(Exception):
    def __init__(self, stage: str, err: Exception):
        super().__init__(f"error [{stage}]: {err}")
        self.stage = stage


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _load_data(args) -> Dataset:
    return _stage("load-data", model_io.load_csv, args.data, args.target,
                  getattr(args, "delimiter", ","))


def _load_model(args) -> model_io.ModelFile:
    return _stage("load-model", model_io.load_model, args.model)


def _split(data: Dataset, valid_frac: float, seed: int):
    m = data.m
    if valid_frac <= 0.0:
        return data, None
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    n_valid = max(1, int(round(valid_frac * m)))
    vi, ti = perm[:n_valid], perm[n_valid:]
    train = Dataset(data.X[ti], data.y[ti], data.feature_names)
    valid = Dataset(data.X[vi], data.y[vi], data.feature_names)
    return train, valid


def _search_name(flag: str) -> str:
    return {"smallest-index": "smallest_index", "best-corr": "best_correlation",
            "none": "none"}[flag]


def _fit_ensemble(data: Dataset, args) -> Ensemble:
    preset = PRESETS[args.kind]
    n_trees = args.trees if args.trees else max(1, int(round(preset["trees"] * args.scale)))
    depth = args.depth if args.depth else preset["depth"]
    if args.kind == "bagging":
        return fit_bagging(data, n_trees, depth,
                           feature_subsample=args.feature_subsample,
                           rng_seed=args.seed, min_leaf=args.min_leaf or 1)
    gamma = args.gamma if args.gamma else preset["gamma"]
    subsample = args.subsample if args.subsample else preset["subsample"]
    return fit_boosting(data, n_trees, depth, gamma, subsample,
                        rng_seed=args.seed, min_leaf=args.min_leaf or 5)


def cmd_train(args) -> int:
    RunConfig(args)
    data = _load_data(args)
    e = _stage("fit", _fit_ensemble, data, args)
    prov = {"seed": str(args.seed), "kind": args.kind,
            "trees": str(e.n), "depth": str(e.d), "scale": str(args.scale)}
    if e.kind == "boosting":
        prov["gamma"] = model_io._f(e.gamma)
    _stage("save", model_io.save_model, model_io.ModelFile(e, None, prov), args.out)
    print(f"trained {e.kind} ensemble: {e.n} trees, depth {e.d} -> {args.out}")
    return 0


def _solve_report(args, alphas, solutions, valid_mse, passes, columns=None):
    if args.report:
        rows = model_io.report_rows(alphas, solutions, valid_mse, passes)
        _stage("report", model_io.emit_report, rows, args.report, args.format,
               columns)


def cmd_prune(args) -> int:
    cfg = RunConfig(args)
    mf = _load_model(args)
    data = _load_data(args)
    problem = _stage("solve", build_problem, mf.ensemble, data.X, data.y,
                     cfg.threads)
    weights = make_weights(mf.ensemble, args.weighting)
    sol = _stage("solve", cbcd_solve, problem, args.alpha, weights,
                 search_rule=_search_name(args.search), tol=args.tol,
                 seed=args.seed)
    if args.out:
        prov = dict(mf.provenance)
        prov.update({"alpha": model_io._f(args.alpha), "weighting": args.weighting})
        _stage("save", model_io.save_model,
               model_io.ModelFile(mf.ensemble, (sol.z, sol.beta), prov), args.out)
    _solve_report(args, [args.alpha], [sol], None, None)
    pen = (args.alpha / weights.K) * float(
        np.sum(weights.cum[np.arange(mf.ensemble.n), sol.z]))
    print(f"alpha={args.alpha:g} objective={sol.objective:.6g} "
          f"penalty={pen:.6g} nodes={sol.metrics['nodes_kept']} "
          f"trees={sol.metrics['trees_kept']}")
    return 0


def cmd_path(args) -> int:
    cfg = RunConfig(args)
    mf = _load_model(args)
    data = _load_data(args)
    train, valid = _split(data, args.valid_frac, args.seed)
    problem = _stage("solve", build_problem, mf.ensemble, train.X, train.y,
                     cfg.threads)
    weights = make_weights(mf.ensemble, args.weighting)
    path = _stage("solve", regularization_path, problem, weights, args.grid,
                  _search_name(args.search), tol=args.tol, seed=args.seed,
                  valid=(valid.X, valid.y) if valid is not None else None)
    _solve_report(args, path.alphas, path.solutions, path.valid_mse, path.passes)
    print(f"path: {args.grid} points, alpha in "
          f"[{path.alphas[-1]:.4g}, {path.alphas[0]:.4g}], "
          f"total passes {sum(path.passes)}")
    return 0


def cmd_polish(args) -> int:
    cfg = RunConfig(args)
    mf = _load_model(args)
    if mf.solution is None:
        raise StageError("load-model", ValueError(
            "model carries no prune solution; run `prune` first"))
    data = _load_data(args)
    problem = _stage("polish", build_problem, mf.ensemble, data.X, data.y,
                     cfg.threads)
    weights = make_weights(mf.ensemble, args.weighting)
    z, beta0 = mf.solution
    base_sol = solution_from(problem, weights, 0.0, z, beta0)
    alpha2s = [float(v) for v in args.alpha2.split(",")]
    rows = []
    last = None
    for a2 in alpha2s:
        sol = _stage("polish", polish_solution, problem, base_sol, args.mode, a2)
        rows.append({"alpha2": a2, "trees_kept": sol.metrics["trees_kept"],
                     "layers_kept": sol.metrics["layers_kept"],
                     "nodes_kept": sol.metrics["nodes_kept"],
                     "train_mse": sol.metrics["train_mse"],
                     "valid_mse": None, "passes": 0})
        last = sol
    if args.report:
        cols = ["alpha2", "trees_kept", "layers_kept", "nodes_kept",
                "train_mse", "valid_mse", "passes"]
        _stage("report", model_io.emit_report, rows, args.report, args.format, cols)
    if args.out and last is not None:
        prov = dict(mf.provenance)
        prov.update({"polish": args.mode, "alpha2": model_io._f(alpha2s[-1])})
        _stage("save", model_io.save_model,
               model_io.ModelFile(mf.ensemble, (last.z, last.beta), prov), args.out)
    print(f"polish mode={args.mode}: " + "; ".join(
        f"alpha2={r['alpha2']:g} trees={r['trees_kept']} mse={r['train_mse']:.5g}"
        for r in rows))
    return 0


def cmd_joint(args) -> int:
    cfg = RunConfig(args)
    mf = _load_model(args)
    data = _load_data(args)
    problem = _stage("solve", build_problem, mf.ensemble, data.X, data.y,
                     cfg.threads)
    weights = make_weights(mf.ensemble, args.weighting)
    sol = _stage("solve", joint_solve, problem, args.alpha,
                 float(args.alpha2), args.rho, weights,
                 search_rule=_search_name(args.search), tol=args.tol,
                 seed=args.seed)
    if args.out:
        prov = dict(mf.provenance)
        prov.update({"alpha": model_io._f(args.alpha),
                     "alpha2": model_io._f(float(args.alpha2)),
                     "rho": str(args.rho)})
        _stage("save", model_io.save_model,
               model_io.ModelFile(mf.ensemble, (sol.z, sol.beta), prov), args.out)
    _solve_report(args, [args.alpha], [sol], None, None)
    print(f"joint solve: objective={sol.objective:.6g} "
          f"trees={sol.metrics['trees_kept']} nodes={sol.metrics['nodes_kept']}")
    return 0


def _baseline_models(method, e, train, budget, args):
    """Yield (label, nodes, trees, predict_fn) for feasible budget candidates."""
    sizes = tree_node_counts(e)
    out = []
    if method == "trim":
        keeps = range(1, e.n + 1) if e.kind == "bagging" else range(0, e.n + 1)
        for keep in keeps:
            sub, idx = baseline_trim(e, keep, args.seed)
            nodes = int(sizes[idx].sum())
            if nodes <= budget:
                out.append((f"trim k={keep}", nodes, keep,
                            lambda X, s=sub: predict_ensemble(s, X)))
    elif method == "lasso":
        lmax = lasso_lambda_max(e, train.X, train.y)
        grid = np.geomspace(lmax * 0.999, lmax * 1e-4, args.grid)
        for lam, beta in zip(grid, lasso_prune(e, train.X, train.y, grid)):
            sel = np.nonzero(beta)[0]
            nodes = int(sizes[sel].sum())
            if nodes <= budget:
                out.append((f"lasso lam={lam:.3g}", nodes, len(sel),
                            lambda X, b=beta.copy(): predict_weighted(e, X, b)))
    elif method == "ccp":
        scale = max(float(t.sse[0]) for t in e.trees)
        for a in np.geomspace(scale * 10, scale * 1e-8, args.grid):
            sub = ccp_sweep(e, a)
            nodes = int(tree_node_counts(sub).sum())
            if nodes <= budget:
                out.append((f"ccp a={a:.3g}", nodes, sub.n,
                            lambda X, s=sub: predict_ensemble(s, X)))
    elif method == "bsts":
        mode = "exact" if e.n <= 22 else "heuristic"
        beta, sel = bsts(e, train.X, train.y, budget, mode=mode,
                         rng_seed=args.seed)
        nodes = int(sizes[sel].sum())
        out.append((f"bsts {mode}", nodes, len(sel),
                    lambda X, b=beta: predict_weighted(e, X, b)))
    else:
        raise ValueError(f"unknown baseline method {method!r}")
    return out


def _pick_baseline(method, e, train, valid, budget, args):
    cands = _baseline_models(method, e, train, budget, args)
    best = None
    for label, nodes, trees, fn in cands:
        v = mse(valid.y, fn(valid.X))
        if best is None or v < best[0]:
            best = (v, label, nodes, trees, fn)
    return best  # None when nothing fits the budget


def cmd_baseline(args) -> int:
    cfg = RunConfig(args)
    mf = _load_model(args)
    data = _load_data(args)
    train, valid = _split(data, args.valid_frac, args.seed)
    if valid is None:
        raise StageError("baseline", ValueError(
            "baseline selection needs --valid-frac > 0"))
    best = _stage("baseline", _pick_baseline, args.method, mf.ensemble,
                  train, valid, args.budget_nodes, args)
    if best is None:
        print(f"{args.method}: no model fits within {args.budget_nodes} nodes")
        return 1
    v, label, nodes, trees, fn = best
    test_mse = None
    if args.test:
        test = _stage("load-data", model_io.load_csv, args.test, args.target)
        test_mse = mse(test.y, fn(test.X))
    row = {"method": label, "budget_nodes": args.budget_nodes,
           "nodes_kept": nodes, "trees_kept": trees, "valid_mse": v,
           "test_mse": test_mse}
    if args.report:
        _stage("report", model_io.emit_report, [row], args.report, args.format,
               BASELINE_COLUMNS)
    print(f"{label}: nodes={nodes} trees={trees} valid_mse={v:.5g}"
          + (f" test_mse={test_mse:.5g}" if test_mse is not None else ""))
    return 0


def cmd_predict(args) -> int:
    mf = _load_model(args)
    e = mf.ensemble
    import csv as _csv
    with open(args.data, newline="") as fh:
        rd = _csv.reader(fh)
        header = [h.strip() for h in next(rd)]
        missing = [c for c in e.feature_names if c not in header]
        if missing:
            raise StageError("load-data", ValueError(
                f"missing feature columns: {', '.join(missing)}"))
        cols = [header.index(c) for c in e.feature_names]
        rows = []
        for r, rec in enumerate(rd, start=1):
            try:
                rows.append([float(rec[j]) for j in cols])
            except (ValueError, IndexError) as exc:
                raise StageError("load-data", ValueError(
                    f"row {r}: {exc}")) from exc
    X = np.asarray(rows, dtype=np.float64)
    if mf.solution is not None:
        z, beta = mf.solution
        pred = predict_ensemble(e, X, z, beta)
    else:
        pred = predict_ensemble(e, X)
    with open(args.out, "w", newline="") as fh:
        wr = _csv.writer(fh)
        wr.writerow(["prediction"])
        for v in pred:
            wr.writerow([model_io._f(v)])
    print(f"wrote {len(pred)} predictions -> {args.out}")
    return 0


def cmd_report(args) -> int:
    mf = _load_model(args)
    data = _load_data(args)
    if mf.solution is None:
        raise StageError("report", ValueError("model carries no prune solution"))
    z, beta = mf.solution
    metrics = _stage("report", solution_metrics, mf.ensemble, z, beta,
                     data.X, data.y)
    alpha = float(mf.provenance.get("alpha", "nan"))
    row = {"alpha": alpha, "valid_mse": None, "passes": None, **metrics}
    _stage("report", model_io.emit_report, [row], args.out, args.format)
    print(f"nodes={metrics['nodes_kept']} trees={metrics['trees_kept']} "
          f"train_mse={metrics['train_mse']:.5g} -> {args.out}")
    return 0


def cmd_compare(args) -> int:
    cfg = RunConfig(args)
    data = _load_data(args)
    test_data = None
    if args.test:
        test_data = _stage("load-data", model_io.load_csv, args.test, args.target)

    def one_split(train, valid, test):
        e = _stage("fit", _fit_ensemble, train, args)
        problem = _stage("solve", build_problem, e, train.X, train.y, cfg.threads)
        weights = make_weights(e, args.weighting)
        path = _stage("solve", regularization_path, problem, weights, args.grid,
                      _search_name(args.search), tol=args.tol, seed=args.seed,
                      valid=(valid.X, valid.y))
        full_v = mse(valid.y, predict_ensemble(e, valid.X))
        if args.budget_nodes:
            pick = best_under_budget(path, args.budget_nodes)
        else:
            pick = select_within_phi(path, args.phi, full_v)
        if pick is None:
            pick = len(path.solutions) - 1
        sol = path.solutions[pick]
        if args.polish:
            sol = polish_solution(problem, sol, args.polish, args.alpha2_value)
        budget = args.budget_nodes or max(1, sol.metrics["nodes_kept"])
        rows = [{"method": "forestprune", "budget_nodes": budget,
                 "nodes_kept": sol.metrics["nodes_kept"],
                 "trees_kept": sol.metrics["trees_kept"],
                 "valid_mse": mse(valid.y, predict_ensemble(e, valid.X, sol.z, sol.beta)),
                 "test_mse": mse(test.y, predict_ensemble(e, test.X, sol.z, sol.beta))
                 if test is not None else None}]
        for method in ("trim", "lasso", "ccp", "bsts"):
            best = _stage("baseline", _pick_baseline, method, e, train, valid,
                          budget, args)
            if best is None:
                rows.append({"method": method, "budget_nodes": budget,
                             "nodes_kept": None, "trees_kept": None,
                             "valid_mse": None, "test_mse": None})
                continue
            v, label, nodes, trees, fn = best
            rows.append({"method": label, "budget_nodes": budget,
                         "nodes_kept": nodes, "trees_kept": trees,
                         "valid_mse": v,
                         "test_mse": mse(test.y, fn(test.X))
                         if test is not None else None})
        return rows

    if args.folds:
        rng = np.random.default_rng(args.seed)
        perm = rng.permutation(data.m)
        folds = np.array_split(perm, args.folds)
        acc: dict[str, list] = {}
        order = []
        for f in range(args.folds):
            test_idx = folds[f]
            rest = np.concatenate([folds[g] for g in range(args.folds) if g != f])
            rest_data = Dataset(data.X[rest], data.y[rest], data.feature_names)
            train, valid = _split(rest_data, args.valid_frac, args.seed + f)
            test = Dataset(data.X[test_idx], data.y[test_idx], data.feature_names)
            for row in one_split(train, valid, test):
                key = row["method"].split()[0]
                if key not in acc:
                    acc[key] = []
                    order.append(key)
                acc[key].append(row)
        rows = []
        for key in order:
            group = acc[key]
            rows.append({
                "method": key,
                "budget_nodes": group[0]["budget_nodes"],
                "nodes_kept": _mean_of(group, "nodes_kept"),
                "trees_kept": _mean_of(group, "trees_kept"),
                "valid_mse": _mean_of(group, "valid_mse"),
                "test_mse": _mean_of(group, "test_mse")})
    else:
        train, valid = _split(data, args.valid_frac, args.seed)
        if valid is None:
            raise StageError("compare", ValueError("compare needs --valid-frac > 0"))
        rows = one_split(train, valid, test_data)

    _stage("report", model_io.emit_report, rows, args.out, args.format,
           BASELINE_COLUMNS)
    for row in rows:
        print("  ".join(model_io._cell(row.get(c)) for c in BASELINE_COLUMNS))
    return 0


def _mean_of(group, key):
    vals = [g[key] for g in group if g[key] is not None]
    return float(np.mean(vals)) if vals else None


def _add_common(sp, *names):
    if "data" in names:
        sp.add_argument("--data", required=True, help="training CSV file")
        sp.add_argument("--target", required=True, help="response column name")
        sp.add_argument("--delimiter", default=",")
    if "model" in names:
        sp.add_argument("--model", required=True, help="saved model file")
    if "solver" in names:
        sp.add_argument("--weighting", choices=["depth", "node"], default="node")
        sp.add_argument("--search", choices=["smallest-index", "best-corr", "none"],
                        default="smallest-index")
        sp.add_argument("--tol", type=float, default=1e-8)
    if "report" in names:
        sp.add_argument("--report", help="write a per-alpha report here")
        sp.add_argument("--format", choices=["csv", "text"], default="csv")
    sp.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="forestprune",
        description="Train tree ensembles and compact them by pruning depth layers.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("train", help="fit a bagging or boosting ensemble")
    _add_common(sp, "data")
    sp.add_argument("--kind", choices=["bagging", "boosting"], required=True)
    sp.add_argument("--out", required=True, help="model file to write")
    sp.add_argument("--trees", type=int, default=0,
                    help="override preset tree count")
    sp.add_argument("--depth", type=int, default=0, help="override preset depth")
    sp.add_argument("--gamma", type=float, default=None,
                    help="boosting learning rate")
    sp.add_argument("--subsample", type=float, default=None,
                    help="boosting row subsample fraction")
    sp.add_argument("--feature-subsample", type=int, default=None,
                    help="features per split (bagging; default sqrt(p))")
    sp.add_argument("--min-leaf", type=int, default=0)
    sp.add_argument("--scale", type=float, default=1.0,
                    help="scale preset tree count for desk runs")
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("prune", help="single-alpha layer-pruning solve")
    _add_common(sp, "data", "model", "solver", "report")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--out", help="write model + solution here")
    sp.set_defaults(fn=cmd_prune)

    sp = sub.add_parser("path", help="warm-started regularization path")
    _add_common(sp, "data", "model", "solver", "report")
    sp.add_argument("--grid", type=int, default=50)
    sp.add_argument("--valid-frac", type=float, default=0.2)
    sp.set_defaults(fn=cmd_path)

    sp = sub.add_parser("polish", help="reweight a pruned model")
    _add_common(sp, "data", "model", "report")
    sp.add_argument("--mode", choices=["ridge", "subset"], required=True)
    sp.add_argument("--alpha2", required=True,
                    help="penalty strength, or comma-separated sweep")
    sp.add_argument("--weighting", choices=["depth", "node"], default="node")
    sp.add_argument("--out", help="write polished model here")
    sp.set_defaults(fn=cmd_polish)

    sp = sub.add_parser("joint", help="prune and reweight in one solve")
    _add_common(sp, "data", "model", "solver", "report")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--alpha2", type=float, required=True)
    sp.add_argument("--rho", type=int, choices=[0, 2], required=True)
    sp.add_argument("--out", help="write model + solution here")
    sp.set_defaults(fn=cmd_joint)

    sp = sub.add_parser("baseline", help="run one competing post-processor")
    _add_common(sp, "data", "model", "report")
    sp.add_argument("--method", choices=["trim", "lasso", "ccp", "bsts"],
                    required=True)
    sp.add_argument("--budget-nodes", type=int, required=True)
    sp.add_argument("--valid-frac", type=float, default=0.2)
    sp.add_argument("--grid", type=int, default=30)
    sp.add_argument("--test", help="optional test CSV for test MSE")
    sp.set_defaults(fn=cmd_baseline)

    sp = sub.add_parser("predict", help="apply a saved model to new rows")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_predict)

    sp = sub.add_parser("report", help="recompute a saved solution's report")
    _add_common(sp, "data", "model")
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=["csv", "text"], default="csv")
    sp.set_defaults(fn=cmd_report)

    sp = sub.add_parser("compare",
                        help="forestprune vs all baselines at matched budgets")
    _add_common(sp, "data", "solver", "report")
    sp.add_argument("--kind", choices=["bagging", "boosting"], required=True)
    sp.add_argument("--out", required=True, help="comparison table file")
    sp.add_argument("--trees", type=int, default=0)
    sp.add_argument("--depth", type=int, default=0)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--subsample", type=float, default=None)
    sp.add_argument("--feature-subsample", type=int, default=None)
    sp.add_argument("--min-leaf", type=int, default=0)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--grid", type=int, default=30)
    sp.add_argument("--phi", type=float, default=0.05,
                    help="acceptable validation-loss increase for selection")
    sp.add_argument("--budget-nodes", type=int, default=0,
                    help="fixed node budget (otherwise phi-selection sets it)")
    sp.add_argument("--valid-frac", type=float, default=0.2)
    sp.add_argument("--folds", type=int, default=0,
                    help="cross-validated comparison with this many folds")
    sp.add_argument("--test", help="held-out test CSV (single-split mode)")
    sp.add_argument("--polish", choices=["ridge", "subset"], default=None)
    sp.add_argument("--alpha2-value", type=float, default=1e-2)
    sp.set_defaults(fn=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except StageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
