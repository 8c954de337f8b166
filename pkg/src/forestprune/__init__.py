"""Compact regression tree ensembles by pruning depth layers."""

from .trees import (Dataset, Node, RegressionTree, ccp_prune, fit_tree,
                    layer_node_counts, predict_tree, truncate_tree)
from .ensembles import Ensemble, fit_bagging, fit_boosting, predict_ensemble
from .depthdiff import DepthDiffMatrix, compute_depth_diff, pruned_predictions
from .solver import (PathResult, PruneProblem, PruneSolution, SolverState,
                     WeightScheme, alpha_max, block_update, build_problem,
                     cbcd_solve, exhaustive_oracle, joint_block_update,
                     joint_solve, local_search_step, make_weights, objective,
                     regularization_path, solution_from, solution_metrics)
from .polish import (PolishBasis, build_polish_basis, expand_beta,
                     ridge_polish, subset_polish, subset_polish_exact)
from .baselines import (Budget, baseline_trim, bsts, ccp_sweep,
                        lasso_lambda_max, lasso_prune, predict_weighted,
                        tree_node_counts)
from .pipeline import polish_solution, run_framework

__version__ = "0.1.0"
