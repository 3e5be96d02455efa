"""Piecewise-linear regression trees with exact split optimization.

Trees whose interior splits are chosen by exactly minimizing the summed
regularized linear-model loss of the two sides, maintained incrementally
with rank-one inverse updates during threshold scans. Ships CART and
M5-style baselines, closed-form generalization bounds, a numerical
stability harness, and a command-line interface.
"""

from ._scan import backend_name as scan_backend
from .baselines import ConstantTreeModel, train_cart, train_m5
from .bounds import (BoundInputs, BoundReport, EmpiricalStats, NormType,
                     bound_report, empirical_stats, generalization_gap_bound,
                     rademacher_bound_l1, rademacher_bound_l2,
                     rademacher_bound_varsel, ratio_r_hat)
from .dataio import (Dataset, SchemaConfig, load_csv, load_model,
                     model_from_dict, model_to_dict, mse, save_csv,
                     save_model, standardize, train_test_split)
from .harness import (BenchReport, StabilityReport, backend_benchmark,
                      brute_force_split_oracle, speedup_benchmark,
                      stability_report)
from .regress import FitResult, RidgeProblem, append_bias, lasso_fit, ridge_fit
from .splitsearch import (NodeContext, SplitConfig, SplitDecision, Strategy,
                          feature_scan, find_best_split, pruning_bound)
from .tree import (Interior, Leaf, PlrtModel, TrainConfig, predict,
                   predict_batch, select_root_features, train_plrt)

__version__ = "0.1.0"

__all__ = [
    "BenchReport", "BoundInputs", "BoundReport", "ConstantTreeModel",
    "Dataset", "EmpiricalStats", "FitResult", "Interior", "Leaf",
    "NodeContext", "NormType", "PlrtModel", "RidgeProblem", "SchemaConfig",
    "SplitConfig", "SplitDecision", "StabilityReport", "Strategy",
    "TrainConfig", "append_bias", "backend_benchmark", "bound_report",
    "brute_force_split_oracle", "empirical_stats", "feature_scan",
    "find_best_split", "generalization_gap_bound", "lasso_fit", "load_csv",
    "load_model", "model_from_dict", "model_to_dict", "mse", "predict",
    "predict_batch", "pruning_bound",
    "rademacher_bound_l1", "rademacher_bound_l2", "rademacher_bound_varsel",
    "ratio_r_hat", "ridge_fit", "save_csv", "save_model", "scan_backend",
    "select_root_features", "speedup_benchmark", "stability_report",
    "standardize", "train_cart", "train_m5", "train_plrt",
    "train_test_split", "__version__",
]
