"""Histogram gradient-boosted regression trees with two growth strategies."""

from .binning import (BinnedDesign, bin_features, build_design, codes_from_cuts,
                      quantile_cuts)
from .boosting import (Ensemble, fit, load_model, model_matrix, predict,
                       save_model, to_dict, from_dict)
from .encoding import TargetEncoder, fit_target_encoder, ordered_target_encode
from .metrics import r2_score, rmse
from .sampling import goss_sample
from .trees import (FlatTree, GrowthStrategy, HistogramBin, LeafWise, LevelWise,
                    SplitDecision, TreeNode, find_best_split, flatten_tree,
                    grow_tree, node_histograms, split_gain)
from .tuning import (GridSearchResult, GridSearchSpec, cross_val_score,
                     default_grid_spec, grid_search, kfold_indices)

__all__ = [
    "BinnedDesign", "bin_features", "build_design", "codes_from_cuts", "quantile_cuts",
    "Ensemble", "fit", "predict", "model_matrix", "save_model", "load_model",
    "to_dict", "from_dict",
    "TargetEncoder", "fit_target_encoder", "ordered_target_encode",
    "r2_score", "rmse", "goss_sample",
    "FlatTree", "GrowthStrategy", "HistogramBin", "LeafWise", "LevelWise",
    "SplitDecision", "TreeNode", "find_best_split", "flatten_tree", "grow_tree",
    "node_histograms", "split_gain",
    "GridSearchResult", "GridSearchSpec", "cross_val_score", "default_grid_spec",
    "grid_search", "kfold_indices",
]
