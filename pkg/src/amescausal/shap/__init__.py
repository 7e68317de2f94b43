"""Tree SHAP attribution and global importance ranking."""

from .explain import (ImportanceRanking, ShapMatrix, brute_force_shapley,
                      expected_value, explain_ensemble, global_importance,
                      tree_shap_single, tree_used_features, write_ranking_csv,
                      write_shap_csv)

__all__ = [
    "ImportanceRanking", "ShapMatrix", "brute_force_shapley", "expected_value",
    "explain_ensemble", "global_importance", "tree_shap_single",
    "tree_used_features", "write_ranking_csv", "write_shap_csv",
]
