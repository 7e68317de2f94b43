"""Run configuration: a single JSON file holding every tunable constant.

Seeds, tree counts, sampling rates, treatment lists, costs, and the dropped
column list all live here so that a run is fully reproducible from
(config, data). Reference values from previously published results can be
echoed into reports via reference_context; they are context, not targets.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import DEFAULT_DROP_COLUMNS
from .errors import ConfigError

MODEL_FAMILIES = ("leafwise", "levelwise")

DEFAULT_REFERENCE_CONTEXT = {
    "test_score_leafwise": 86.48,
    "test_score_levelwise": 89.91,
    "spearman_rho_leafwise": 0.35,
    "spearman_rho_levelwise": 0.48,
    "whatif_porch_baseline_mean": 146936.89,
    "whatif_porch_counterfactual_mean": 149649.98,
    "top_p_values": {
        "BldgType:Twnhsv1Fam": 0.0,
        "BldgType:Duplexv1Fam": 1.737315e-87,
        "OverallQual:num": 2.164378e-08,
        "GarageFinish:RFinvFin": 2.470622e-04,
        "BsmtExposure:GdvAv": 4.727197e-04,
        "HasFireplace:1v0": 6.727178e-04,
        "GarageFinish:UnfvFin": 8.408833e-04,
        "KitchenAbvGr:num": 3.082170e-03,
        "GarageCars:num": 4.782600e-03,
    },
}


def default_config_dict() -> dict:
    return {
        "data": None,
        "out": None,
        "seed": 42,
        "split_ratio": 0.8,
        "drop_columns": list(DEFAULT_DROP_COLUMNS),
        "model": "both",  # leafwise | levelwise | both
        "n_trees": 500,
        "learning_rate": 0.1,
        "leafwise": {"num_leaves": 32, "min_child_samples": 20, "max_depth": 5},
        "levelwise": {"depth": 5, "l2_leaf_reg": 1.0, "border_count": 128},
        "goss": None,  # or {"top_rate": 0.2, "other_rate": 0.1}
        "tune": True,
        "grid": {
            "folds": 5,
            "n_trees": 300,
            "learning_rate": [0.1, 0.05, 0.01],
            "max_depth": [3, 5, 10],
            "min_child_samples": [20, 30, 40],
            "l2_leaf_reg": [1.0, 5.0, 10.0],
            "border_count": [32, 128, 255],
        },
        "shap_top_k": None,  # null: all features with nonzero importance
        "causal": {
            "folds": 5,
            "treatments": None,  # null: every feature; or an explicit name list
            "treatments_from_shap_top_k": None,  # union of both models' top-k
            "cost": 0.0,
            "heterogeneity_feature": "HasPorch",
            "cate_max_depth": 2,
            "cate_min_leaf": 50,
            "policy_max_depth": 2,
            "nuisance_trees": 200,
        },
        "whatif": {"feature": "HasPorch", "value": "1"},
        "reference_context": copy.deepcopy(DEFAULT_REFERENCE_CONTEXT),
    }


@dataclass
class PipelineConfig:
    raw: dict = field(default_factory=default_config_dict)

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def families(self) -> list[str]:
        model = self.raw["model"]
        return list(MODEL_FAMILIES) if model == "both" else [model]

    @property
    def out_dir(self) -> Path:
        return Path(self.raw["out"])

    @property
    def data_path(self) -> Path:
        return Path(self.raw["data"])

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    def goss_rates(self) -> tuple[float, float] | None:
        g = self.raw.get("goss")
        if g is None:
            return None
        return float(g["top_rate"]), float(g["other_rate"])

    def echo(self) -> dict:
        return copy.deepcopy(self.raw)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in out:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(out[key], dict) and isinstance(value, dict):
            for sub, subval in value.items():
                if sub not in out[key]:
                    raise ConfigError(f"unknown config key {key}.{sub}")
                out[key][sub] = subval
        else:
            out[key] = value
    return out


def _validate(cfg: dict) -> None:
    if cfg["data"] is None:
        raise ConfigError("config is missing the input data path ('data')")
    if cfg["out"] is None:
        raise ConfigError("config is missing the output directory ('out')")
    if cfg["model"] not in MODEL_FAMILIES + ("both",):
        raise ConfigError(f"model must be one of {MODEL_FAMILIES + ('both',)}, "
                          f"got {cfg['model']!r}")
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool):
        raise ConfigError("seed must be an explicit integer")
    if not 0.0 < float(cfg["split_ratio"]) < 1.0:
        raise ConfigError(f"split_ratio must be in (0, 1), got {cfg['split_ratio']}")
    if int(cfg["n_trees"]) < 1 or int(cfg["grid"]["n_trees"]) < 1:
        raise ConfigError("tree counts must be positive")
    if int(cfg["grid"]["folds"]) < 2 or int(cfg["causal"]["folds"]) < 2:
        raise ConfigError("cross-validation folds must be >= 2")
    goss = cfg.get("goss")
    if goss is not None:
        a, b = float(goss["top_rate"]), float(goss["other_rate"])
        if a <= 0 or b < 0 or a + b > 1:
            raise ConfigError(f"invalid GOSS rates a={a}, b={b}")
    if cfg["causal"]["cost"] < 0:
        raise ConfigError("treatment cost must be nonnegative")


def load_config(config_path: str | Path | None = None,
                overrides: dict | None = None) -> PipelineConfig:
    """Defaults, optionally merged with a JSON file and CLI overrides."""
    cfg = default_config_dict()
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must contain a JSON object")
        cfg = _merge(cfg, file_cfg)
    if overrides:
        cfg = _merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    _validate(cfg)
    return PipelineConfig(raw=cfg)


def write_default_config(path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(default_config_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
