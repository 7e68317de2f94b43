"""Pipeline stages from raw CSV to the alignment report.

Every stage writes its artifacts into the configured output directory and
records their content hashes in manifest.json; downstream stages verify the
hash of anything they consume, so a stale or hand-edited artifact fails
loudly with the name of the command that produces it. The machine-readable
report contains only numbers reproducible from (config, data, seed);
wall-clock timings go to the human-readable report only.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from . import causal as causal_mod
from . import shap as shap_mod
from .alignment import align_report
from .config import PipelineConfig
from .dataset import (SplitPair, Table, ames_schema, clean_table, cleaned_schema,
                      derive_features, load_table, split, write_csv)
from .errors import ConfigError, DataError, StageError
from .gbdt import (Ensemble, GridSearchSpec, LeafWise, LevelWise, fit,
                   grid_search, load_model, predict, r2_score, save_model)

COMMANDS = ("ingest", "train", "tune", "explain", "causal", "whatif", "align", "all")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Workspace:
    """Output directory with a hash manifest of produced artifacts."""

    def __init__(self, out_dir: Path):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.out / "manifest.json"

    def _manifest(self) -> dict:
        if self.manifest_path.exists():
            with open(self.manifest_path, encoding="utf-8") as fh:
                return json.load(fh)
        return {"artifacts": {}}

    def record(self, name: str, producer: str) -> Path:
        path = self.out / name
        manifest = self._manifest()
        manifest["artifacts"][name] = {"sha256": _sha256(path), "producer": producer}
        with open(self.manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    def require(self, name: str, producer: str) -> Path:
        """Path of a prerequisite artifact, hash-verified against the manifest."""
        path = self.out / name
        entry = self._manifest()["artifacts"].get(name)
        if entry is None or not path.exists():
            raise StageError(
                f"missing prerequisite artifact {name!r}; run `{producer}` first",
                required_command=producer)
        if _sha256(path) != entry["sha256"]:
            raise StageError(
                f"artifact {name!r} does not match the hash recorded by "
                f"`{entry['producer']}`; re-run `{producer}`",
                required_command=producer)
        return path

    def has(self, name: str) -> bool:
        return name in self._manifest()["artifacts"] and (self.out / name).exists()

    def write_json(self, name: str, payload: dict, producer: str) -> Path:
        path = self.out / name
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return self.record(name, producer)

    def read_json(self, name: str, producer: str) -> dict:
        path = self.require(name, producer)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)


def _load_cleaned(cfg: PipelineConfig, ws: Workspace) -> Table:
    path = ws.require("cleaned.csv", "ingest")
    return load_table(path, cleaned_schema(tuple(cfg["drop_columns"])))


def _split_pair(cfg: PipelineConfig, table: Table) -> SplitPair:
    return split(table, float(cfg["split_ratio"]), cfg.seed)


def _strategy_for(family: str, params: dict):
    if family == "leafwise":
        return LeafWise(num_leaves=int(params["num_leaves"]),
                        min_child_samples=int(params["min_child_samples"]),
                        max_depth=int(params["max_depth"]))
    return LevelWise(depth=int(params["depth"]),
                     l2_leaf_reg=float(params["l2_leaf_reg"]),
                     border_count=int(params["border_count"]))


def _family_params(cfg: PipelineConfig, ws: Workspace, family: str) -> tuple[dict, float, str]:
    """(strategy params, learning rate, source) with tuned params preferred."""
    name = f"cv_{family}.json"
    if ws.has(name):
        tuned = ws.read_json(name, "tune")
        params = dict(tuned["best_params"])
        lr = float(params.pop("learning_rate"))
        return params, lr, "tuned"
    return dict(cfg[family]), float(cfg["learning_rate"]), "config"


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def stage_ingest(cfg: PipelineConfig) -> dict:
    ws = Workspace(cfg.out_dir)
    if not cfg.data_path.exists():
        raise DataError(f"input data file not found: {cfg.data_path}")
    raw = load_table(cfg.data_path, ames_schema())
    cleaned = clean_table(derive_features(raw), tuple(cfg["drop_columns"]))
    write_csv(cleaned, ws.out / "cleaned.csv")
    ws.record("cleaned.csv", "ingest")
    summary = {
        "rows_in": raw.n_rows,
        "rows_out": cleaned.n_rows,
        "rows_dropped": raw.n_rows - cleaned.n_rows,
        "n_features": len(cleaned.feature_names),
        "dropped_columns": list(cfg["drop_columns"]),
    }
    ws.write_json("ingest.json", summary, "ingest")
    return summary


def stage_tune(cfg: PipelineConfig) -> dict:
    ws = Workspace(cfg.out_dir)
    pair = _split_pair(cfg, _load_cleaned(cfg, ws))
    grid = cfg["grid"]
    out = {}
    for family in cfg.families:
        if family == "leafwise":
            spec = GridSearchSpec(
                family=family,
                learning_rate=tuple(grid["learning_rate"]),
                max_depth=tuple(grid["max_depth"]),
                min_child_samples=tuple(grid["min_child_samples"]),
                folds=int(grid["folds"]),
                n_trees=int(grid["n_trees"]),
            )
        else:
            spec = GridSearchSpec(
                family=family,
                learning_rate=tuple(grid["learning_rate"]),
                max_depth=tuple(grid["max_depth"]),
                l2_leaf_reg=tuple(grid["l2_leaf_reg"]),
                border_count=tuple(grid["border_count"]),
                folds=int(grid["folds"]),
                n_trees=int(grid["n_trees"]),
            )
        result = grid_search(pair.train, spec, seed=cfg.seed)
        if isinstance(result.best_strategy, LeafWise):
            best = {"learning_rate": result.best_learning_rate,
                    "max_depth": result.best_strategy.max_depth,
                    "num_leaves": result.best_strategy.num_leaves,
                    "min_child_samples": result.best_strategy.min_child_samples}
        else:
            best = {"learning_rate": result.best_learning_rate,
                    "depth": result.best_strategy.depth,
                    "l2_leaf_reg": result.best_strategy.l2_leaf_reg,
                    "border_count": result.best_strategy.border_count}
        payload = {"family": family, "best_params": best,
                   "best_mean_r2": result.best_score, "cv_table": result.table}
        ws.write_json(f"cv_{family}.json", payload, "tune")
        out[family] = payload
    return out


def stage_train(cfg: PipelineConfig) -> dict:
    ws = Workspace(cfg.out_dir)
    pair = _split_pair(cfg, _load_cleaned(cfg, ws))
    metrics = {}
    for family in cfg.families:
        params, lr, source = _family_params(cfg, ws, family)
        strategy = _strategy_for(family, params)
        model = fit(pair.train, strategy, learning_rate=lr,
                    n_trees=int(cfg["n_trees"]), goss=cfg.goss_rates(),
                    seed=cfg.seed)
        save_model(model, ws.out / f"model_{family}.json")
        ws.record(f"model_{family}.json", "train")
        test_r2 = r2_score(predict(model, pair.test), pair.test.target)
        metrics[family] = {
            "params": {**params, "learning_rate": lr},
            "params_source": source,
            "n_trees": int(cfg["n_trees"]),
            "test_r2": test_r2,
            "test_score": round(test_r2 * 100.0, 4),
            "final_train_rmse": model.train_rmse[-1],
        }
    ws.write_json("train_metrics.json", metrics, "train")
    return metrics


def _load_family_model(ws: Workspace, family: str) -> Ensemble:
    return load_model(ws.require(f"model_{family}.json", "train"))


def stage_explain(cfg: PipelineConfig) -> dict:
    ws = Workspace(cfg.out_dir)
    pair = _split_pair(cfg, _load_cleaned(cfg, ws))
    ids = pair.test.numeric[pair.test.id_name]
    out = {}
    for family in cfg.families:
        model = _load_family_model(ws, family)
        matrix = shap_mod.explain_ensemble(model, pair.test)
        pred = predict(model, pair.test)
        residual = np.abs(matrix.base_value + matrix.values.sum(axis=1) - pred)
        rel = float(np.max(residual / np.maximum(np.abs(pred), 1e-12)))
        ranking = shap_mod.global_importance(matrix)
        shap_mod.write_shap_csv(matrix, ids, ws.out / f"shap_{family}.csv")
        ws.record(f"shap_{family}.csv", "explain")
        shap_mod.write_ranking_csv(ranking, ws.out / f"importance_{family}.csv")
        ws.record(f"importance_{family}.csv", "explain")
        payload = {"family": family, "base_value": matrix.base_value,
                   "max_relative_additivity_residual": rel,
                   "entries": [[name, score] for name, score in ranking.entries]}
        ws.write_json(f"importance_{family}.json", payload, "explain")
        out[family] = payload
    return out


def _resolve_treatments(cfg: PipelineConfig, ws: Workspace, train: Table) -> list[str]:
    causal_cfg = cfg["causal"]
    explicit = causal_cfg.get("treatments")
    if explicit:
        for name in explicit:
            if not train.has_column(name):
                raise ConfigError(f"configured treatment {name!r} is not a column")
        return list(explicit)
    top_k = causal_cfg.get("treatments_from_shap_top_k")
    if top_k:
        union: list[str] = []
        for family in cfg.families:
            payload = ws.read_json(f"importance_{family}.json", "explain")
            for name, _score in payload["entries"][: int(top_k)]:
                if name not in union:
                    union.append(name)
        return union
    return list(train.feature_names)


def stage_causal(cfg: PipelineConfig) -> dict:
    ws = Workspace(cfg.out_dir)
    pair = _split_pair(cfg, _load_cleaned(cfg, ws))
    train = pair.train
    causal_cfg = cfg["causal"]
    nuisance = causal_mod.NuisanceSpec(n_trees=int(causal_cfg["nuisance_trees"]))
    folds = int(causal_cfg["folds"])

    effects: list[causal_mod.CausalEffect] = []
    skipped: list[dict] = []
    for name in _resolve_treatments(cfg, ws, train):
        try:
            spec = causal_mod.treatment_spec_for(train, name)
            effects.extend(causal_mod.dml_effect(train, spec, folds=folds,
                                                 seed=cfg.seed, nuisance=nuisance))
        except DataError as exc:
            skipped.append({"feature": name, "reason": str(exc)})
    if not effects:
        raise DataError("no treatment produced an estimable causal effect")
    ordered = causal_mod.significance_table(effects)
    causal_mod.write_effects_csv(ordered, ws.out / "effects.csv")
    ws.record("effects.csv", "causal")
    payload = {
        "effects": [{"feature": e.feature, "contrast": e.contrast, "ate": e.ate,
                     "stderr": e.stderr, "p_value": e.p_value} for e in ordered],
        "skipped": skipped,
        "causal_feature_order": causal_mod.causal_feature_order(ordered),
    }
    ws.write_json("effects.json", payload, "causal")

    het_feature = causal_cfg["heterogeneity_feature"]
    het = {}
    if het_feature and train.has_column(het_feature):
        spec = causal_mod.treatment_spec_for(train, het_feature)
        psi = causal_mod.pseudo_outcomes(train, spec, folds=folds, seed=cfg.seed,
                                         nuisance=nuisance)
        covariates = train.drop_columns([het_feature])
        cate = causal_mod.fit_cate_tree(psi, covariates,
                                        max_depth=int(causal_cfg["cate_max_depth"]),
                                        min_leaf=int(causal_cfg["cate_min_leaf"]))
        policy = causal_mod.fit_policy_tree(psi, covariates,
                                            treatment_cost=float(causal_cfg["cost"]),
                                            max_depth=int(causal_cfg["policy_max_depth"]),
                                            min_leaf=int(causal_cfg["cate_min_leaf"]))
        (ws.out / "cate_tree.txt").write_text(cate.to_text() + "\n", encoding="utf-8")
        ws.record("cate_tree.txt", "causal")
        (ws.out / "policy_tree.txt").write_text(policy.to_text() + "\n", encoding="utf-8")
        ws.record("policy_tree.txt", "causal")
        het = {"feature": het_feature, "mean_effect": float(np.mean(psi)),
               "cate_tree": cate.to_dict(), "policy_tree": policy.to_dict()}
        ws.write_json("heterogeneity.json", het, "causal")
    return {"effects": payload, "heterogeneity": het}


def stage_whatif(cfg: PipelineConfig, feature: str | None = None,
                 value: str | None = None) -> dict:
    ws = Workspace(cfg.out_dir)
    pair = _split_pair(cfg, _load_cleaned(cfg, ws))
    feature = feature or cfg["whatif"]["feature"]
    value = value if value is not None else cfg["whatif"]["value"]
    out = {}
    for family in cfg.families:
        model = _load_family_model(ws, family)
        result = causal_mod.whatif(model, pair.test, feature, value)
        out[family] = {
            "feature": result.feature, "value": result.value,
            "baseline_mean": result.baseline_mean,
            "counterfactual_mean": result.counterfactual_mean,
            "n_affected": result.n_affected,
        }
    ws.write_json("whatif.json", out, "whatif")
    return out


def stage_align(cfg: PipelineConfig) -> dict:
    ws = Workspace(cfg.out_dir)
    effects_payload = ws.read_json("effects.json", "causal")
    causal_order = effects_payload["causal_feature_order"]
    out = {}
    for family in cfg.families:
        imp = ws.read_json(f"importance_{family}.json", "explain")
        entries = imp["entries"]
        k = cfg["shap_top_k"]
        if k is None:
            nonzero = sum(1 for _name, score in entries if score > 0.0)
            k = max(2, nonzero)
        shap_order = [name for name, _score in entries]
        result = align_report(shap_order, causal_order, k=int(k))
        payload = {"family": family, "k": int(k),
                   "shap_order_top_k": shap_order[: int(k)],
                   "causal_order": causal_order,
                   **result.to_dict()}
        ws.write_json(f"alignment_{family}.json", payload, "align")
        out[family] = payload
    return out


# ---------------------------------------------------------------------------
# End to end
# ---------------------------------------------------------------------------

def stage_all(cfg: PipelineConfig) -> dict:
    ws = Workspace(cfg.out_dir)
    timings: dict[str, float] = {}
    report: dict = {"config": cfg.echo()}

    def timed(name, fn, *args):
        t0 = time.perf_counter()
        result = fn(*args)
        timings[name] = time.perf_counter() - t0
        return result

    report["ingest"] = timed("ingest", stage_ingest, cfg)
    if cfg["tune"]:
        report["cv"] = timed("tune", stage_tune, cfg)
    report["train"] = timed("train", stage_train, cfg)
    report["explain"] = timed("explain", stage_explain, cfg)
    causal_out = timed("causal", stage_causal, cfg)
    report["effects"] = causal_out["effects"]
    report["heterogeneity"] = causal_out["heterogeneity"]
    report["whatif"] = timed("whatif", stage_whatif, cfg)
    report["alignment"] = timed("align", stage_align, cfg)
    report["reference_context"] = cfg["reference_context"]

    ws.write_json("report.json", report, "all")
    (ws.out / "report.txt").write_text(_render_text_report(report, timings),
                                       encoding="utf-8")
    ws.record("report.txt", "all")
    return report


def _render_text_report(report: dict, timings: dict[str, float]) -> str:
    lines = ["run report", "=" * 60]
    ing = report["ingest"]
    lines.append(f"rows: {ing['rows_in']} in, {ing['rows_out']} after cleaning "
                 f"({ing['rows_dropped']} dropped), {ing['n_features']} features")
    for family, m in report["train"].items():
        lines.append(f"[{family}] test R2 = {m['test_r2']:.4f} "
                     f"(score {m['test_score']:.2f}), params: {m['params']} "
                     f"[{m['params_source']}]")
    for family, imp in report["explain"].items():
        top = ", ".join(f"{n}={s:.1f}" for n, s in imp["entries"][:8])
        lines.append(f"[{family}] top importance: {top}")
    lines.append("top causal effects (feature contrast ate stderr p):")
    for e in report["effects"]["effects"][:10]:
        lines.append(f"  {e['feature']:>16} {e['contrast']:>12} "
                     f"{e['ate']:>12.2f} {e['stderr']:>10.2f} {e['p_value']:.3e}")
    for family, w in report["whatif"].items():
        lines.append(f"[{family}] what-if {w['feature']}={w['value']}: "
                     f"{w['baseline_mean']:.2f} -> {w['counterfactual_mean']:.2f} "
                     f"({w['n_affected']} rows affected)")
    for family, a in report["alignment"].items():
        lines.append(f"[{family}] spearman rho = {a['spearman_rho']:.4f} "
                     f"over {a['n_common']} common features (k = {a['k']})")
    lines.append("reference context (externally reported values, not targets):")
    for key, val in sorted(report["reference_context"].items()):
        if not isinstance(val, dict):
            lines.append(f"  {key}: {val}")
    lines.append("timings (seconds):")
    for name, dt in timings.items():
        lines.append(f"  {name}: {dt:.2f}")
    return "\n".join(lines) + "\n"


def run(command: str, cfg: PipelineConfig) -> dict:
    """Dispatch one pipeline command; returns its summary dict."""
    stages = {
        "ingest": stage_ingest,
        "tune": stage_tune,
        "train": stage_train,
        "explain": stage_explain,
        "causal": stage_causal,
        "whatif": stage_whatif,
        "align": stage_align,
        "all": stage_all,
    }
    if command not in stages:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
    return stages[command](cfg)
