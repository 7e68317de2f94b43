"""Synthetic generator matching the Ames housing CSV schema.

Produces a schema-identical stand-in (Id + 79 features + SalePrice) with a
planted additive price function, realistic missingness (LotFrontage,
MasVnrType/MasVnrArea, Electrical, GarageYrBlt, fence/alley style columns),
and a positive confounded porch effect. Tests can point at the real file
instead via the AMES_CSV environment variable.
"""

import csv
import os
from pathlib import Path

import numpy as np

PORCH_EFFECT = 3000.0
TWNHS_EFFECT = -28000.0

_NEIGHBORHOODS = ["NAmes", "CollgCr", "OldTown", "Edwards", "Somerst",
                  "Gilbert", "NridgHt", "Sawyer", "NWAmes", "BrkSide"]
_NBHD_EFFECT = [0, 12000, -15000, -18000, 20000, 8000, 42000, -9000, 5000, -12000]

_BLDG_TYPES = ["1Fam", "TwnhsE", "Twnhs", "Duplex", "2fmCon"]
_BLDG_PROBS = [0.83, 0.07, 0.04, 0.03, 0.03]
_BLDG_EFFECT = {"1Fam": 0.0, "TwnhsE": -12000.0, "Twnhs": TWNHS_EFFECT,
                "Duplex": -20000.0, "2fmCon": -16000.0}

# simple categorical fillers: (levels, probabilities or None for uniform)
_FILLER_CATS = {
    "MSZoning": (["RL", "RM", "FV", "RH", "C (all)"], [0.78, 0.15, 0.04, 0.02, 0.01]),
    "Street": (["Pave", "Grvl"], [0.996, 0.004]),
    "LotShape": (["Reg", "IR1", "IR2", "IR3"], [0.63, 0.33, 0.03, 0.01]),
    "LandContour": (["Lvl", "Bnk", "HLS", "Low"], [0.9, 0.04, 0.03, 0.03]),
    "Utilities": (["AllPub", "NoSeWa"], [0.999, 0.001]),
    "LotConfig": (["Inside", "Corner", "CulDSac", "FR2"], [0.72, 0.18, 0.06, 0.04]),
    "LandSlope": (["Gtl", "Mod", "Sev"], [0.95, 0.04, 0.01]),
    "Condition1": (["Norm", "Feedr", "Artery", "RRAn"], [0.86, 0.06, 0.05, 0.03]),
    "Condition2": (["Norm", "Feedr"], [0.99, 0.01]),
    "HouseStyle": (["1Story", "2Story", "1.5Fin", "SLvl", "SFoyer"],
                   [0.5, 0.3, 0.11, 0.05, 0.04]),
    "RoofStyle": (["Gable", "Hip", "Flat", "Gambrel"], [0.78, 0.19, 0.02, 0.01]),
    "RoofMatl": (["CompShg", "Tar&Grv", "WdShngl"], [0.98, 0.015, 0.005]),
    "Exterior1st": (["VinylSd", "HdBoard", "MetalSd", "Wd Sdng", "Plywood", "CemntBd"],
                    [0.35, 0.15, 0.15, 0.14, 0.11, 0.1]),
    "Exterior2nd": (["VinylSd", "HdBoard", "MetalSd", "Wd Sdng", "Plywood", "CmentBd"],
                    [0.35, 0.14, 0.15, 0.14, 0.12, 0.1]),
    "ExterCond": (["TA", "Gd", "Fa"], [0.88, 0.1, 0.02]),
    "Foundation": (["PConc", "CBlock", "BrkTil", "Slab"], [0.44, 0.43, 0.1, 0.03]),
    "BsmtCond": (["TA", "Gd", "Fa", "Po"], [0.9, 0.04, 0.05, 0.01]),
    "BsmtFinType2": (["Unf", "Rec", "LwQ", "BLQ"], [0.86, 0.06, 0.05, 0.03]),
    "Heating": (["GasA", "GasW", "Grav"], [0.98, 0.015, 0.005]),
    "HeatingQC": (["Ex", "TA", "Gd", "Fa"], [0.51, 0.29, 0.16, 0.04]),
    "CentralAir": (["Y", "N"], [0.93, 0.07]),
    "Functional": (["Typ", "Min1", "Min2", "Mod"], [0.93, 0.03, 0.02, 0.02]),
    "GarageQual": (["TA", "Fa", "Gd"], [0.95, 0.04, 0.01]),
    "GarageCond": (["TA", "Fa", "Gd"], [0.96, 0.03, 0.01]),
    "PavedDrive": (["Y", "N", "P"], [0.92, 0.06, 0.02]),
    "SaleType": (["WD", "New", "COD", "ConLD"], [0.87, 0.08, 0.04, 0.01]),
    "SaleCondition": (["Normal", "Partial", "Abnorml", "Family"],
                      [0.82, 0.08, 0.07, 0.03]),
}

_QUALITY_SCALE = ["Fa", "TA", "Gd", "Ex"]


def _row_dicts(n, seed):
    rng = np.random.default_rng(seed)
    year_built = rng.integers(1885, 2010, size=n)
    yr_sold = rng.integers(2006, 2011, size=n)
    age = np.maximum(0, yr_sold - year_built)
    remodeled = rng.random(n) < 0.45
    year_remod = np.where(
        remodeled,
        np.minimum(2010, year_built + rng.integers(5, 60, size=n)),
        year_built,
    )
    # a few future remodel years to exercise the clamp downstream
    future = rng.random(n) < 0.01
    year_remod = np.where(future, yr_sold + 1, np.maximum(year_built, year_remod))

    quality_latent = (0.35 * (year_built - 1885) / 125.0 + 0.65 * rng.random(n))
    overall_qual = np.clip(np.round(1 + 9 * quality_latent + rng.normal(0, 0.8, n)), 1, 10)
    overall_cond = np.clip(np.round(rng.normal(5.5, 1.1, n)), 1, 9)

    gr_liv = np.round(np.exp(rng.normal(7.25, 0.28, n))).astype(int)
    first_flr = np.round(gr_liv * np.where(rng.random(n) < 0.55, 1.0, 0.6)).astype(int)
    second_flr = gr_liv - first_flr
    bsmt_total = np.round(first_flr * np.clip(rng.normal(0.9, 0.25, n), 0, 1.6)).astype(int)
    bsmt_fin1 = np.round(bsmt_total * rng.beta(2, 2, n)).astype(int)
    bsmt_fin2 = np.zeros(n, dtype=int)
    low_qual = np.where(rng.random(n) < 0.02, rng.integers(50, 400, n), 0)

    garage_cars = np.clip(np.round(0.5 + quality_latent * 2.6 + rng.normal(0, 0.5, n)), 0, 4)
    garage_area = np.where(garage_cars > 0, np.round(garage_cars * rng.normal(260, 40, n)), 0)
    has_garage = garage_cars > 0

    fireplaces = np.clip(np.round(gr_liv / 1400 + rng.normal(0, 0.55, n)), 0, 3).astype(int)

    # porch presence is confounded with quality and age
    porch_propensity = 0.25 + 0.4 * quality_latent - 0.002 * age
    has_open_porch = rng.random(n) < np.clip(porch_propensity, 0.05, 0.9)
    open_porch = np.where(has_open_porch, rng.integers(20, 200, n), 0)
    enclosed = np.where(rng.random(n) < 0.1, rng.integers(30, 250, n), 0)
    three_season = np.where(rng.random(n) < 0.02, rng.integers(100, 300, n), 0)
    screen = np.where(rng.random(n) < 0.07, rng.integers(80, 300, n), 0)
    any_porch = (open_porch + enclosed + three_season + screen) > 0

    wood_deck = np.where(rng.random(n) < 0.48, rng.integers(50, 500, n), 0)
    lot_area = np.round(np.exp(rng.normal(9.1, 0.35, n))).astype(int)
    lot_frontage = np.round(np.clip(rng.normal(70, 18, n), 20, 180))
    lot_frontage_missing = rng.random(n) < 0.18

    nbhd_idx = rng.choice(len(_NEIGHBORHOODS), size=n,
                          p=[0.16, 0.12, 0.1, 0.09, 0.09, 0.09, 0.08, 0.09, 0.09, 0.09])
    bldgecart = rng.choice(len(_BLDG_TYPES), size=n, p=_BLDG_PROBS)
    bldg = [_BLDG_TYPES[i] for i in bldgecart]

    masvnr_missing = np.zeros(n, dtype=bool)
    masvnr_missing[rng.choice(n, size=max(2, n // 200), replace=False)] = True
    masvnr_type = rng.choice(["None", "BrkFace", "Stone", "BrkCmn"], size=n,
                             p=[0.6, 0.3, 0.08, 0.02])
    masvnr_area = np.where(masvnr_type == "None", 0, rng.integers(50, 600, n))

    electrical_missing = np.zeros(n, dtype=bool)
    electrical_missing[rng.integers(0, n)] = True

    pool_area = np.where(rng.random(n) < 0.004, rng.integers(400, 800, n), 0)
    misc_val = np.where(rng.random(n) < 0.03, rng.integers(400, 2500, n), 0)

    price = (
        35000.0
        + 16000.0 * overall_qual
        + 55.0 * gr_liv
        + 28.0 * bsmt_total
        + 9000.0 * garage_cars
        + np.array(_NBHD_EFFECT)[nbhd_idx]
        + np.array([_BLDG_EFFECT[b] for b in bldg])
        + 7000.0 * fireplaces
        + PORCH_EFFECT * any_porch
        + 4000.0 * (wood_deck > 0)
        - 320.0 * age
        + rng.normal(0, 11000, n)
    )
    price = np.maximum(np.round(price), 40000).astype(int)

    fence = np.where(rng.random(n) < 0.2,
                     rng.choice(["MnPrv", "GdPrv", "GdWo", "MnWw"], size=n), "NA")
    alley = np.where(rng.random(n) < 0.06, rng.choice(["Grvl", "Pave"], size=n), "NA")
    pool_qc = np.where(pool_area > 0, "Gd", "NA")
    misc_feature = np.where(misc_val > 0, "Shed", "NA")
    fireplace_qu = np.where(fireplaces > 0,
                            rng.choice(_QUALITY_SCALE, size=n, p=[0.1, 0.5, 0.3, 0.1]), "NA")
    bsmt_qual = rng.choice(["TA", "Gd", "Ex", "Fa"], size=n, p=[0.44, 0.42, 0.08, 0.06])
    bsmt_exposure = rng.choice(["No", "Av", "Gd", "Mn"], size=n, p=[0.65, 0.15, 0.09, 0.11])
    bsmt_fin_type1 = rng.choice(["Unf", "GLQ", "ALQ", "BLQ", "Rec"], size=n,
                                p=[0.3, 0.29, 0.15, 0.1, 0.16])
    exter_qual = rng.choice(_QUALITY_SCALE, size=n, p=[0.02, 0.62, 0.33, 0.03])
    kitchen_qual = rng.choice(_QUALITY_SCALE, size=n, p=[0.03, 0.5, 0.4, 0.07])
    garage_type = np.where(has_garage,
                           rng.choice(["Attchd", "Detchd", "BuiltIn"], size=n,
                                      p=[0.65, 0.28, 0.07]), "NA")
    garage_finish = np.where(has_garage,
                             rng.choice(["Unf", "RFn", "Fin"], size=n,
                                        p=[0.45, 0.3, 0.25]), "NA")
    garage_yr = np.where(has_garage, np.minimum(2010, year_built + rng.integers(0, 3, n)), -1)

    rows = []
    for i in range(n):
        rec = {
            "Id": i + 1,
            "MSSubClass": int(rng.choice([20, 30, 50, 60, 70, 80, 90, 120, 160])),
            "LotFrontage": "NA" if lot_frontage_missing[i] else int(lot_frontage[i]),
            "LotArea": int(lot_area[i]),
            "OverallQual": int(overall_qual[i]),
            "OverallCond": int(overall_cond[i]),
            "YearBuilt": int(year_built[i]),
            "YearRemodAdd": int(year_remod[i]),
            "MasVnrType": "NA" if masvnr_missing[i] else masvnr_type[i],
            "MasVnrArea": "NA" if masvnr_missing[i] else int(masvnr_area[i]),
            "BsmtFinSF1": int(bsmt_fin1[i]),
            "BsmtFinSF2": int(bsmt_fin2[i]),
            "BsmtUnfSF": int(bsmt_total[i] - bsmt_fin1[i] - bsmt_fin2[i]),
            "TotalBsmtSF": int(bsmt_total[i]),
            "1stFlrSF": int(first_flr[i]),
            "2ndFlrSF": int(second_flr[i]),
            "LowQualFinSF": int(low_qual[i]),
            "GrLivArea": int(gr_liv[i]),
            "BsmtFullBath": int(rng.integers(0, 2)),
            "BsmtHalfBath": int(rng.integers(0, 2)),
            "FullBath": int(np.clip(round(gr_liv[i] / 1100), 1, 3)),
            "HalfBath": int(rng.integers(0, 2)),
            "BedroomAbvGr": int(np.clip(round(gr_liv[i] / 600), 1, 5)),
            "KitchenAbvGr": int(rng.choice([1, 1, 1, 2])),
            "TotRmsAbvGrd": int(np.clip(round(gr_liv[i] / 250), 3, 12)),
            "Fireplaces": int(fireplaces[i]),
            "GarageYrBlt": "NA" if garage_yr[i] < 0 else int(garage_yr[i]),
            "GarageCars": int(garage_cars[i]),
            "GarageArea": int(garage_area[i]),
            "WoodDeckSF": int(wood_deck[i]),
            "OpenPorchSF": int(open_porch[i]),
            "EnclosedPorch": int(enclosed[i]),
            "3SsnPorch": int(three_season[i]),
            "ScreenPorch": int(screen[i]),
            "PoolArea": int(pool_area[i]),
            "MiscVal": int(misc_val[i]),
            "MoSold": int(rng.integers(1, 13)),
            "YrSold": int(yr_sold[i]),
            "Neighborhood": _NEIGHBORHOODS[nbhd_idx[i]],
            "BldgType": bldg[i],
            "Electrical": "NA" if electrical_missing[i] else "SBrkr",
            "Fence": str(fence[i]),
            "Alley": str(alley[i]),
            "PoolQC": str(pool_qc[i]),
            "MiscFeature": str(misc_feature[i]),
            "FireplaceQu": str(fireplace_qu[i]),
            "BsmtQual": bsmt_qual[i],
            "BsmtExposure": bsmt_exposure[i],
            "BsmtFinType1": bsmt_fin_type1[i],
            "ExterQual": exter_qual[i],
            "KitchenQual": kitchen_qual[i],
            "GarageType": str(garage_type[i]),
            "GarageFinish": str(garage_finish[i]),
            "SalePrice": int(price[i]),
        }
        for name, (levels, probs) in _FILLER_CATS.items():
            rec[name] = str(rng.choice(levels, p=probs))
        rows.append(rec)
    return rows


def write_ames_like_csv(path, n_rows=1460, seed=20240) -> Path:
    """Write a synthetic Ames-schema CSV and return its path."""
    from amescausal.dataset import ames_schema

    names = [c.name for c in ames_schema()]
    rows = _row_dicts(n_rows, seed)
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for rec in rows:
            writer.writerow([rec[name] for name in names])
    return path


def ames_csv_path(tmp_dir, n_rows=1460, seed=20240) -> Path:
    """Path to the configured real file (AMES_CSV) or a generated stand-in."""
    env = os.environ.get("AMES_CSV")
    if env:
        return Path(env)
    path = Path(tmp_dir) / f"ames_like_{n_rows}_{seed}.csv"
    if not path.exists():
        write_ames_like_csv(path, n_rows=n_rows, seed=seed)
    return path
