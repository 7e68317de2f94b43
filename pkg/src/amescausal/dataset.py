"""Columnar dataset ingestion, feature derivation, cleaning, and splitting.

Tables are column-major: numeric columns are float64 vectors with an explicit
missing mask, categorical columns are int32 level codes into a per-column
level dictionary whose index 0 is always the reserved "NA" level (meaning
"missing or feature absent"). Tables are immutable by convention: every
operation returns a new Table.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, SchemaError

NA_LEVEL = "NA"

NUMERIC = "numeric"
CATEGORICAL = "categorical"

ROLE_FEATURE = "feature"
ROLE_TARGET = "target"
ROLE_ID = "id"

#: Columns removed during cleaning: temporal columns superseded by the derived
#: age/remodel features, and raw area / presence columns superseded by the
#: derived binary flags. Declared here (and echoed into run configs) so the
#: exact list is auditable.
DEFAULT_DROP_COLUMNS = (
    "GarageYrBlt",
    "YearBuilt",
    "YrSold",
    "YearRemodAdd",
    "MoSold",
    "WoodDeckSF",
    "OpenPorchSF",
    "EnclosedPorch",
    "3SsnPorch",
    "ScreenPorch",
    "Fireplaces",
    "Fence",
    "PoolArea",
    "MiscVal",
)

_PORCH_COLUMNS = ("OpenPorchSF", "EnclosedPorch", "3SsnPorch", "ScreenPorch")


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str  # numeric | categorical
    role: str = ROLE_FEATURE  # feature | target | id

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"unknown column kind {self.kind!r} for {self.name!r}")
        if self.role not in (ROLE_FEATURE, ROLE_TARGET, ROLE_ID):
            raise SchemaError(f"unknown column role {self.role!r} for {self.name!r}")


def validate_schema(schema: list[ColumnSchema]) -> None:
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise SchemaError(f"duplicate column names in schema: {dupes}")
    targets = [c.name for c in schema if c.role == ROLE_TARGET]
    ids = [c.name for c in schema if c.role == ROLE_ID]
    if len(targets) != 1:
        raise SchemaError(f"schema must declare exactly one target column, got {targets}")
    if len(ids) != 1:
        raise SchemaError(f"schema must declare exactly one id column, got {ids}")


@dataclass
class Table:
    """Column-major dataset with missing-value tracking.

    numeric maps column name -> float64 values; numeric_missing holds the
    corresponding missing masks (missing cells carry NaN in the value vector
    as well). categorical maps column name -> int32 codes into levels[name],
    where levels[name][0] == "NA" always.
    """

    schema: list[ColumnSchema]
    n_rows: int
    numeric: dict[str, np.ndarray] = field(default_factory=dict)
    numeric_missing: dict[str, np.ndarray] = field(default_factory=dict)
    categorical: dict[str, np.ndarray] = field(default_factory=dict)
    levels: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        validate_schema(self.schema)
        for col in self.schema:
            if col.kind == NUMERIC:
                if col.name not in self.numeric:
                    raise SchemaError(f"numeric column {col.name!r} missing from data")
                if len(self.numeric[col.name]) != self.n_rows:
                    raise SchemaError(f"column {col.name!r} has wrong length")
            else:
                if col.name not in self.categorical:
                    raise SchemaError(f"categorical column {col.name!r} missing from data")
                if len(self.categorical[col.name]) != self.n_rows:
                    raise SchemaError(f"column {col.name!r} has wrong length")
                lv = self.levels[col.name]
                if not lv or lv[0] != NA_LEVEL:
                    raise SchemaError(f"column {col.name!r} must reserve level 0 as {NA_LEVEL!r}")
                codes = self.categorical[col.name]
                if codes.size and (codes.min() < 0 or codes.max() >= len(lv)):
                    raise SchemaError(f"column {col.name!r} has out-of-range level codes")

    # -- lookups ---------------------------------------------------------

    def column(self, name: str) -> ColumnSchema:
        for col in self.schema:
            if col.name == name:
                return col
        raise SchemaError(f"no column named {name!r}")

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.schema)

    @property
    def target_name(self) -> str:
        return next(c.name for c in self.schema if c.role == ROLE_TARGET)

    @property
    def id_name(self) -> str:
        return next(c.name for c in self.schema if c.role == ROLE_ID)

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.schema if c.role == ROLE_FEATURE]

    @property
    def target(self) -> np.ndarray:
        return self.numeric[self.target_name]

    def level_strings(self, name: str) -> np.ndarray:
        """Decode a categorical column back to level strings."""
        lv = np.asarray(self.levels[name], dtype=object)
        return lv[self.categorical[name]]

    # -- construction helpers -------------------------------------------

    def take(self, rows: np.ndarray) -> "Table":
        """New Table containing the given rows (level dictionaries are kept)."""
        rows = np.asarray(rows)
        return Table(
            schema=list(self.schema),
            n_rows=int(rows.size),
            numeric={k: v[rows].copy() for k, v in self.numeric.items()},
            numeric_missing={k: v[rows].copy() for k, v in self.numeric_missing.items()},
            categorical={k: v[rows].copy() for k, v in self.categorical.items()},
            levels={k: list(v) for k, v in self.levels.items()},
        )

    def drop_columns(self, names: list[str]) -> "Table":
        gone = set(names)
        return Table(
            schema=[c for c in self.schema if c.name not in gone],
            n_rows=self.n_rows,
            numeric={k: v for k, v in self.numeric.items() if k not in gone},
            numeric_missing={k: v for k, v in self.numeric_missing.items() if k not in gone},
            categorical={k: v for k, v in self.categorical.items() if k not in gone},
            levels={k: v for k, v in self.levels.items() if k not in gone},
        )

    def replace_target(self, name: str) -> "Table":
        """Re-point the target role at an existing column (old target becomes a feature)."""
        new_schema = []
        for c in self.schema:
            if c.name == name:
                new_schema.append(ColumnSchema(c.name, c.kind, ROLE_TARGET))
            elif c.role == ROLE_TARGET:
                new_schema.append(ColumnSchema(c.name, c.kind, ROLE_FEATURE))
            else:
                new_schema.append(c)
        return Table(new_schema, self.n_rows, dict(self.numeric),
                     dict(self.numeric_missing), dict(self.categorical),
                     {k: list(v) for k, v in self.levels.items()})

    def with_new_target(self, name: str, values: np.ndarray,
                        drop: tuple[str, ...] = ()) -> "Table":
        """New Table whose target is `values`; the old target column and any
        columns in `drop` are removed entirely."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_rows,):
            raise SchemaError(f"target column {name!r} has wrong length")
        gone = set(drop) | {self.target_name, name}
        schema = [c for c in self.schema if c.name not in gone]
        schema.append(ColumnSchema(name, NUMERIC, ROLE_TARGET))
        numeric = {k: v for k, v in self.numeric.items() if k not in gone}
        missing = {k: v for k, v in self.numeric_missing.items() if k not in gone}
        numeric[name] = values
        missing[name] = np.isnan(values)
        return Table(schema, self.n_rows, numeric, missing,
                     {k: v for k, v in self.categorical.items() if k not in gone},
                     {k: list(v) for k, v in self.levels.items() if k not in gone})

    def with_numeric_column(self, name: str, values: np.ndarray,
                            role: str = ROLE_FEATURE) -> "Table":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_rows,):
            raise SchemaError(f"column {name!r} has wrong length")
        t = self.drop_columns([name]) if self.has_column(name) else self
        numeric = dict(t.numeric)
        missing = dict(t.numeric_missing)
        numeric[name] = values
        missing[name] = np.isnan(values)
        return Table(t.schema + [ColumnSchema(name, NUMERIC, role)], t.n_rows,
                     numeric, missing, dict(t.categorical),
                     {k: list(v) for k, v in t.levels.items()})

    def set_values(self, name: str, rows: np.ndarray, value) -> "Table":
        """Copy of the table with `name` set to `value` on the given rows."""
        col = self.column(name)
        out = self.take(np.arange(self.n_rows))
        if col.kind == NUMERIC:
            out.numeric[name][rows] = float(value)
            out.numeric_missing[name][rows] = False
        else:
            lv = out.levels[name]
            if str(value) not in lv:
                raise DataError(f"{value!r} is not a level of column {name!r}")
            out.categorical[name][rows] = lv.index(str(value))
        return out


@dataclass(frozen=True)
class SplitPair:
    train: Table
    test: Table
    seed: int
    ratio: float


# ---------------------------------------------------------------------------
# Ames schema
# ---------------------------------------------------------------------------

_AMES_NUMERIC = (
    "MSSubClass", "LotFrontage", "LotArea", "OverallQual", "OverallCond",
    "YearBuilt", "YearRemodAdd", "MasVnrArea", "BsmtFinSF1", "BsmtFinSF2",
    "BsmtUnfSF", "TotalBsmtSF", "1stFlrSF", "2ndFlrSF", "LowQualFinSF",
    "GrLivArea", "BsmtFullBath", "BsmtHalfBath", "FullBath", "HalfBath",
    "BedroomAbvGr", "KitchenAbvGr", "TotRmsAbvGrd", "Fireplaces",
    "GarageYrBlt", "GarageCars", "GarageArea", "WoodDeckSF", "OpenPorchSF",
    "EnclosedPorch", "3SsnPorch", "ScreenPorch", "PoolArea", "MiscVal",
    "MoSold", "YrSold",
)

_AMES_CATEGORICAL = (
    "MSZoning", "Street", "Alley", "LotShape", "LandContour", "Utilities",
    "LotConfig", "LandSlope", "Neighborhood", "Condition1", "Condition2",
    "BldgType", "HouseStyle", "RoofStyle", "RoofMatl", "Exterior1st",
    "Exterior2nd", "MasVnrType", "ExterQual", "ExterCond", "Foundation",
    "BsmtQual", "BsmtCond", "BsmtExposure", "BsmtFinType1", "BsmtFinType2",
    "Heating", "HeatingQC", "CentralAir", "Electrical", "KitchenQual",
    "Functional", "FireplaceQu", "GarageType", "GarageFinish", "GarageQual",
    "GarageCond", "PavedDrive", "PoolQC", "Fence", "MiscFeature", "SaleType",
    "SaleCondition",
)


def ames_schema() -> list[ColumnSchema]:
    """Schema of the Ames housing CSV: Id, 79 features, SalePrice."""
    schema = [ColumnSchema("Id", NUMERIC, ROLE_ID)]
    schema += [ColumnSchema(n, NUMERIC) for n in _AMES_NUMERIC]
    schema += [ColumnSchema(n, CATEGORICAL) for n in _AMES_CATEGORICAL]
    schema.append(ColumnSchema("SalePrice", NUMERIC, ROLE_TARGET))
    return schema


def cleaned_schema(drop_columns: tuple[str, ...] | list[str] = DEFAULT_DROP_COLUMNS) -> list[ColumnSchema]:
    """Schema of the exported cleaned table: source columns minus the drop
    list, plus the derived columns appended by derive_features."""
    gone = set(drop_columns)
    schema = [c for c in ames_schema() if c.name not in gone]
    schema.append(ColumnSchema("AgeAtSale", NUMERIC))
    schema.append(ColumnSchema("YearsSinceRemodel", NUMERIC))
    for name in ("HasDeck", "HasPorch", "HasFireplace", "HasFence"):
        schema.append(ColumnSchema(name, CATEGORICAL))
    return schema


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _parse_numeric(cell: str) -> float:
    cell = cell.strip()
    if cell == "" or cell == NA_LEVEL:
        return np.nan
    try:
        return float(cell)
    except ValueError:
        return np.nan


def load_table(csv_path: str | Path, schema: list[ColumnSchema]) -> Table:
    """Load a comma-separated file against a declared schema.

    The header must contain exactly the schema's column names (any order).
    Empty and "NA" cells are missing: numeric missing cells get NaN plus a
    mask bit, categorical ones get the reserved "NA" level.
    """
    validate_schema(schema)
    path = Path(csv_path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        expected = {c.name for c in schema}
        got = set(header)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise SchemaError(
                f"header does not match schema: missing columns {missing}, "
                f"unexpected columns {extra}"
            )
        raw_rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(
                    f"row at line {line_no} has {len(row)} cells, expected {len(header)}"
                )
            raw_rows.append(row)

    n = len(raw_rows)
    col_idx = {name: header.index(name) for name in expected}
    numeric: dict[str, np.ndarray] = {}
    numeric_missing: dict[str, np.ndarray] = {}
    categorical: dict[str, np.ndarray] = {}
    levels: dict[str, list[str]] = {}

    for col in schema:
        j = col_idx[col.name]
        if col.kind == NUMERIC:
            vals = np.array([_parse_numeric(r[j]) for r in raw_rows], dtype=np.float64)
            numeric[col.name] = vals
            numeric_missing[col.name] = np.isnan(vals)
        else:
            cells = [r[j].strip() for r in raw_rows]
            lv = [NA_LEVEL]
            index = {NA_LEVEL: 0}
            codes = np.empty(n, dtype=np.int32)
            for i, cell in enumerate(cells):
                if cell == "" or cell == NA_LEVEL:
                    codes[i] = 0
                    continue
                code = index.get(cell)
                if code is None:
                    code = len(lv)
                    index[cell] = code
                    lv.append(cell)
                codes[i] = code
            categorical[col.name] = codes
            levels[col.name] = lv

    return Table(list(schema), n, numeric, numeric_missing, categorical, levels)


# ---------------------------------------------------------------------------
# Feature derivation
# ---------------------------------------------------------------------------

def _require_columns(t: Table, names: tuple[str, ...]) -> None:
    for name in names:
        if not t.has_column(name):
            raise SchemaError(f"required source column {name!r} is missing")


def _flag_column(values: np.ndarray) -> tuple[np.ndarray, list[str]]:
    # binary categorical flag: levels {0, 1} plus the reserved NA slot
    codes = np.where(values, 2, 1).astype(np.int32)
    return codes, [NA_LEVEL, "0", "1"]


def derive_features(t: Table) -> Table:
    """Append the six derived columns used throughout the analysis.

    AgeAtSale and YearsSinceRemodel are numeric (the latter clamped at zero);
    HasDeck, HasPorch, HasFireplace, and HasFence are binary categorical
    flags with levels {0, 1}.
    """
    _require_columns(t, ("YrSold", "YearBuilt", "YearRemodAdd", "Fireplaces",
                         "Fence", "WoodDeckSF") + _PORCH_COLUMNS)

    yr_sold = t.numeric["YrSold"]
    age = yr_sold - t.numeric["YearBuilt"]
    years_since_remodel = np.maximum(0.0, yr_sold - t.numeric["YearRemodAdd"])

    has_deck = t.numeric["WoodDeckSF"] > 0
    has_porch = np.zeros(t.n_rows, dtype=bool)
    for name in _PORCH_COLUMNS:
        has_porch |= t.numeric[name] > 0
    has_fireplace = t.numeric["Fireplaces"] > 0
    has_fence = t.categorical["Fence"] != 0

    out = t.with_numeric_column("AgeAtSale", age)
    out = out.with_numeric_column("YearsSinceRemodel", years_since_remodel)
    for name, flag in (("HasDeck", has_deck), ("HasPorch", has_porch),
                       ("HasFireplace", has_fireplace), ("HasFence", has_fence)):
        codes, lv = _flag_column(flag)
        out.schema = out.schema + [ColumnSchema(name, CATEGORICAL)]
        out.categorical[name] = codes
        out.levels[name] = lv
    return Table(out.schema, out.n_rows, out.numeric, out.numeric_missing,
                 out.categorical, out.levels)


# ---------------------------------------------------------------------------
# Cleaning
# ---------------------------------------------------------------------------

def clean_table(t: Table, drop_columns: tuple[str, ...] | list[str] = DEFAULT_DROP_COLUMNS) -> Table:
    """Apply the cleaning recipe: drop rows missing MasVnrType or Electrical,
    zero-fill missing numeric cells (LotFrontage in particular), and drop the
    configured redundant columns. Idempotent.
    """
    keep = np.ones(t.n_rows, dtype=bool)
    for name in ("MasVnrType", "Electrical"):
        if t.has_column(name) and t.column(name).kind == CATEGORICAL:
            keep &= t.categorical[name] != 0
    out = t.take(np.flatnonzero(keep)) if not keep.all() else t.take(np.arange(t.n_rows))

    for col in out.schema:
        if col.kind == NUMERIC and col.role == ROLE_FEATURE:
            mask = out.numeric_missing[col.name]
            if mask.any():
                out.numeric[col.name][mask] = 0.0
                out.numeric_missing[col.name][:] = False

    present = [c for c in drop_columns if out.has_column(c)]
    return out.drop_columns(present)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def split(t: Table, ratio: float, seed: int) -> SplitPair:
    """Seeded uniform row partition with floor(n * ratio) training rows."""
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must be in (0, 1), got {ratio}")
    if t.n_rows < 2:
        raise DataError("need at least 2 rows to split")
    n_train = int(np.floor(t.n_rows * ratio))
    if n_train == 0 or n_train == t.n_rows:
        raise DataError(f"ratio {ratio} leaves an empty partition for {t.n_rows} rows")
    order = np.random.default_rng(seed).permutation(t.n_rows)
    return SplitPair(
        train=t.take(np.sort(order[:n_train])),
        test=t.take(np.sort(order[n_train:])),
        seed=seed,
        ratio=ratio,
    )


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def _format_numeric(v: float, missing: bool) -> str:
    if missing or np.isnan(v):
        return NA_LEVEL
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_csv(t: Table, csv_path: str | Path) -> None:
    """Write a Table using the same conventions load_table reads."""
    names = [c.name for c in t.schema]
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        cols = []
        for c in t.schema:
            if c.kind == NUMERIC:
                vals = t.numeric[c.name]
                miss = t.numeric_missing[c.name]
                cols.append([_format_numeric(vals[i], miss[i]) for i in range(t.n_rows)])
            else:
                lv = t.levels[c.name]
                cols.append([lv[code] for code in t.categorical[c.name]])
        for i in range(t.n_rows):
            writer.writerow([col[i] for col in cols])
