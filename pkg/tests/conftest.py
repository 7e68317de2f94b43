import numpy as np
import pytest

from amescausal import dataset
from amescausal.gbdt import LeafWise, LevelWise, fit

from ames_synth import ames_csv_path


@pytest.fixture(scope="session")
def ames_csv(tmp_path_factory):
    return ames_csv_path(tmp_path_factory.mktemp("data"), n_rows=1460, seed=20240)


@pytest.fixture(scope="session")
def cleaned(ames_csv):
    t = dataset.load_table(ames_csv, dataset.ames_schema())
    return dataset.clean_table(dataset.derive_features(t))


@pytest.fixture(scope="session")
def split_pair(cleaned):
    return dataset.split(cleaned, 0.8, 42)


@pytest.fixture(scope="session")
def leafwise_model(split_pair):
    return fit(split_pair.train, LeafWise(num_leaves=32, min_child_samples=20, max_depth=5),
               learning_rate=0.1, n_trees=150, seed=0)


@pytest.fixture(scope="session")
def levelwise_model(split_pair):
    return fit(split_pair.train, LevelWise(depth=5, l2_leaf_reg=1.0, border_count=128),
               learning_rate=0.1, n_trees=150, seed=0)


def numeric_table(arrays: dict, target: str, id_name: str = "id") -> dataset.Table:
    """Small all-numeric Table helper for synthetic tests."""
    n = len(next(iter(arrays.values())))
    numeric = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}
    if id_name not in numeric:
        numeric[id_name] = np.arange(n, dtype=np.float64)
    schema = []
    for name in numeric:
        role = ("target" if name == target
                else "id" if name == id_name else "feature")
        schema.append(dataset.ColumnSchema(name, "numeric", role))
    missing = {k: np.isnan(v) for k, v in numeric.items()}
    return dataset.Table(schema, n, numeric, missing, {}, {})
