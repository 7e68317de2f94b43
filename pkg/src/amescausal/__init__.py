"""Housing-price pipeline: boosted trees, Tree SHAP, causal effects, rank alignment."""

from . import alignment, causal, config, dataset, gbdt, pipeline, shap
from .errors import (ConfigError, DataError, ModelError, PipelineError,
                     SchemaError, StageError)

__version__ = "0.1.0"

__all__ = [
    "alignment", "causal", "config", "dataset", "gbdt", "pipeline", "shap",
    "ConfigError", "DataError", "ModelError", "PipelineError", "SchemaError",
    "StageError", "__version__",
]
