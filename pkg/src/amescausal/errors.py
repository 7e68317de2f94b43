"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 2, DataError and
SchemaError -> 3, everything else raised by a stage -> 4.
"""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PipelineError):
    """Invalid or inconsistent run configuration."""


class SchemaError(PipelineError):
    """Input data does not match the declared column schema."""


class DataError(PipelineError):
    """Data is structurally valid but unusable for the requested operation."""


class ModelError(PipelineError):
    """A fitted model is missing, malformed, or incompatible with the data."""


class StageError(PipelineError):
    """A pipeline stage failed or its prerequisite artifacts are absent."""

    def __init__(self, message: str, required_command: str | None = None):
        super().__init__(message)
        self.required_command = required_command
