"""Exception hierarchy; the CLI maps these to exit codes."""


class TabriskError(Exception):
    """Base class for all package errors."""


class SchemaError(TabriskError):
    """Schema document or schema/data mismatch (validation, exit code 2)."""


class ConfigError(TabriskError):
    """Experiment configuration problem (validation, exit code 2)."""


class DataError(TabriskError):
    """Bad data content at runtime (exit code 1)."""


class FitError(TabriskError):
    """Model or generator training failure (exit code 1)."""
