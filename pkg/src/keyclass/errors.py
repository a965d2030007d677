"""Exception hierarchy shared across the package."""


class KeyclassError(Exception):
    """Base class for all package errors."""


class LoadError(KeyclassError):
    """A corpus, label, description, or artifact file failed to parse."""


class FormatError(KeyclassError):
    """A binary artifact has a bad magic, version, dtype, or length."""


class ConfigError(KeyclassError):
    """A configuration value violates an operation's precondition."""


class TrainingError(KeyclassError):
    """Optimization produced a non-finite objective."""


class ZeroVectorError(KeyclassError):
    """Cosine similarity was requested for a zero-norm vector."""


class PipelineStageError(KeyclassError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
