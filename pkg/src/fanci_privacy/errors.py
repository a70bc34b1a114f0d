"""Exception hierarchy shared by all modules."""


class FanciError(Exception):
    """Base class; ``kind`` is the machine-readable error tag used by the CLI."""

    kind = "error"


class InvalidDomainError(FanciError, ValueError):
    kind = "invalid-domain"


class EncodingOverflowError(FanciError, ValueError):
    kind = "encoding-overflow"


class InconsistentFeaturesError(FanciError, ValueError):
    kind = "inconsistent-features"


class DatasetError(FanciError, ValueError):
    kind = "dataset-error"


class AllLinesInvalidError(DatasetError):
    kind = "all-lines-invalid"


class KTooLargeError(DatasetError):
    kind = "k-too-large"


class TooFewSamplesError(DatasetError):
    kind = "too-few-samples"


class EmptyWordlistError(DatasetError):
    kind = "empty-wordlist"


class DimensionMismatchError(FanciError, ValueError):
    kind = "dimension-mismatch"


class DivergenceError(FanciError, RuntimeError):
    kind = "divergence"


class EmptyRecordsError(FanciError, ValueError):
    kind = "empty-records"
