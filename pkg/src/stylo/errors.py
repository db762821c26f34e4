"""Exception types shared across the toolkit."""


class StyloError(Exception):
    """Base class for all toolkit errors."""


class ConlluParseError(StyloError):
    """Malformed CoNLL-U input; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class TooShortError(StyloError):
    """Document has too few words to chunk; carries the actual count."""

    def __init__(self, doc_id: str, word_count: int, required: int):
        super().__init__(
            f"document {doc_id!r} has {word_count} words, needs at least {required}"
        )
        self.doc_id = doc_id
        self.word_count = word_count
        self.required = required


class EmptyDocumentError(StyloError):
    """Feature rates are undefined on a document with no words."""


class CatalogError(StyloError):
    """Feature catalog file is malformed or violates its invariants."""


class ZeroVarianceError(StyloError):
    """Paired differences have zero variance; effect size undefined."""


class AlignmentError(StyloError):
    """Two matrices could not be aligned by parent document id."""

    def __init__(self, message: str, mismatches: list[str]):
        super().__init__(message)
        self.mismatches = mismatches


class ModelError(StyloError):
    """Invalid classifier configuration, input, or serialized model."""


class ConvergenceError(ModelError):
    """Optimizer failed to converge; carries the last objective delta."""

    def __init__(self, message: str, last_delta: float):
        super().__init__(message)
        self.last_delta = last_delta


class ApiError(StyloError):
    """Chat-completion request failed after exhausting retries."""

    def __init__(self, message: str, status: int | None = None, attempts: int = 0):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class ConfigError(StyloError):
    """Invalid run, provider, or template configuration."""
