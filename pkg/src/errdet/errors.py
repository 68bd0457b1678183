"""Exception hierarchy shared across the package.

``DataError`` subclasses describe problems with user-supplied inputs
(files, annotations, configuration); everything else is a runtime
failure. The CLI maps the former to exit code 2 and the latter to 3.
"""


class ErrdetError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ErrdetError):
    """Invalid or inconsistent input data."""


class ParseError(DataError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class AnnotationError(DataError):
    """Error span incompatible with its token sequence."""


class VocabularyError(DataError):
    """Token id outside the vocabulary, or an unusable vocabulary."""


class ConfigError(DataError):
    """Configuration value inconsistent with the data it is applied to."""


class AlignmentError(DataError):
    """System and reference corpora do not line up."""


class ShapeError(ErrdetError):
    """Tensor operands with incompatible shapes."""


class ContractError(ErrdetError):
    """An operation was called outside its documented contract."""


class LabelError(ErrdetError):
    """Gold label index outside the output distribution."""


class TrainingError(ErrdetError):
    """Optimization failure (non-finite gradients or loss)."""


class UndefinedCorrelationError(ErrdetError):
    """Correlation requested on a constant input."""
