"""Exception types raised across the package."""


class MalformedTreeError(ValueError):
    """A tree violates RST tree invariants (arity, spans, labels)."""


class MalformedOrderError(ValueError):
    """A canonical segmentation order has duplicate or missing ranks."""


class CorpusFormatError(ValueError):
    """A corpus, embedding or feature file could not be parsed."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class ShapeError(ValueError):
    """Operand shapes do not agree."""


class ConfigError(ValueError):
    """Model or training configuration is inconsistent with the data."""


class DataError(ValueError):
    """Training data lacks what an operation requires (gold tree, known label)."""


class DivergenceError(FloatingPointError):
    """A loss or gradient became non-finite."""
