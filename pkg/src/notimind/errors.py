"""Exception hierarchy shared across the pipeline."""


class NotimindError(Exception):
    """Base class for every domain error raised by this package."""


# -- ingest -----------------------------------------------------------------


class ParseError(NotimindError, ValueError):
    """A single log line could not be turned into a record.

    ``line_no`` is 1-based and ``None`` when the parser was called on a bare
    line outside of a stream.
    """

    kind = "ParseError"

    def __init__(self, message, field=None, line_no=None, value=None):
        super().__init__(message)
        self.field = field
        self.line_no = line_no
        self.value = value

    def __str__(self):
        prefix = f"line {self.line_no}: " if self.line_no is not None else ""
        return f"{prefix}{self.kind}: {self.args[0]}"


class MalformedRecord(ParseError):
    kind = "MalformedRecord"


class MissingField(ParseError):
    kind = "MissingField"


class BadTimestamp(ParseError):
    kind = "BadTimestamp"


class BadState(ParseError):
    kind = "BadState"


class BadItemRange(ParseError):
    kind = "BadItemRange"


class DuplicateEntry(ParseError):
    kind = "DuplicateEntry"


# -- numerics / stats -------------------------------------------------------


class EmptyDistribution(NotimindError, ValueError):
    pass


class EmptyInput(NotimindError, ValueError):
    pass


class TooFewDistinctValues(NotimindError, ValueError):
    pass


class LengthMismatch(NotimindError, ValueError):
    pass


class ConstantInput(NotimindError, ValueError):
    pass


class InsufficientData(NotimindError, ValueError):
    pass


class UnknownFeatureName(NotimindError, KeyError):
    pass


# -- learning ---------------------------------------------------------------


class ConstantColumn(NotimindError, ValueError):
    def __init__(self, name):
        super().__init__(f"column {name!r} is constant on the training rows")
        self.name = name


class NonFiniteLoss(NotimindError, ArithmeticError):
    def __init__(self, epoch):
        super().__init__(f"loss became non-finite at epoch {epoch}")
        self.epoch = epoch


class NoConvergence(NotimindError, RuntimeError):
    def __init__(self, pair, iterations):
        super().__init__(
            f"SMO did not reach tolerance for class pair {pair} "
            f"after {iterations} iterations"
        )
        self.pair = pair
        self.iterations = iterations


class ArityMismatch(NotimindError, ValueError):
    pass


class TooFewRows(NotimindError, ValueError):
    pass


class SingleUser(NotimindError, ValueError):
    pass


class EmptyConfusion(NotimindError, ValueError):
    pass


class FoldError(NotimindError, RuntimeError):
    """Wraps a training failure with the fold it happened in."""

    def __init__(self, fold, classifier, cause):
        super().__init__(f"fold {fold}, classifier {classifier}: {cause}")
        self.fold = fold
        self.classifier = classifier
        self.cause = cause


# -- synthetic cohorts ------------------------------------------------------


class InfeasibleCoupling(NotimindError, ValueError):
    pass
