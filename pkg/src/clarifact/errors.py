"""Exception hierarchy for the whole toolkit.

Every error raised by clarifact code derives from ClarifactError, so callers
can catch one base class at process boundaries (CLI, HTTP handlers) and map
subfamilies to exit codes / status codes.
"""


class ClarifactError(Exception):
    """Base class for all toolkit errors."""


# ---------------------------------------------------------------------------
# Domain value errors
# ---------------------------------------------------------------------------

class UnmappedLabel(ClarifactError):
    """A source verdict label has no entry in the binarization map."""


class OutOfRange(ClarifactError):
    """A numeric veracity value falls outside [0, 1]."""


class InvalidCategoryLetter(ClarifactError):
    """A letter does not name one of the six missing-information categories."""


# ---------------------------------------------------------------------------
# Dataset errors
# ---------------------------------------------------------------------------

class DataError(ClarifactError):
    """Base class for corpus/annotation file problems."""


class FileUnreadable(DataError):
    pass


class MalformedRow(DataError):
    """A row failed validation. Carries the 1-based row number."""

    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class DuplicateId(DataError):
    def __init__(self, statement_id: str, row: int):
        super().__init__(f"duplicate statement id {statement_id!r} at row {row}")
        self.statement_id = statement_id
        self.row = row


class UnknownStatementId(DataError):
    pass


class DuplicateLabeler(DataError):
    pass


class EmptyCorpus(DataError):
    pass


# ---------------------------------------------------------------------------
# Gateway errors
# ---------------------------------------------------------------------------

class GatewayError(ClarifactError):
    """Base class for completion-backend failures."""


class BackendExhausted(GatewayError):
    """All retry attempts were spent on transient failures."""


class AuthFailure(GatewayError):
    pass


class RequestRejected(GatewayError):
    """The backend rejected the request with a non-retriable client error."""


class ScriptMiss(GatewayError):
    """A strict scripted backend had no entry matching the request."""


# ---------------------------------------------------------------------------
# Reply-parsing errors
# ---------------------------------------------------------------------------

class ParseError(ClarifactError):
    """Base class for failures extracting typed values from model replies."""


class MissingSlot(ParseError):
    """A template was rendered without one of its required slots."""

    def __init__(self, slot: str):
        super().__init__(f"unbound template slot: {slot}")
        self.slot = slot


class NoCategoryFound(ParseError):
    pass


class NoRouteFound(ParseError):
    pass


class NoScoreFound(ParseError):
    pass


# ---------------------------------------------------------------------------
# Pipeline / session errors
# ---------------------------------------------------------------------------

class MissingArticle(ClarifactError):
    """The step needs a fact-check article and the statement has none."""


class MissingCategory(ClarifactError):
    """The heuristic router was invoked without a parsed category."""


class WrongState(ClarifactError):
    """A session operation was applied in an illegal state."""


class UnknownSessionId(ClarifactError):
    pass


# ---------------------------------------------------------------------------
# Metrics errors
# ---------------------------------------------------------------------------

class MetricsError(ClarifactError):
    pass


class LengthMismatch(MetricsError):
    pass


class EmptyAfterFilter(MetricsError):
    """No pairs remain after applying the abstention policy."""


class EmptyInput(MetricsError):
    pass


class NoEligibleStatements(MetricsError):
    pass


class NoOverlap(MetricsError):
    pass


# ---------------------------------------------------------------------------
# Corpus-analysis errors
# ---------------------------------------------------------------------------

class InvalidN(ClarifactError):
    """n-gram order outside the supported {1, 2}."""


class EmptySeed(ClarifactError):
    pass


# ---------------------------------------------------------------------------
# Storage errors
# ---------------------------------------------------------------------------

class StorageFailure(ClarifactError):
    pass
