"""Exception hierarchy shared by all elinda modules."""


class ElindaError(Exception):
    """Base class for all errors raised by elinda."""


class NTriplesSyntaxError(ElindaError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnsupportedFeature(ElindaError):
    """Input uses a feature deliberately outside the supported model (e.g. blank nodes)."""


class TypeMismatch(ElindaError):
    """An expansion was applied to a bar of the wrong type."""


class UnknownLabel(ElindaError):
    """Selected label is not present in the parent chart."""


class UnknownPane(ElindaError):
    pass


class UnknownClass(ElindaError):
    pass


class InvalidComparator(ElindaError):
    """lt/gt filter against a non-numeric value."""


class UnsupportedPath(ElindaError):
    """Bar ancestry cannot be turned into a query (pseudo-bar or too deep)."""


class UnsupportedQuery(ElindaError):
    """Query text falls outside the embedded evaluator's fragment."""


class NotDistributive(ElindaError):
    """Incremental evaluation requested for a non-distributive plan."""


class EndpointError(ElindaError):
    """Base class for remote endpoint failures."""


class EndpointTimeout(EndpointError):
    pass


class HttpError(EndpointError):
    def __init__(self, status: int, message: str = ""):
        super().__init__(message or f"HTTP {status}")
        self.status = status


class MalformedResponse(EndpointError):
    pass


class TooManyRetries(EndpointError):
    pass


class CancelledByShutdown(ElindaError):
    pass
