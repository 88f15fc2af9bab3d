"""Exception hierarchy shared across the toolkit.

Parser errors carry the SR kind they came from so callers (the CLI, the NLD
dispatcher) can report them without knowing which parser raised.
"""

from __future__ import annotations


class SrnldError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SrnldError, ValueError):
    """Malformed structured-representation text."""

    kind = "SR"

    def __init__(self, message: str, position: int | None = None):
        self.message = message
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{self.kind} parse error{where}: {message}")


# AMR / PENMAN


class AmrError(ParseError):
    kind = "AMR"


class EmptyInput(AmrError):
    pass


class UnbalancedParens(AmrError):
    pass


class DuplicateVariable(AmrError):
    pass


class DanglingReference(AmrError):
    pass


class InvalidGraph(AmrError):
    """A programmatically built graph violates an AmrGraph invariant."""


# PST


class PstError(ParseError):
    kind = "PST"


class PstUnbalancedParens(PstError):
    pass


class EmptyConstituent(PstError):
    pass


class LabelOnly(EmptyConstituent):
    """A constituent with a label but neither a token nor children, e.g. ``(NP)``."""


class MixedChildren(PstError):
    pass


# FOL


class FolError(ParseError):
    kind = "FOL"


class FolSyntaxError(FolError):
    pass


class UnknownToken(FolError):
    pass


# NLD / dictionaries


class DictionaryError(SrnldError, ValueError):
    pass


class MissingInstance(SrnldError, ValueError):
    pass


# refinement / endpoint


class EmptyDoc(SrnldError, ValueError):
    pass


class GeneratorFailure(SrnldError):
    pass


class AllCandidatesEmpty(SrnldError):
    pass


class EndpointError(SrnldError):
    """Any failure talking to a chat-completion endpoint."""


class Timeout(EndpointError):
    pass


class HttpStatus(EndpointError):
    def __init__(self, code: int, body: str = ""):
        self.code = code
        self.body = body
        super().__init__(f"endpoint returned HTTP {code}: {body[:200]}")


class MalformedResponse(EndpointError):
    pass


class TransportError(EndpointError):
    pass


# prompts / datasets / metrics / runs


class PromptError(SrnldError, ValueError):
    pass


class MissingField(PromptError):
    pass


class UnknownTask(PromptError):
    pass


class InsufficientRecords(SrnldError, ValueError):
    pass


class MissingSr(SrnldError, ValueError):
    pass


class DuplicateRecord(SrnldError, ValueError):
    pass


class MetricError(SrnldError, ValueError):
    pass


class LengthMismatch(MetricError):
    pass


class EmptyMetricInput(MetricError):
    pass


class ManifestInvalid(SrnldError, ValueError):
    pass
