"""Exception hierarchy shared across the package."""

from __future__ import annotations


class TreeQAError(Exception):
    """Base class for all package errors."""


# -- table core ---------------------------------------------------------------


class EmptyInput(TreeQAError):
    """Raised when a raw table has no rows."""


class InvalidAddress(TreeQAError, ValueError):
    """Raised when text is not a well-formed A1 cell reference."""


class BudgetExhausted(TreeQAError):
    """Raised when the fixed prompt costs leave no room for the table."""


# -- semantic tree ------------------------------------------------------------


class PathNotFound(TreeQAError, KeyError):
    """Raised when a tree path does not resolve.

    ``prefix`` holds the deepest resolvable prefix of the requested path.
    """

    def __init__(self, path: tuple[str, ...], prefix: tuple[str, ...]):
        self.path = tuple(path)
        self.prefix = tuple(prefix)
        missing = self.path[len(self.prefix)] if len(self.path) > len(self.prefix) else None
        super().__init__(f"path {list(self.path)!r} not found; deepest prefix {list(self.prefix)!r}, missing {missing!r}")

    def __str__(self) -> str:  # KeyError would otherwise repr() the message
        return self.args[0]


class MalformedCache(TreeQAError):
    """Raised when a cache document cannot be decoded."""


# -- gateway ------------------------------------------------------------------


class ProviderError(TreeQAError):
    """A model provider failed. ``transient`` errors are retried."""

    def __init__(self, message: str, *, transient: bool = False):
        super().__init__(message)
        self.transient = transient


class TranscriptMiss(ProviderError):
    """A strict scripted provider received a request it has no entry for."""


class ZeroVector(TreeQAError, ValueError):
    """Cosine similarity is undefined for a zero-norm vector."""


# -- reconstruction -----------------------------------------------------------


class MalformedResponse(TreeQAError):
    """A model response could not be parsed into the expected shape."""


class SchemaInvalid(TreeQAError):
    """A hierarchy schema violates the header partition invariant."""


class SynthesisError(TreeQAError):
    """Base class for failures of a single tree-synthesis attempt."""


class MalformedTree(SynthesisError):
    """The model did not return a well-formed JSON tree."""


class UnresolvedPlaceholder(SynthesisError):
    """An A1 placeholder points outside the grid."""

    def __init__(self, address: str, rows: int, cols: int):
        self.address = address
        super().__init__(f"placeholder {address!r} is outside the {rows}x{cols} grid")


class ProgramParseError(SynthesisError):
    """A construction script could not be parsed."""


class ProgramRuntimeError(SynthesisError):
    """A construction script failed while executing."""


class ReconstructionFailed(TreeQAError):
    """Every reconstruction attempt failed to produce a tree."""


# -- symbolic interpreter -----------------------------------------------------


class QueryError(TreeQAError):
    """Base class for tree-query program failures."""


class ParseError(QueryError):
    """A tree-query program is syntactically invalid."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} at position {position}")


class PathError(QueryError):
    """A ``get`` path does not exist in the tree."""

    def __init__(self, path: tuple[str, ...], prefix: tuple[str, ...]):
        self.path = tuple(path)
        self.prefix = tuple(prefix)
        super().__init__(f"path {list(self.path)!r} not found; deepest existing prefix is {list(self.prefix)!r}")


class ProgramTypeError(QueryError):
    """A primitive received an operand of the wrong kind."""

    def __init__(self, primitive: str, kind: str):
        self.primitive = primitive
        self.kind = kind
        super().__init__(f"{primitive}() cannot be applied to a {kind}")


class LimitExceeded(QueryError):
    """Execution exceeded a sandbox limit."""
