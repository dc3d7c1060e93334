"""Tree-query programs and the symbolic reasoning loop."""

from .interpreter import ExecutionResult, SandboxLimits, execute
from .program import TreeProgram, parse_program, unparse
from .reasoner import (
    DEFAULT_EXEMPLARS,
    Exemplar,
    SymbolicFailure,
    SymbolicOutcome,
    build_symbolic_prompt,
    format_answer,
    is_failure,
    symbolic_answer,
)

__all__ = [
    "DEFAULT_EXEMPLARS",
    "ExecutionResult",
    "Exemplar",
    "SandboxLimits",
    "SymbolicFailure",
    "SymbolicOutcome",
    "TreeProgram",
    "build_symbolic_prompt",
    "execute",
    "format_answer",
    "is_failure",
    "parse_program",
    "symbolic_answer",
    "unparse",
]
