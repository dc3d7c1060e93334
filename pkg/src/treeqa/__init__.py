"""Question answering over complex tables through semantic trees."""

from .construction import reconstruct
from .evaluator import CorrectionAction, QualityReport, RefinementConfig, evaluate
from .gateway import Gateway, Phase, ScriptedChat
from .modes import BudgetConfig, SynthesisMode, select_mode
from .navigation import NavigationDirection, TraversalConfig, answer_textual
from .selection import answers_agree, select_answer
from .symbolic import SandboxLimits, execute, parse_program, symbolic_answer
from .table import Grid, load_grid, parse_grid
from .tree import get_data, leaves, skeleton

__version__ = "0.1.0"

__all__ = [
    "BudgetConfig",
    "CorrectionAction",
    "Gateway",
    "Grid",
    "NavigationDirection",
    "Phase",
    "QualityReport",
    "RefinementConfig",
    "SandboxLimits",
    "ScriptedChat",
    "SynthesisMode",
    "TraversalConfig",
    "answer_textual",
    "answers_agree",
    "evaluate",
    "execute",
    "get_data",
    "leaves",
    "load_grid",
    "parse_grid",
    "parse_program",
    "reconstruct",
    "select_answer",
    "select_mode",
    "skeleton",
    "symbolic_answer",
]
