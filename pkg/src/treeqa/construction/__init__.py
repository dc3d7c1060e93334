"""Table-to-tree reconstruction: headers, hierarchy, synthesis and refinement."""

from .headers import NormalizedHeaders, normalize_headers, stacked_headers
from .hierarchy import HierarchySchema, default_schema, identify_hierarchy
from .refine import ReconstructionAttempt, ReconstructionResult, choose_mode, pick_best, reconstruct
from .script import parse_script, run_script
from .synthesis import resolve_placeholders, supplement, synthesize, synthesize_dsp, synthesize_pss, synthesize_sre

__all__ = [
    "HierarchySchema",
    "NormalizedHeaders",
    "ReconstructionAttempt",
    "ReconstructionResult",
    "choose_mode",
    "default_schema",
    "identify_hierarchy",
    "normalize_headers",
    "parse_script",
    "pick_best",
    "reconstruct",
    "resolve_placeholders",
    "run_script",
    "stacked_headers",
    "supplement",
    "synthesize",
    "synthesize_dsp",
    "synthesize_pss",
    "synthesize_sre",
]
