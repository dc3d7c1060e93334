"""Choose a tree-synthesis strategy from the context budget and table statistics."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .errors import BudgetExhausted
from .table import TableStats


class SynthesisMode(str, Enum):
    DSP = "DSP"  # direct generation of the whole tree
    SRE = "SRE"  # A1 placeholders resolved against the grid
    PSS = "PSS"  # loop-based construction script


@dataclass(frozen=True)
class BudgetConfig:
    l_max: int = 128_000
    alpha: float = 0.6
    l_sys: int = 1_000
    e_reserve: int = 0
    mu: float = 80.0
    eta: float = 0.3
    n_high: int = 1_000
    gamma: float = 80.0

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if min(self.mu, self.eta, self.n_high, self.gamma, self.l_max) <= 0:
            raise ValueError("thresholds must be positive")
        if self.l_sys < 0 or self.e_reserve < 0:
            raise ValueError("prompt and reserve costs cannot be negative")

    @property
    def l_safe(self) -> float:
        return self.alpha * self.l_max


def effective_budget(cfg: BudgetConfig) -> float:
    budget = cfg.l_safe - cfg.l_sys - cfg.e_reserve
    if budget <= 0:
        raise BudgetExhausted(f"safe context {cfg.l_safe:g} leaves no room after L_sys={cfg.l_sys} and E={cfg.e_reserve}")
    return budget


def estimate_reserve(stats: TableStats, cfg: BudgetConfig) -> int:
    """Heuristic output reserve: each non-empty cell plus a few structural tokens.

    Capped at a quarter of the safe context.
    """
    raw = stats.nonempty_count * (stats.avg_cell_tokens + 4)
    return int(min(raw, 0.25 * cfg.l_safe))


def with_reserve(stats: TableStats, cfg: BudgetConfig) -> BudgetConfig:
    return replace(cfg, e_reserve=estimate_reserve(stats, cfg))


def select_mode(stats: TableStats, budget: float, cfg: BudgetConfig) -> SynthesisMode:
    if stats.total_tokens <= budget:
        return SynthesisMode.DSP
    dense = stats.avg_cell_tokens > cfg.mu or stats.long_cell_ratio > cfg.eta
    if stats.cell_count <= cfg.n_high and dense:
        return SynthesisMode.SRE
    if stats.cell_count > cfg.n_high:
        return SynthesisMode.PSS
    # over budget, small and not dense: placeholders still shrink the output
    return SynthesisMode.SRE
