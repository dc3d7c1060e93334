"""Answer agreement, adaptive selection between the two reasoning modes, and judging."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, Protocol

from . import prompts
from .gateway import Gateway, Phase
from .numeric import normalize_number
from .symbolic.reasoner import SymbolicFailure, is_failure

log = logging.getLogger(__name__)


def _fold(text: str) -> str:
    text = " ".join(str(text).split()).casefold()
    if len(text) >= 2 and text[0] == "[" and text[-1] == "]":
        text = text[1:-1].strip()
    return text.rstrip(".").strip()


def answers_agree(a: object, b: object) -> bool:
    """Equal after case/whitespace folding, or numerically within tolerance."""
    if is_failure(a) or is_failure(b):
        return False
    fa, fb = _fold(a), _fold(b)
    if fa == fb:
        return True
    na, nb = normalize_number(fa), normalize_number(fb)
    if na is None or nb is None:
        return False
    return abs(na - nb) <= max(1e-6, 1e-4 * abs(nb))


@dataclass(frozen=True)
class CandidatePair:
    textual: str | SymbolicFailure
    symbolic: str | SymbolicFailure

    def __post_init__(self) -> None:
        if is_failure(self.textual) and is_failure(self.symbolic):
            raise ValueError("at least one candidate must be an answer")


@dataclass(frozen=True)
class Selection:
    answer: str
    source: str  # "agree", "textual" or "symbolic"
    selector_called: bool
    reason: str = ""


_CHOICE_RE = re.compile(r"^\W*(?:answer\s*)?([AB])\W*$", re.I)


def parse_choice(reply: str) -> str | None:
    m = _CHOICE_RE.match(reply.strip())
    return m.group(1).upper() if m else None


def select_answer(table_text: str, question: str, pair: CandidatePair, gateway: Gateway) -> Selection:
    """Agreement or a single failure needs no model call; otherwise ask the selector."""
    if is_failure(pair.symbolic):
        return Selection(str(pair.textual), "textual", False, "symbolic failed")
    if is_failure(pair.textual):
        return Selection(str(pair.symbolic), "symbolic", False, "textual failed")
    if answers_agree(pair.textual, pair.symbolic):
        return Selection(str(pair.textual), "agree", False, "answers agree")
    user = prompts.render("selector", table=table_text, question=question, answerA=pair.textual, answerB=pair.symbolic)
    reply = gateway.ask(Phase.SELECTION, user, purpose="selector")
    choice = parse_choice(reply)
    if choice is None:
        log.warning("unparseable selector output %r; keeping the textual answer", reply[:40])
        return Selection(str(pair.textual), "textual", True, "unparseable selector output")
    if choice == "B":
        return Selection(str(pair.symbolic), "symbolic", True, "selector chose B")
    return Selection(str(pair.textual), "textual", True, "selector chose A")


# -- judging ------------------------------------------------------------------


class Judge(Protocol):
    def __call__(self, question: str, gold: str, prediction: str) -> bool: ...


def parse_verdict(reply: str) -> bool | None:
    text = reply.strip().lower()
    if "incorrect" in text or "not correct" in text:
        return False
    if "correct" in text:
        return True
    return None


def judge(question: str, gold: str, prediction: str, gateway: Gateway) -> bool:
    user = prompts.render("judge", **{"$question": question, "$ground_truth": gold, "$prediction": prediction})
    reply = gateway.ask(Phase.JUDGE, user, purpose="judge")
    verdict = parse_verdict(reply)
    if verdict is None:
        log.warning("unparseable judge verdict %r; counting as incorrect", reply[:40])
        return False
    return verdict


class LLMJudge:
    def __init__(self, gateway: Gateway):
        self.gateway = gateway

    def __call__(self, question: str, gold: str, prediction: str) -> bool:
        return judge(question, gold, prediction, self.gateway)


def offline_judge(question: str, gold: str, prediction: str) -> bool:
    """Deterministic stand-in for the model judge, using the agreement tolerance."""
    if is_failure(prediction):
        return False
    return answers_agree(prediction, gold)


def oracle_select(pair: CandidatePair, gold: str, judge_fn: Judge | Callable[[str, str, str], bool], question: str = "") -> tuple[str, bool]:
    """The candidate the judge accepts, textual first; textual when neither passes."""
    if not is_failure(pair.textual) and judge_fn(question, gold, str(pair.textual)):
        return str(pair.textual), True
    if not is_failure(pair.symbolic) and judge_fn(question, gold, str(pair.symbolic)):
        return str(pair.symbolic), True
    fallback = pair.textual if not is_failure(pair.textual) else pair.symbolic
    return str(fallback), False


def amortized_time(t_tree: float, t_qa: float, n: int) -> float:
    """Per-query latency once tree construction is spread over ``n`` queries."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return t_tree / n + t_qa
