"""A small loop/insert language for building trees over large grids.

Example::

    # one entry per data row
    for r in 3..48 {
      for c in B..E {
        insert([qkey(header(A), cell(A, r)), header(c)], cell(c, r))
      }
    }

Row numbers are 1-based as in A1 notation and ranges are inclusive.
``for v in X..Y: stmt`` is accepted as a one-statement loop body.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Sequence, Union

from ..errors import ProgramParseError, ProgramRuntimeError
from ..table import Grid, column_index, column_letters, is_blank
from ..tree import TreeBuilder, qualified_key

MAX_INSERTS = 2_000_000
_COL_RE = re.compile(r"^[A-Z]{1,3}$")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<range>\.\.)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}\[\](),:+\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(src: str) -> list[Token]:
    out, pos = [], 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ProgramParseError(f"unexpected character {src[pos]!r} at position {pos}")
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(0), pos))
        pos = m.end()
    return out


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Name:
    name: str
    pos: int


@dataclass(frozen=True)
class Offset:
    base: "Expr"
    delta: int


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expr", ...]
    pos: int


Expr = Union[Str, Num, Name, Offset, Call]


@dataclass(frozen=True)
class Insert:
    labels: tuple[Expr, ...]
    value: Expr
    pos: int


@dataclass(frozen=True)
class For:
    var: str
    start: Expr
    end: Expr
    body: tuple["Stmt", ...]
    pos: int


Stmt = Union[Insert, For]

FUNCTIONS = {"cell": 2, "col": 2, "fill": 2, "header": 1, "qkey": 2}


@dataclass(frozen=True)
class Script:
    body: tuple[Stmt, ...]


class _Parser:
    def __init__(self, tokens: list[Token], src: str):
        self.toks = tokens
        self.i = 0
        self.end = len(src)

    def peek(self) -> Token | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, text: str | None = None, kind: str | None = None) -> Token:
        tok = self.peek()
        if tok is None:
            raise ProgramParseError(f"unexpected end of script, expected {text or kind}")
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            raise ProgramParseError(f"expected {text or kind} at position {tok.pos}, found {tok.text!r}")
        self.i += 1
        return tok

    def script(self) -> Script:
        body = []
        while self.peek() is not None:
            body.append(self.stmt())
        if not body:
            raise ProgramParseError("script contains no statements")
        return Script(tuple(body))

    def stmt(self) -> Stmt:
        tok = self.peek()
        if tok is not None and tok.text == "for":
            return self.for_stmt()
        if tok is not None and tok.text == "insert":
            return self.insert_stmt()
        where = f"position {tok.pos}, found {tok.text!r}" if tok else "end of script"
        raise ProgramParseError(f"expected 'for' or 'insert' at {where}")

    def for_stmt(self) -> For:
        start_tok = self.take("for")
        var = self.take(kind="ident").text
        self.take("in")
        lo = self.expr()
        self.take(kind="range")
        hi = self.expr()
        tok = self.peek()
        if tok is not None and tok.text == ":":
            self.take(":")
            body: tuple[Stmt, ...] = (self.stmt(),)
        else:
            self.take("{")
            items = []
            while self.peek() is not None and self.peek().text != "}":
                items.append(self.stmt())
            self.take("}")
            body = tuple(items)
        return For(var, lo, hi, body, start_tok.pos)

    def insert_stmt(self) -> Insert:
        tok = self.take("insert")
        self.take("(")
        self.take("[")
        labels = [self.expr()]
        while self.peek() is not None and self.peek().text == ",":
            self.take(",")
            labels.append(self.expr())
        self.take("]")
        self.take(",")
        value = self.expr()
        self.take(")")
        return Insert(tuple(labels), value, tok.pos)

    def expr(self) -> Expr:
        node = self.atom()
        while self.peek() is not None and self.peek().text in "+-" and self.peek().kind == "punct":
            sign = 1 if self.take().text == "+" else -1
            node = Offset(node, sign * int(self.take(kind="number").text))
        return node

    def atom(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise ProgramParseError("unexpected end of script, expected an expression")
        if tok.kind == "string":
            self.i += 1
            return Str(json.loads(tok.text))
        if tok.kind == "number":
            self.i += 1
            return Num(int(tok.text))
        if tok.kind == "ident":
            self.i += 1
            nxt = self.peek()
            if nxt is not None and nxt.text == "(":
                if tok.text not in FUNCTIONS:
                    raise ProgramParseError(f"unknown function {tok.text!r} at position {tok.pos}")
                self.take("(")
                args = []
                if self.peek() is not None and self.peek().text != ")":
                    args.append(self.expr())
                    while self.peek() is not None and self.peek().text == ",":
                        self.take(",")
                        args.append(self.expr())
                self.take(")")
                if len(args) != FUNCTIONS[tok.text]:
                    raise ProgramParseError(f"{tok.text}() takes {FUNCTIONS[tok.text]} arguments at position {tok.pos}")
                return Call(tok.text, tuple(args), tok.pos)
            return Name(tok.text, tok.pos)
        raise ProgramParseError(f"unexpected {tok.text!r} at position {tok.pos}")


def strip_fences(text: str) -> str:
    body = text.strip()
    if "```" in body:
        chunks = body.split("```")
        if len(chunks) >= 3:
            body = chunks[1]
            first, _, rest = body.partition("\n")
            if first.strip() and not re.search(r"[\[\](){}]", first) and " " not in first.strip():
                body = rest
    return body.strip()


def parse_script(text: str) -> Script:
    src = strip_fences(text)
    return _Parser(tokenize(src), src).script()


# -- execution ----------------------------------------------------------------


@dataclass(frozen=True)
class _Row:
    index: int  # 1-based


@dataclass(frozen=True)
class _Col:
    index: int  # 0-based


Value = Union[str, _Row, _Col]


class _Runner:
    def __init__(self, g: Grid, headers: Sequence[str], max_inserts: int):
        self.g = g
        self.headers = list(headers)
        self.builder = TreeBuilder()
        self.inserts = 0
        self.max_inserts = max_inserts
        self.skipped = 0

    def run(self, body: Sequence[Stmt], env: dict[str, Value]) -> None:
        for stmt in body:
            if isinstance(stmt, For):
                self.loop(stmt, env)
            else:
                self.insert(stmt, env)

    def loop(self, stmt: For, env: dict[str, Value]) -> None:
        lo, hi = self.bound(stmt.start, env), self.bound(stmt.end, env)
        text = f"{_show(lo)}..{_show(hi)}"
        if type(lo) is not type(hi):
            raise ProgramRuntimeError(f"loop range {text} mixes rows and columns")
        limit = self.g.rows if isinstance(lo, _Row) else self.g.cols - 1
        first = 1 if isinstance(lo, _Row) else 0
        if not (first <= lo.index <= limit and first <= hi.index <= limit):
            raise ProgramRuntimeError(f"loop range {text} exceeds the grid ({self.g.rows} rows, columns A..{column_letters(self.g.cols - 1)})")
        if lo.index > hi.index:
            raise ProgramRuntimeError(f"loop range {text} is empty")
        kind = type(lo)
        for i in range(lo.index, hi.index + 1):
            self.run(stmt.body, {**env, stmt.var: kind(i)})

    def bound(self, e: Expr, env: dict[str, Value]) -> Value:
        v = self.value(e, env)
        if isinstance(v, str):
            raise ProgramRuntimeError(f"loop bound {v!r} is not a row number or column letter")
        return v

    def insert(self, stmt: Insert, env: dict[str, Value]) -> None:
        labels = [self.text(e, env) for e in stmt.labels]
        if any(not label.strip() for label in labels):
            self.skipped += 1
            self.builder.warnings.append(f"insert at position {stmt.pos} skipped: empty label in {labels!r}")
            return
        self.inserts += 1
        if self.inserts > self.max_inserts:
            raise ProgramRuntimeError(f"script exceeded {self.max_inserts} inserts")
        self.builder.insert(labels, self.text(stmt.value, env))

    def text(self, e: Expr, env: dict[str, Value]) -> str:
        v = self.value(e, env)
        if isinstance(v, _Row):
            return str(v.index)
        if isinstance(v, _Col):
            return column_letters(v.index)
        return v

    def value(self, e: Expr, env: dict[str, Value]) -> Value:
        if isinstance(e, Str):
            return e.value
        if isinstance(e, Num):
            return _Row(e.value)
        if isinstance(e, Name):
            if e.name in env:
                return env[e.name]
            if _COL_RE.match(e.name):
                return _Col(column_index(e.name))
            raise ProgramRuntimeError(f"unknown name {e.name!r} at position {e.pos}")
        if isinstance(e, Offset):
            base = self.value(e.base, env)
            if isinstance(base, _Row):
                return _Row(base.index + e.delta)
            if isinstance(base, _Col):
                return _Col(base.index + e.delta)
            raise ProgramRuntimeError("arithmetic on text")
        return self.call(e, env)

    def call(self, e: Call, env: dict[str, Value]) -> str:
        if e.fn == "qkey":
            return qualified_key(self.text(e.args[0], env) or "(blank)", self.text(e.args[1], env))
        if e.fn == "header":
            col = self.col(e.args[0], env, e)
            return self.headers[col] if col < len(self.headers) else ""
        col = self.col(e.args[0], env, e)
        row = self.value(e.args[1], env)
        if not isinstance(row, _Row):
            raise ProgramRuntimeError(f"{e.fn}() at position {e.pos} needs a row number")
        if not 1 <= row.index <= self.g.rows:
            raise ProgramRuntimeError(f"{e.fn}({column_letters(col)}, {row.index}) is outside the grid ({self.g.rows} rows)")
        r = row.index - 1
        if e.fn == "fill":
            while r > 0 and is_blank(self.g[r, col]):
                r -= 1
        return self.g[r, col]

    def col(self, arg: Expr, env: dict[str, Value], e: Call) -> int:
        v = self.value(arg, env)
        if not isinstance(v, _Col):
            raise ProgramRuntimeError(f"{e.fn}() at position {e.pos} needs a column")
        if not 0 <= v.index < self.g.cols:
            raise ProgramRuntimeError(f"column {column_letters(v.index) if v.index >= 0 else v.index} is outside the grid")
        return v.index


def _show(v: Value) -> str:
    if isinstance(v, _Row):
        return str(v.index)
    if isinstance(v, _Col):
        return column_letters(v.index) if v.index >= 0 else str(v.index)
    return repr(v)


@dataclass
class ScriptResult:
    tree: dict
    inserts: int
    skipped: int
    warnings: list[str]


def run_script(script: Script, g: Grid, headers: Sequence[str], *, max_inserts: int = MAX_INSERTS) -> ScriptResult:
    runner = _Runner(g, headers, max_inserts)
    runner.run(script.body, {})
    return ScriptResult(runner.builder.root, runner.inserts, runner.skipped, runner.builder.warnings)
