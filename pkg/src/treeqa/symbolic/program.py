"""Tree-query programs: a single expression over a closed set of primitives.

    len(keys(get(["Budget", "Fixed Expenses", "Quarter 1"])))
    count_where(get(["Expenses"]), "Summary", is_empty)
    mean(filter_nonnull(values(get(["Std Error"]))))
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Union

from ..errors import ParseError

# primitive name -> allowed argument counts
PRIMITIVES: dict[str, tuple[int, ...]] = {
    "get": (1,),
    "keys": (1,),
    "values": (1,),
    "len": (1,),
    "sum": (1,),
    "mean": (1,),
    "min": (1,),
    "max": (1,),
    "count": (1,),
    "filter_nonnull": (1,),
    "count_where": (2, 3),
    "argmax": (1,),
    "argmin": (1,),
}
PREDICATES: dict[str, int] = {
    "is_empty": 0,
    "is_nonempty": 0,
    "equals": 1,
    "gt": 1,
    "lt": 1,
    "ge": 1,
    "le": 1,
}

Literal = Union[str, int, float, bool, None]


@dataclass(frozen=True)
class Lit:
    value: Literal


@dataclass(frozen=True)
class ListLit:
    items: tuple["Node", ...]


@dataclass(frozen=True)
class Get:
    path: tuple[str, ...]


@dataclass(frozen=True)
class Apply:
    fn: str
    args: tuple["Node", ...]


@dataclass(frozen=True)
class Pred:
    name: str
    arg: Literal = None


Node = Union[Lit, ListLit, Get, Apply, Pred]


@dataclass(frozen=True)
class TreeProgram:
    root: Node
    source: str = ""

    def __str__(self) -> str:
        return unparse(self.root)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
  | (?P<number>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()\[\],])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src: str) -> list[_Tok]:
    out, pos = [], 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", pos)
        if m.lastgroup != "ws":
            out.append(_Tok(m.lastgroup, m.group(0), pos))
        pos = m.end()
    return out


def _string_value(text: str, pos: int) -> str:
    if text.startswith("'"):
        text = '"' + text[1:-1].replace('\\"', '"').replace('"', '\\"').replace("\\'", "'") + '"'
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad string literal {text}", pos) from exc


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, text: str) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"expected {text!r} but the program ended", len(self.src))
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.pos)
        self.i += 1
        return tok

    def program(self) -> Node:
        if not self.toks:
            raise ParseError("empty program", 0)
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected {tok.text!r} after the expression", tok.pos)
        return node

    def expr(self) -> Node:
        tok = self.peek()
        if tok is None:
            raise ParseError("expected an expression but the program ended", len(self.src))
        if tok.kind == "string":
            self.i += 1
            return Lit(_string_value(tok.text, tok.pos))
        if tok.kind == "number":
            self.i += 1
            return Lit(float(tok.text) if re.search(r"[.eE]", tok.text) else int(tok.text))
        if tok.text == "[":
            return self.list_lit()
        if tok.kind == "ident":
            return self.call()
        raise ParseError(f"unexpected {tok.text!r}", tok.pos)

    def list_lit(self) -> ListLit:
        self.take("[")
        items = []
        if self.peek() is not None and self.peek().text != "]":
            items.append(self.expr())
            while self.peek() is not None and self.peek().text == ",":
                self.take(",")
                items.append(self.expr())
        self.take("]")
        return ListLit(tuple(items))

    def call(self) -> Node:
        tok = self.peek()
        self.i += 1
        name = tok.text
        if name in ("null", "None"):
            return Lit(None)
        if name in ("true", "false", "True", "False"):
            return Lit(name.lower() == "true")
        if name in PREDICATES:
            return self.predicate(tok)
        if name not in PRIMITIVES:
            raise ParseError(f"unknown primitive {name!r}", tok.pos)
        args = self.args(tok)
        if len(args) not in PRIMITIVES[name]:
            raise ParseError(f"{name}() takes {' or '.join(map(str, PRIMITIVES[name]))} arguments, got {len(args)}", tok.pos)
        if name == "get":
            return Get(self.path_literal(args[0], tok))
        if name == "count_where":
            pred = args[-1]
            if not isinstance(pred, Pred):
                raise ParseError("count_where() needs a predicate as its last argument", tok.pos)
            if len(args) == 3 and not (isinstance(args[1], Lit) and isinstance(args[1].value, str)):
                raise ParseError("count_where() field name must be a string", tok.pos)
        return Apply(name, tuple(args))

    def args(self, tok: _Tok) -> list[Node]:
        if self.peek() is None or self.peek().text != "(":
            raise ParseError(f"{tok.text} must be called with parentheses", tok.pos)
        self.take("(")
        args = []
        if self.peek() is not None and self.peek().text != ")":
            args.append(self.expr())
            while self.peek() is not None and self.peek().text == ",":
                self.take(",")
                args.append(self.expr())
        self.take(")")
        return args

    def predicate(self, tok: _Tok) -> Pred:
        arity = PREDICATES[tok.text]
        has_parens = self.peek() is not None and self.peek().text == "("
        if not has_parens:
            if arity:
                raise ParseError(f"predicate {tok.text} needs an argument", tok.pos)
            return Pred(tok.text)
        args = self.args(tok)
        if len(args) != arity or any(not isinstance(a, Lit) for a in args):
            raise ParseError(f"predicate {tok.text} takes {arity} literal argument(s)", tok.pos)
        arg = args[0].value if args else None
        if tok.text in ("gt", "lt", "ge", "le") and (not isinstance(arg, (int, float)) or isinstance(arg, bool)):
            raise ParseError(f"predicate {tok.text} needs a number", tok.pos)
        if tok.text == "equals" and arg is not None and not isinstance(arg, (str, int, float)):
            raise ParseError("equals needs a string or number", tok.pos)
        return Pred(tok.text, arg)

    @staticmethod
    def path_literal(node: Node, tok: _Tok) -> tuple[str, ...]:
        if isinstance(node, Lit) and isinstance(node.value, str):
            return (node.value,)
        if not isinstance(node, ListLit):
            raise ParseError("get() needs a list of labels", tok.pos)
        out = []
        for item in node.items:
            if not isinstance(item, Lit) or isinstance(item.value, bool) or item.value is None:
                raise ParseError("get() path entries must be label strings", tok.pos)
            out.append(item.value if isinstance(item.value, str) else str(item.value))
        return tuple(out)


def strip_code(text: str) -> str:
    """Remove code fences and a leading ``answer =`` from a model reply."""
    body = text.strip()
    if "```" in body:
        chunks = body.split("```")
        if len(chunks) >= 3:
            body = chunks[1]
            first, _, rest = body.partition("\n")
            if re.fullmatch(r"[A-Za-z0-9_+-]*", first.strip()) and rest.strip():
                body = rest
    body = body.strip()
    body = re.sub(r"^(?:answer|result|expr(?:ession)?)\s*[:=]\s*", "", body, flags=re.I)
    return body.strip()


def parse_program(text: str) -> TreeProgram:
    src = strip_code(text)
    return TreeProgram(_Parser(src).program(), src)


def unparse(node: Node) -> str:
    if isinstance(node, Lit):
        if node.value is None:
            return "null"
        if isinstance(node.value, bool):
            return "true" if node.value else "false"
        if isinstance(node.value, str):
            return json.dumps(node.value, ensure_ascii=False)
        return repr(node.value)
    if isinstance(node, ListLit):
        return "[" + ", ".join(unparse(x) for x in node.items) + "]"
    if isinstance(node, Get):
        return "get([" + ", ".join(json.dumps(p, ensure_ascii=False) for p in node.path) + "])"
    if isinstance(node, Pred):
        if PREDICATES[node.name] == 0:
            return node.name
        return f"{node.name}({unparse(Lit(node.arg))})"
    return f"{node.fn}(" + ", ".join(unparse(a) for a in node.args) + ")"
