"""First-order logic formulas: ASCII grammar, AST, printer.

Grammar (loosest binding first)::

    formula  := implies
    implies  := or ( '->' implies )?          right-associative
    or       := and ( '|' and )*
    and      := unary ( '&' unary )*
    unary    := '~' unary
              | ('forall' | 'exists') IDENT '.'? formula    scope runs maximally right
              | '(' formula ')'
              | IDENT '(' IDENT (',' IDENT)* ')'

Unicode ``∀ ∃ ∧ ∨ ¬ →`` are accepted as aliases.  There is no biconditional
and no function terms.  Whether an argument is a variable is decided by
binding: names bound by an enclosing quantifier are variables; unbound names
of the conventional variable shape (one lowercase letter plus optional digits)
are free variables; everything else is a constant.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Union

from .errors import FolSyntaxError, UnknownToken

__all__ = [
    "Quantifier",
    "Connective",
    "Atom",
    "Not",
    "Binary",
    "Quantified",
    "FolExpr",
    "parse_fol",
    "fol_to_string",
    "free_variables",
    "to_json",
    "from_json",
]

VARIABLE_SHAPE = re.compile(r"[a-z][0-9]*\Z")
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class Quantifier(str, enum.Enum):
    FORALL = "forall"
    EXISTS = "exists"


class Connective(str, enum.Enum):
    AND = "and"
    OR = "or"
    IMPLIES = "implies"


_SYMBOL = {Connective.AND: "&", Connective.OR: "|", Connective.IMPLIES: "->"}
_PREC = {Connective.IMPLIES: 1, Connective.OR: 2, Connective.AND: 3}
_UNARY_PREC = 4
KEYWORDS = {"forall", "exists"}


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.predicate or not IDENT_RE.match(self.predicate) or self.predicate in KEYWORDS:
            raise ValueError(f"invalid predicate name {self.predicate!r}")
        if not self.args:
            raise ValueError(f"predicate {self.predicate} needs at least one argument")
        for a in self.args:
            if not IDENT_RE.match(a) or a in KEYWORDS:
                raise ValueError(f"invalid term {a!r}")


@dataclass(frozen=True)
class Not:
    inner: "FolExpr"


@dataclass(frozen=True)
class Binary:
    op: Connective
    left: "FolExpr"
    right: "FolExpr"


@dataclass(frozen=True)
class Quantified:
    quantifier: Quantifier
    variable: str
    body: "FolExpr"

    def __post_init__(self):
        if not IDENT_RE.match(self.variable) or self.variable in KEYWORDS:
            raise ValueError(f"invalid quantified variable {self.variable!r}")


FolExpr = Union[Atom, Not, Binary, Quantified]


_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<implies>->|→)
    | (?P<lparen>\()
    | (?P<rparen>\))
    | (?P<comma>,)
    | (?P<dot>\.)
    | (?P<not>~|¬)
    | (?P<and>&|∧)
    | (?P<or>\||∨)
    | (?P<forall>∀)
    | (?P<exists>∃)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<bad>.)
    """,
    re.VERBOSE | re.DOTALL,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    for m in _TOKEN_RE.finditer(text):
        kind, value = m.lastgroup, m.group()
        if kind == "ws":
            continue
        if kind == "bad":
            if text.startswith("<->", m.start()) or text.startswith("↔", m.start()):
                raise UnknownToken("biconditional is not supported", m.start())
            raise UnknownToken(f"unknown symbol {value!r}", m.start())
        if kind == "ident" and value in KEYWORDS:
            kind = value
        out.append((kind, value, m.start()))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        if self.i < len(self.toks):
            return self.toks[self.i]
        return ("eof", "", len(self.text))

    def expect(self, kind: str, what: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            found = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise FolSyntaxError(f"expected {what}, found {found}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> FolExpr:
        if not self.toks:
            raise FolSyntaxError("empty formula", 0)
        expr = self.implies()
        tok = self.peek()
        if tok[0] != "eof":
            raise FolSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return expr

    def implies(self) -> FolExpr:
        left = self.disjunction()
        if self.peek()[0] == "implies":
            self.i += 1
            return Binary(Connective.IMPLIES, left, self.implies())
        return left

    def disjunction(self) -> FolExpr:
        left = self.conjunction()
        while self.peek()[0] == "or":
            self.i += 1
            left = Binary(Connective.OR, left, self.conjunction())
        return left

    def conjunction(self) -> FolExpr:
        left = self.unary()
        while self.peek()[0] == "and":
            self.i += 1
            left = Binary(Connective.AND, left, self.unary())
        return left

    def unary(self) -> FolExpr:
        kind, value, pos = self.peek()
        if kind == "not":
            self.i += 1
            return Not(self.unary())
        if kind in ("forall", "exists"):
            self.i += 1
            _, var, _ = self.expect("ident", "a quantified variable")
            if self.peek()[0] == "dot":
                self.i += 1
            return Quantified(Quantifier(kind), var, self.implies())
        if kind == "lparen":
            self.i += 1
            inner = self.implies()
            self.expect("rparen", "')'")
            return inner
        if kind == "ident":
            self.i += 1
            self.expect("lparen", f"'(' after predicate {value!r}")
            args = [self.expect("ident", "a term")[1]]
            while self.peek()[0] == "comma":
                self.i += 1
                args.append(self.expect("ident", "a term")[1])
            self.expect("rparen", "')' closing the argument list")
            return Atom(value, tuple(args))
        found = "end of input" if kind == "eof" else repr(value)
        raise FolSyntaxError(f"expected a formula, found {found}", pos)


def parse_fol(text: str) -> FolExpr:
    """Parse an ASCII (or Unicode) formula.

    >>> parse_fol("~p(x) & q(x)")
    Binary(op=<Connective.AND: 'and'>, left=Not(inner=Atom(predicate='p', args=('x',))), right=Atom(predicate='q', args=('x',)))
    """
    if text is None or not text.strip():
        raise FolSyntaxError("empty formula", 0)
    return _Parser(text).parse()


def _fmt(expr: FolExpr, ctx: int, tail_open: bool) -> str:
    # tail_open: nothing follows this subformula inside the current parenthesized scope,
    # so a quantifier here may extend to the right without parentheses
    if isinstance(expr, Atom):
        return f"{expr.predicate}({', '.join(expr.args)})"
    if isinstance(expr, Not):
        return "~" + _fmt(expr.inner, _UNARY_PREC, tail_open)
    if isinstance(expr, Quantified):
        body = f"{expr.quantifier.value} {expr.variable} {_fmt(expr.body, 0, True)}"
        return body if tail_open else f"({body})"
    prec = _PREC[expr.op]
    wrap = prec < ctx
    tail = True if wrap else tail_open
    if expr.op is Connective.IMPLIES:
        left = _fmt(expr.left, prec + 1, False)
        right = _fmt(expr.right, prec, tail)
    else:
        left = _fmt(expr.left, prec, False)
        right = _fmt(expr.right, prec + 1, tail)
    s = f"{left} {_SYMBOL[expr.op]} {right}"
    return f"({s})" if wrap else s


def fol_to_string(expr: FolExpr) -> str:
    """Canonical ASCII form with the fewest parentheses that reparse identically."""
    return _fmt(expr, 0, True)


def free_variables(expr: FolExpr, bound: frozenset[str] = frozenset()) -> set[str]:
    if isinstance(expr, Atom):
        return {a for a in expr.args if a not in bound and VARIABLE_SHAPE.match(a)}
    if isinstance(expr, Not):
        return free_variables(expr.inner, bound)
    if isinstance(expr, Quantified):
        return free_variables(expr.body, bound | {expr.variable})
    return free_variables(expr.left, bound) | free_variables(expr.right, bound)


def to_json(expr: FolExpr) -> dict:
    if isinstance(expr, Atom):
        return {"type": "atom", "predicate": expr.predicate, "args": list(expr.args)}
    if isinstance(expr, Not):
        return {"type": "not", "inner": to_json(expr.inner)}
    if isinstance(expr, Quantified):
        return {
            "type": "quantified",
            "quantifier": expr.quantifier.value,
            "variable": expr.variable,
            "body": to_json(expr.body),
        }
    return {"type": "binary", "op": expr.op.value, "left": to_json(expr.left), "right": to_json(expr.right)}


def from_json(data: dict) -> FolExpr:
    t = data["type"]
    if t == "atom":
        return Atom(data["predicate"], tuple(data["args"]))
    if t == "not":
        return Not(from_json(data["inner"]))
    if t == "quantified":
        return Quantified(Quantifier(data["quantifier"]), data["variable"], from_json(data["body"]))
    if t == "binary":
        return Binary(Connective(data["op"]), from_json(data["left"]), from_json(data["right"]))
    raise ValueError(f"unknown FOL node type {t!r}")
