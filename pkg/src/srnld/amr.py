"""PENMAN-notation AMR: parsing, validation, serialization and triplets.

Supported subset: node declarations ``(v / concept ...)``, relation edges,
string literals, numeric literals, symbol constants (``-``, ``imperative``),
bare-variable re-entrancy and ``#`` comment lines.  Alignment suffixes
(``~e.3``) are stripped.

A bare symbol on an edge is classified lexically: a quoted string is a string
literal, a number is a numeric literal, a symbol declared with ``/`` anywhere
in the graph is a variable, a short variable-shaped symbol (one letter plus
optional digits) that is never declared is a dangling reference, and anything
else is a symbol constant.
"""

from __future__ import annotations

import re
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Iterable

from .errors import (
    AmrError,
    DanglingReference,
    DuplicateVariable,
    EmptyInput,
    InvalidGraph,
    UnbalancedParens,
)

__all__ = [
    "AmrGraph",
    "Triplet",
    "INSTANCE",
    "parse_penman",
    "to_triplets",
    "serialize_penman",
]

INSTANCE = ":instance"
INDENT = "    "

VARIABLE_RE = re.compile(r"[a-z][a-z0-9]*\Z")
# undeclared symbols of this shape are treated as broken variable references
DANGLING_SHAPE_RE = re.compile(r"[a-z][0-9]*\Z")
NUMBER_RE = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?\Z")
_BAD_SYMBOL_CHARS = re.compile(r'[\s()"]')

_COMMENT_RE = re.compile(r"^[ \t]*#.*$", re.MULTILINE)
_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<lparen>\()
    | (?P<rparen>\))
    | (?P<slash>/)
    | (?P<string>"(?:[^"\\]|\\.)*")
    | (?P<role>:[^\s()"~/]*)
    | (?P<symbol>[^\s()"~/:][^\s()"~]*)
    | (?P<align>~[^\s()]*)
    | (?P<bad>.)
    """,
    re.VERBOSE | re.DOTALL,
)


class Triplet(namedtuple("Triplet", "subject relation object")):
    """One ``(subject, relation, object)`` row of a graph decomposition."""

    __slots__ = ()

    def __new__(cls, subject: str, relation: str, object: str):
        if not relation or re.search(r"\s", relation):
            raise ValueError(f"bad relation label {relation!r}")
        if not relation.startswith(":"):
            raise ValueError(f"relation must start with ':' ({relation!r})")
        return super().__new__(cls, subject, relation, object)


@dataclass(frozen=True)
class AmrGraph:
    """A rooted, labeled graph.

    ``edges`` hold ``(source, relation, target)`` in source-text order.  A target
    is a variable when it is a key of ``nodes``; otherwise it is a literal, and
    string literals keep their double quotes.
    """

    root: str
    nodes: dict[str, str]
    edges: tuple[tuple[str, str, str], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))

    def validate(self) -> "AmrGraph":
        if self.root not in self.nodes:
            raise InvalidGraph(f"root {self.root!r} is not a declared node")
        for var, concept in self.nodes.items():
            if not VARIABLE_RE.match(var):
                raise InvalidGraph(f"invalid variable name {var!r}")
            if not concept or _BAD_SYMBOL_CHARS.search(concept):
                raise InvalidGraph(f"invalid concept {concept!r} for {var}")
        for src, rel, tgt in self.edges:
            if src not in self.nodes:
                raise DanglingReference(f"edge source {src!r} is not declared")
            if not rel.startswith(":") or len(rel) < 2 or re.search(r"\s", rel) or rel == INSTANCE:
                raise InvalidGraph(f"invalid relation {rel!r}")
            if tgt in self.nodes:
                continue
            if tgt.startswith('"'):
                if len(tgt) < 2 or not tgt.endswith('"'):
                    raise InvalidGraph(f"unterminated string literal {tgt!r}")
            elif not tgt or _BAD_SYMBOL_CHARS.search(tgt) or tgt.startswith((":", "/")):
                raise InvalidGraph(f"invalid literal {tgt!r}")
            elif DANGLING_SHAPE_RE.match(tgt):
                raise DanglingReference(f"variable {tgt!r} is used but never declared")
        unreached = set(self.nodes) - _reachable(self)
        if unreached:
            raise InvalidGraph(f"nodes not reachable from root: {sorted(unreached)}")
        return self

    def to_json(self) -> dict:
        return {
            "root": self.root,
            "nodes": dict(self.nodes),
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_json(cls, data: dict) -> "AmrGraph":
        return cls(data["root"], dict(data["nodes"]), tuple(tuple(e) for e in data["edges"])).validate()


def _out_edges(graph: AmrGraph) -> dict[str, list[tuple[str, str, str]]]:
    out: dict[str, list[tuple[str, str, str]]] = {v: [] for v in graph.nodes}
    for e in graph.edges:
        out[e[0]].append(e)
    return out


def _reachable(graph: AmrGraph) -> set[str]:
    out = _out_edges(graph)
    seen = {graph.root}
    stack = [graph.root]
    while stack:
        v = stack.pop()
        for _, _, t in out.get(v, ()):
            if t in graph.nodes and t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


# parsing


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    text = _COMMENT_RE.sub(lambda m: " " * len(m.group()), text)
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind in ("ws", "align"):
            continue
        if kind == "bad":
            if m.group() == '"':
                raise AmrError("unterminated string literal", m.start())
            raise AmrError(f"unexpected character {m.group()!r}", m.start())
        tokens.append((kind, m.group(), m.start()))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.nodes: dict[str, str] = {}
        # raw edges; bare-symbol targets are resolved after the whole text is read
        self.edges: list[tuple[str, str, str, str, int]] = []

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self, kind: str, what: str):
        tok = self.peek()
        if tok is None:
            raise UnbalancedParens(f"input ended while expecting {what}", len(self.text))
        if tok[0] != kind:
            if tok[0] == "rparen":
                raise AmrError(f"expected {what}, found ')'", tok[2])
            raise AmrError(f"expected {what}, found {tok[1]!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> AmrGraph:
        if not self.tokens:
            raise EmptyInput("no PENMAN content")
        depth = 0
        for kind, _, pos in self.tokens:
            depth += (kind == "lparen") - (kind == "rparen")
            if depth < 0:
                raise UnbalancedParens("unexpected ')'", pos)
        if depth:
            raise UnbalancedParens(f"{depth} unclosed '('", len(self.text))
        root = self.node()
        extra = self.peek()
        if extra is not None:
            if extra[0] == "rparen":
                raise UnbalancedParens("unexpected ')' after the graph", extra[2])
            raise AmrError(f"trailing content {extra[1]!r} after the graph", extra[2])
        return self.resolve(root)

    def node(self) -> str:
        self.take("lparen", "'('")
        _, var, pos = self.take("symbol", "a variable")
        if not VARIABLE_RE.match(var):
            raise AmrError(f"invalid variable name {var!r}", pos)
        if var in self.nodes:
            raise DuplicateVariable(f"variable {var!r} declared twice", pos)
        self.take("slash", "'/'")
        _, concept, _ = self.take("symbol", "a concept")
        self.nodes[var] = concept
        while True:
            tok = self.peek()
            if tok is None:
                raise UnbalancedParens(f"missing ')' for node {var!r}", len(self.text))
            kind, value, pos = tok
            if kind == "rparen":
                self.i += 1
                return var
            if kind != "role":
                raise AmrError(f"expected a relation or ')', found {value!r}", pos)
            if len(value) < 2:
                raise AmrError("empty relation label", pos)
            self.i += 1
            tgt = self.peek()
            if tgt is None:
                raise UnbalancedParens(f"input ended after relation {value}", len(self.text))
            tkind, tval, tpos = tgt
            if tkind == "lparen":
                slot = len(self.edges)
                self.edges.append(None)
                child = self.node()
                self.edges[slot] = (var, value, child, "var", tpos)
            elif tkind == "string":
                self.i += 1
                self.edges.append((var, value, tval, "string", tpos))
            elif tkind == "symbol":
                self.i += 1
                self.edges.append((var, value, tval, "symbol", tpos))
            else:
                raise AmrError(f"relation {value} has no target", tpos)

    def resolve(self, root: str) -> AmrGraph:
        edges = []
        for src, rel, tgt, kind, pos in self.edges:
            if kind == "symbol" and tgt not in self.nodes and not NUMBER_RE.match(tgt):
                if DANGLING_SHAPE_RE.match(tgt):
                    raise DanglingReference(f"variable {tgt!r} is used but never declared", pos)
            edges.append((src, rel, tgt))
        return AmrGraph(root, dict(self.nodes), tuple(edges))


def parse_penman(text: str) -> AmrGraph:
    """Parse one PENMAN graph.

    >>> g = parse_penman('(a / and :op1 (b / boy) :op2 b)')
    >>> g.edges
    (('a', ':op1', 'b'), ('a', ':op2', 'b'))
    """
    if text is None or not text.strip():
        raise EmptyInput("no PENMAN content")
    return _Parser(text).parse()


def _dfs_events(graph: AmrGraph):
    """Yield ``open``/``edge``/``close`` events of the depth-first walk.

    Triplet order and serialization both consume this so they always agree on
    which occurrence of a re-entrant node is its first visit.
    """
    out = _out_edges(graph)
    visited = {graph.root}
    yield ("open", graph.root, 0)
    stack = [(graph.root, 0, iter(out[graph.root]))]
    while stack:
        var, depth, edges = stack[-1]
        edge = next(edges, None)
        if edge is None:
            stack.pop()
            yield ("close", var, depth)
            continue
        tgt = edge[2]
        descend = tgt in graph.nodes and tgt not in visited
        yield ("edge", edge, depth, descend)
        if descend:
            visited.add(tgt)
            yield ("open", tgt, depth + 1)
            stack.append((tgt, depth + 1, iter(out[tgt])))


def to_triplets(graph: AmrGraph) -> list[Triplet]:
    """Decompose a graph depth-first from the root.

    The ``:instance`` triplet of a node is emitted at its first visit; edges
    follow source-text order.
    """
    rows: list[Triplet] = []
    for event in _dfs_events(graph):
        if event[0] == "open":
            rows.append(Triplet(event[1], INSTANCE, graph.nodes[event[1]]))
        elif event[0] == "edge":
            rows.append(Triplet(*event[1]))
    return rows


def serialize_penman(graph: AmrGraph) -> str:
    """Render a graph as indented PENMAN, four spaces per level."""
    parts: list[str] = []
    for event in _dfs_events(graph):
        if event[0] == "open":
            parts.append(f"({event[1]} / {graph.nodes[event[1]]}")
        elif event[0] == "edge":
            (_, rel, tgt), depth, descend = event[1], event[2], event[3]
            parts.append(f"\n{INDENT * (depth + 1)}{rel} ")
            if not descend:
                parts.append(tgt)
        else:
            parts.append(")")
    return "".join(parts)


def triplet_set(triplets: Iterable[Triplet]) -> set[tuple[str, str, str]]:
    return {tuple(t) for t in triplets}
