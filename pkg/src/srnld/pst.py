"""Penn-Treebank-style bracketed constituency trees.

Trees are parsed from ``(S (NP (NNP John)) (VP ...))`` text, serialized back to
one line, and linearized depth-first into ``(depth, label, token)`` rows.  The
tag set is open: any label without whitespace or parentheses is accepted.
Tokens containing parentheses must use the PTB escapes ``-LRB-`` / ``-RRB-``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional

from .errors import EmptyConstituent, LabelOnly, MixedChildren, PstError, PstUnbalancedParens

__all__ = [
    "PstTree",
    "PstLinear",
    "parse_brackets",
    "serialize_brackets",
    "dfs_linearize",
    "from_linear",
    "escape_token",
]

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")
_BAD = re.compile(r"[\s()]")


def escape_token(word: str) -> str:
    return word.replace("(", "-LRB-").replace(")", "-RRB-")


@dataclass(frozen=True)
class PstTree:
    label: str
    children: tuple["PstTree", ...] = ()
    token: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.label or _BAD.search(self.label):
            raise PstError(f"invalid label {self.label!r}")
        if self.children and self.token is not None:
            raise MixedChildren(f"{self.label} has both a token and children")
        if not self.children and self.token is None:
            raise LabelOnly(f"{self.label} has neither a token nor children")
        if self.token is not None and (not self.token or _BAD.search(self.token)):
            raise PstError(f"invalid token {self.token!r} (escape parens as -LRB-/-RRB-)")

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    def nodes(self) -> Iterator["PstTree"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())

    def leaves(self) -> list[str]:
        return [n.token for n in self.nodes() if n.token is not None]

    def to_json(self) -> dict:
        if self.token is not None:
            return {"label": self.label, "token": self.token}
        return {"label": self.label, "children": [c.to_json() for c in self.children]}

    @classmethod
    def from_json(cls, data: dict) -> "PstTree":
        if "token" in data:
            return cls(data["label"], token=data["token"])
        return cls(data["label"], children=tuple(cls.from_json(c) for c in data.get("children", ())))


@dataclass(frozen=True)
class PstLinear:
    """Pre-order rows ``(depth, label, token)``; token is None for internal nodes."""

    sequence: tuple[tuple[int, str, Optional[str]], ...]

    def __len__(self):
        return len(self.sequence)

    def __iter__(self):
        return iter(self.sequence)


def _tokens(text: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start()) for m in _TOKEN_RE.finditer(text)]


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self) -> PstTree:
        if not self.toks:
            raise PstError("empty input")
        depth = 0
        for t, pos in self.toks:
            depth += (t == "(") - (t == ")")
            if depth < 0:
                raise PstUnbalancedParens("unexpected ')'", pos)
        if depth:
            raise PstUnbalancedParens(f"{depth} unclosed '('", len(self.text))
        if self.toks[0][0] != "(":
            raise PstError(f"expected '(', found {self.toks[0][0]!r}", 0)

        if len(self.toks) > 1 and self.toks[1][0] == "(":
            # label-less outer wrapper
            self.next()
            inner = [self.tree()]
            while self.peek()[0] == "(":
                inner.append(self.tree())
            tok, pos = self.next()
            if tok != ")":
                raise PstError(f"unexpected {tok!r} inside the outer wrapper", pos)
            if len(inner) != 1:
                raise PstError(f"outer wrapper holds {len(inner)} trees, expected 1", 0)
            tree = inner[0]
        else:
            tree = self.tree()
        tok, pos = self.peek()
        if tok is not None:
            raise PstError(f"trailing content {tok!r} after the tree", pos)
        return tree

    def tree(self) -> PstTree:
        tok, pos = self.next()
        if tok != "(":
            raise PstError(f"expected '(', found {tok!r}", pos)
        label, lpos = self.next()
        if label == ")":
            raise EmptyConstituent("empty constituent '()'", pos)
        if label == "(":
            raise PstError("constituent without a label", lpos)
        tok, tpos = self.peek()
        if tok == ")":
            raise LabelOnly(f"constituent {label!r} has no token or children", pos)
        if tok != "(":
            self.next()
            after, apos = self.peek()
            if after != ")":
                raise MixedChildren(
                    f"constituent {label!r} has a token followed by {after!r}", apos
                )
            self.next()
            return PstTree(label, token=tok)
        children = []
        while True:
            tok, tpos = self.peek()
            if tok == ")":
                self.next()
                return PstTree(label, children=tuple(children))
            if tok != "(":
                raise MixedChildren(f"constituent {label!r} mixes subtrees and token {tok!r}", tpos)
            children.append(self.tree())


def parse_brackets(text: str) -> PstTree:
    """Parse one bracketed tree.

    >>> parse_brackets("(NP (DT a) (NN dog))").node_count()
    3
    """
    if text is None or not text.strip():
        raise PstError("empty input")
    return _Parser(text).parse()


def serialize_brackets(tree: PstTree) -> str:
    if tree.token is not None:
        return f"({tree.label} {tree.token})"
    return f"({tree.label} " + " ".join(serialize_brackets(c) for c in tree.children) + ")"


def dfs_linearize(tree: PstTree) -> PstLinear:
    rows = []
    stack = [(tree, 0)]
    while stack:
        node, depth = stack.pop()
        rows.append((depth, node.label, node.token))
        stack.extend((c, depth + 1) for c in reversed(node.children))
    return PstLinear(tuple(rows))


def from_linear(linear: PstLinear) -> PstTree:
    """Rebuild a tree from its pre-order rows (inverse of :func:`dfs_linearize`)."""
    rows = list(linear)
    if not rows or rows[0][0] != 0:
        raise PstError("linearization must start at depth 0")
    pos = 0

    def build(depth: int) -> PstTree:
        nonlocal pos
        d, label, token = rows[pos]
        pos += 1
        if token is not None:
            return PstTree(label, token=token)
        kids = []
        while pos < len(rows) and rows[pos][0] > d:
            if rows[pos][0] != d + 1:
                raise PstError(f"depth jumps from {d} to {rows[pos][0]}")
            kids.append(build(d + 1))
        return PstTree(label, children=tuple(kids))

    tree = build(0)
    if pos != len(rows):
        raise PstError("linearization holds more than one root")
    return tree
