"""Rule-based natural-language descriptions of AMR, PST and FOL.

Each representation gets its own mapping:

* AMR: triplets -> identifier instantiation -> one sentence per relation,
  worded by a relation dictionary (``:R-of`` reuses the ``:R`` template with
  subject and object swapped);
* PST: one sentence per node of the depth-first linearization;
* FOL: one composed sentence from recursive connective/quantifier rules,
  plus an inventory sentence when the formula has free variables.

Dictionaries are UTF-8 files of ``"key"<TAB>"value"`` lines, both sides JSON
string literals.  Keys starting with ``@`` are reserved for structural
templates; ``@kind`` names the representation the file belongs to.
"""

from __future__ import annotations

import hashlib
import json
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from . import amr as amr_mod
from . import fol as fol_mod
from . import pst as pst_mod
from .amr import INSTANCE, Triplet
from .errors import DictionaryError, MissingInstance

__all__ = [
    "KINDS",
    "RelationDictionary",
    "MappingLog",
    "NldDoc",
    "load_dictionary",
    "bundled_dictionary",
    "parse_dictionary",
    "instantiate_identifiers",
    "map_amr_triplets",
    "pst_to_sentences",
    "fol_to_sentences",
    "to_nld",
    "parse_sr",
]

KINDS = ("AMR", "PST", "FOL")

# reserved template keys and the placeholders each one must contain
_REQUIRED = {
    "AMR": {"@default": {"subj", "rel", "obj"}, "@single": {"concept"}},
    "PST": {"@internal": {"label", "children"}, "@preterminal": {"token", "label"}},
    "FOL": {"@unary": {"pred", "0"}, "@default": {"pred", "args"}},
}
_ALLOWED = {
    "AMR": {"@default": {"subj", "rel", "obj"}, "@single": {"concept", "article"}},
    "PST": {"@internal": {"label", "children"}, "@preterminal": {"token", "label"}},
    "FOL": {"@unary": {"pred", "0"}, "@default": {"pred", "args"}},
}
_DEFAULT_KEY = {"AMR": "@default", "PST": "@internal", "FOL": "@default"}
_LITERAL_PREFIX = "@literal:"


def _fields(template: str) -> set[str]:
    try:
        return {f for _, f, _, _ in string.Formatter().parse(template) if f is not None}
    except ValueError as exc:
        raise DictionaryError(f"malformed template {template!r}: {exc}") from None


@dataclass(frozen=True)
class RelationDictionary:
    """Immutable relation/tag/predicate dictionary for one SR kind.

    ``entries`` maps AMR relations to ``{subj}``/``{obj}`` templates, PTB tags
    to descriptions, or FOL predicates to ``{0}``, ``{1}``... templates.
    ``templates`` holds the reserved ``@`` keys.  ``digest`` is the SHA-256 of
    the canonical dump and is stamped on every NldDoc made with it.
    """

    kind: str
    entries: Mapping[str, str]
    templates: Mapping[str, str]
    literals: Mapping[str, str] = field(default_factory=dict)
    digest: str = ""

    @property
    def default_template(self) -> str:
        return self.templates[_DEFAULT_KEY[self.kind]]

    def canonical_lines(self) -> list[str]:
        items = [("@kind", self.kind.lower())]
        items += sorted(self.templates.items())
        items += sorted((_LITERAL_PREFIX + k, v) for k, v in self.literals.items())
        items += sorted(self.entries.items())
        return [json.dumps(k, ensure_ascii=False) + "\t" + json.dumps(v, ensure_ascii=False) for k, v in items]

    def dumps(self) -> str:
        return "\n".join(self.canonical_lines()) + "\n"


def _validate(kind: str, entries: Mapping[str, str], templates: Mapping[str, str]) -> None:
    for key, need in _REQUIRED[kind].items():
        if key not in templates:
            raise DictionaryError(f"{kind} dictionary lacks the {key} template")
        got = _fields(templates[key])
        if not need <= got:
            raise DictionaryError(f"{kind} template {key} must contain {sorted(need - got)}")
        if not got <= _ALLOWED[kind][key]:
            raise DictionaryError(f"{kind} template {key} uses unknown placeholders {sorted(got - _ALLOWED[kind][key])}")
    for key, tpl in entries.items():
        got = _fields(tpl)
        if kind == "AMR":
            if got != {"subj", "obj"}:
                raise DictionaryError(f"AMR entry {key} must use exactly {{subj}} and {{obj}}, found {sorted(got)}")
            if not key.startswith(":"):
                raise DictionaryError(f"AMR entry key {key!r} must start with ':'")
        elif kind == "PST":
            if got:
                raise DictionaryError(f"PST description for {key} must not contain placeholders")
        else:
            if "0" not in got or not all(f.isdigit() for f in got):
                raise DictionaryError(f"FOL entry {key} must use positional placeholders starting at {{0}}")


def _digest(d: RelationDictionary) -> str:
    return hashlib.sha256(d.dumps().encode("utf-8")).hexdigest()


def make_dictionary(
    kind: str,
    entries: Mapping[str, str],
    templates: Mapping[str, str],
    literals: Optional[Mapping[str, str]] = None,
) -> RelationDictionary:
    kind = kind.upper()
    if kind not in KINDS:
        raise DictionaryError(f"unknown SR kind {kind!r}")
    _validate(kind, entries, templates)
    d = RelationDictionary(kind, dict(entries), dict(templates), dict(literals or {}))
    return RelationDictionary(d.kind, d.entries, d.templates, d.literals, _digest(d))


def parse_dictionary(text: str, source: str = "<string>") -> RelationDictionary:
    kind = None
    entries: dict[str, str] = {}
    templates: dict[str, str] = {}
    literals: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DictionaryError(f"{source}:{lineno}: expected one TAB between key and value")
        try:
            key, value = json.loads(parts[0]), json.loads(parts[1])
        except json.JSONDecodeError as exc:
            raise DictionaryError(f"{source}:{lineno}: {exc}") from None
        if not isinstance(key, str) or not isinstance(value, str):
            raise DictionaryError(f"{source}:{lineno}: key and value must be strings")
        if key == "@kind":
            kind = value
        elif key.startswith(_LITERAL_PREFIX):
            literals[key[len(_LITERAL_PREFIX):]] = value
        elif key.startswith("@"):
            templates[key] = value
        else:
            if key in entries:
                raise DictionaryError(f"{source}:{lineno}: duplicate key {key!r}")
            entries[key] = value
    if kind is None:
        raise DictionaryError(f"{source}: missing \"@kind\" line")
    return make_dictionary(kind, entries, templates, literals)


def load_dictionary(path: str | Path) -> RelationDictionary:
    path = Path(path)
    return parse_dictionary(path.read_text(encoding="utf-8"), str(path))


def bundled_dictionary(kind: str) -> RelationDictionary:
    name = f"dict_{kind.lower()}.tsv"
    text = resources.files("srnld").joinpath("data", name).read_text(encoding="utf-8")
    return parse_dictionary(text, name)


@dataclass
class MappingLog:
    """Which keys were worded by the dictionary and which fell back."""

    hits: list[str] = field(default_factory=list)
    fallbacks: list[str] = field(default_factory=list)

    def seen(self) -> set[str]:
        return set(self.hits) | set(self.fallbacks)


@dataclass
class NldDoc:
    kind: str
    sentences: list[str]
    refined: Optional[str] = None
    dict_hash: str = ""

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "sentences": list(self.sentences),
            "refined": self.refined,
            "dict_hash": self.dict_hash,
        }

    @classmethod
    def from_json(cls, data: dict) -> "NldDoc":
        return cls(data["kind"], list(data["sentences"]), data.get("refined"), data.get("dict_hash", ""))


def _sentence(text: str) -> str:
    text = text.strip()
    return text if text.endswith(".") else text + "."


def _join_list(items: list[str]) -> str:
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


def _check_kind(d: RelationDictionary, kind: str) -> None:
    if d.kind != kind:
        raise DictionaryError(f"a {d.kind} dictionary cannot describe {kind}")


# AMR


def instantiate_identifiers(triplets: list[Triplet]) -> list[Triplet]:
    """Replace variables with their concepts and drop ``:instance`` rows.

    Distinct variables sharing a concept become ``concept``, ``concept (2)``,
    ``concept (3)`` in order of their ``:instance`` rows.
    """
    names: dict[str, str] = {}
    used: dict[str, int] = {}
    for subj, rel, obj in triplets:
        if rel == INSTANCE and subj not in names:
            used[obj] = used.get(obj, 0) + 1
            names[subj] = obj if used[obj] == 1 else f"{obj} ({used[obj]})"
    out = []
    for subj, rel, obj in triplets:
        if rel == INSTANCE:
            continue
        if subj not in names:
            raise MissingInstance(f"variable {subj!r} has no :instance triplet")
        out.append(Triplet(names[subj], rel, names.get(obj, obj)))
    return out


def _render_literal(obj: str, d: RelationDictionary) -> str:
    if obj in d.literals:
        return d.literals[obj]
    if len(obj) >= 2 and obj[0] == obj[-1] == '"':
        return json.loads(obj) if "\\" in obj else obj[1:-1]
    return obj


def map_amr_triplets(
    triplets: list[Triplet], d: RelationDictionary, log: Optional[MappingLog] = None
) -> list[str]:
    _check_kind(d, "AMR")
    out = []
    for subj, rel, obj in triplets:
        if rel == INSTANCE:
            raise ValueError("map_amr_triplets expects instantiated triplets")
        obj_text = _render_literal(obj, d)
        if rel in d.entries:
            text = d.entries[rel].format(subj=subj, obj=obj_text)
            hit = True
        elif rel.endswith("-of") and rel[:-3] in d.entries:
            text = d.entries[rel[:-3]].format(subj=obj_text, obj=subj)
            hit = True
        else:
            text = d.default_template.format(subj=subj, rel=rel[1:], obj=obj_text)
            hit = False
        if log is not None:
            (log.hits if hit else log.fallbacks).append(rel)
        out.append(_sentence(text))
    return out


def _article(word: str) -> str:
    return "an" if word[:1].lower() in "aeiou" else "a"


def amr_to_sentences(graph: amr_mod.AmrGraph, d: RelationDictionary, log: Optional[MappingLog] = None) -> list[str]:
    triplets = instantiate_identifiers(amr_mod.to_triplets(graph))
    if not triplets:
        concept = graph.nodes[graph.root]
        if log is not None:
            log.hits.append(INSTANCE)
        return [_sentence(d.templates["@single"].format(concept=concept, article=_article(concept)))]
    return map_amr_triplets(triplets, d, log)


# PST


def _describe(label: str, d: RelationDictionary, log: Optional[MappingLog]) -> str:
    if label in d.entries:
        if log is not None:
            log.hits.append(label)
        return d.entries[label]
    if log is not None:
        log.fallbacks.append(label)
    return label


def _head(description: str) -> str:
    for art in ("a ", "an ", "the "):
        if description.lower().startswith(art):
            return description[len(art):]
    return description


def pst_to_sentences(
    linear: pst_mod.PstLinear, d: RelationDictionary, log: Optional[MappingLog] = None
) -> list[str]:
    """One sentence per node of the pre-order sequence.

    Internal nodes list their children's descriptions; preterminals name
    their word.
    """
    _check_kind(d, "PST")
    rows = list(linear)
    out = []
    for i, (depth, label, token) in enumerate(rows):
        if token is not None:
            text = d.templates["@preterminal"].format(token=token, label=_describe(label, d, log))
        else:
            kids = []
            for cdepth, clabel, _ in rows[i + 1:]:
                if cdepth <= depth:
                    break
                if cdepth == depth + 1:
                    kids.append(clabel)
            head = _head(_describe(label, d, log))
            # child descriptions are looked up again when the child row itself is visited;
            # only that visit is logged
            children = _join_list([_describe(k, d, None) for k in kids])
            text = d.templates["@internal"].format(label=head, children=children)
        out.append(_sentence(text))
    return out


# FOL


def _fol_phrase(e: fol_mod.FolExpr, d: RelationDictionary, log: Optional[MappingLog]) -> tuple[str, bool]:
    """Return the phrase and whether it opens with rule wording (safe to capitalize)."""
    if isinstance(e, fol_mod.Atom):
        tpl = d.entries.get(e.predicate)
        # an entry written for a different arity is not used
        if tpl is not None and max(int(f) for f in _fields(tpl)) + 1 == len(e.args):
            if log is not None:
                log.hits.append(e.predicate)
            return tpl.format(*e.args), not tpl.startswith("{")
        if log is not None:
            log.fallbacks.append(e.predicate)
        if len(e.args) == 1:
            return d.templates["@unary"].format(e.args[0], pred=e.predicate), False
        return d.templates["@default"].format(pred=e.predicate, args=_join_list(list(e.args))), False
    if isinstance(e, fol_mod.Not):
        inner, _ = _fol_phrase(e.inner, d, log)
        _rule(log, "not")
        return "it is not the case that " + inner, True
    if isinstance(e, fol_mod.Quantified):
        body, _ = _fol_phrase(e.body, d, log)
        _rule(log, e.quantifier.value)
        if e.quantifier is fol_mod.Quantifier.FORALL:
            return f"for every {e.variable}, {body}", True
        return f"there exists {e.variable} such that {body}", True
    left, flag = _fol_phrase(e.left, d, log)
    right, _ = _fol_phrase(e.right, d, log)
    _rule(log, e.op.value)
    if e.op is fol_mod.Connective.IMPLIES:
        return f"if {left} then {right}", True
    return f"{left} {e.op.value} {right}", flag


def _rule(log: Optional[MappingLog], name: str) -> None:
    if log is not None:
        log.hits.append(name)


def fol_to_sentences(expr: fol_mod.FolExpr, d: RelationDictionary, log: Optional[MappingLog] = None) -> list[str]:
    _check_kind(d, "FOL")
    text, rule_first = _fol_phrase(expr, d, log)
    if rule_first:
        text = text[0].upper() + text[1:]
    out = [_sentence(text)]
    free = sorted(fol_mod.free_variables(expr))
    if len(free) == 1:
        out.append(f"The free variable is {free[0]}.")
    elif free:
        out.append(f"The free variables are {_join_list(free)}.")
    return out


# dispatch


def parse_sr(sr_text: str, kind: str):
    kind = kind.upper()
    if kind == "AMR":
        return amr_mod.parse_penman(sr_text)
    if kind == "PST":
        return pst_mod.parse_brackets(sr_text)
    if kind == "FOL":
        return fol_mod.parse_fol(sr_text)
    raise ValueError(f"unknown SR kind {kind!r}")


def to_nld(sr_text: str, kind: str, d: RelationDictionary, log: Optional[MappingLog] = None) -> NldDoc:
    """Parse ``sr_text`` as ``kind`` and describe it; ``refined`` stays unset."""
    kind = kind.upper()
    _check_kind(d, kind)
    parsed = parse_sr(sr_text, kind)
    if kind == "AMR":
        sentences = amr_to_sentences(parsed, d, log)
    elif kind == "PST":
        sentences = pst_to_sentences(pst_mod.dfs_linearize(parsed), d, log)
    else:
        sentences = fol_to_sentences(parsed, d, log)
    return NldDoc(kind, sentences, None, d.digest)
