"""Prompt rendering for the ten downstream tasks and answer extraction.

A prompt is assembled from a per-task JSON template merged over
``data/templates/default.json``.  The layout has named slots::

    {instruction} {exemplar} {input} {sr_block} {nld_block} {question} {cot_suffix}

BASE fills only instruction, input and question.  SR adds a block headed by
``sr_header`` (``"{kind}:"`` by default) holding the raw SR verbatim; SR_NLD
adds a block headed by ``nld_header`` holding the description.  ONE_SHOT
renders the task exemplar with the same variant and SR kind before the live
instance; COT appends the reasoning directive.  PLAIN adds neither and is
what the SFT builder uses.

Slot values are substituted once and never re-scanned, so braces inside an
SR or SQL query are safe.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import MissingField, PromptError, UnknownTask

__all__ = [
    "Task",
    "Variant",
    "Strategy",
    "PromptSpec",
    "TaskRecord",
    "TemplateStore",
    "load_templates",
    "render_prompt",
    "render_completion",
    "extract_answer",
    "task_labels",
    "NO_ANSWER",
    "SR_KINDS",
]

SR_KINDS = ("AMR", "PST", "FOL")
NO_ANSWER = "<no-answer>"


class Task(enum.Enum):
    PAWS = "PAWS"
    SNLI = "SNLI"
    WMT16 = "WMT16"
    CONLL2003 = "CoNLL2003"
    LOGIC = "LOGIC"
    SST2 = "SST2"
    PUBMED45 = "PUBMED45"
    WIC = "WIC"
    SPIDER = "SPIDER"
    AGNEWS = "AGNEWS"

    @classmethod
    def parse(cls, name: Union[str, "Task"]) -> "Task":
        if isinstance(name, Task):
            return name
        key = re.sub(r"[^a-z0-9]", "", str(name).lower())
        for task in cls:
            if task.value.lower() == key:
                return task
        raise UnknownTask(f"unknown task {name!r}")


class Variant(enum.Enum):
    BASE = "BASE"
    SR = "SR"
    SR_NLD = "SR_NLD"


class Strategy(enum.Enum):
    COT = "COT"
    ONE_SHOT = "ONE_SHOT"
    PLAIN = "PLAIN"


def _enum(cls, value):
    if isinstance(value, cls):
        return value
    try:
        return cls(str(value).upper().replace("-", "_"))
    except ValueError:
        raise PromptError(f"unknown {cls.__name__.lower()} {value!r}") from None


@dataclass(frozen=True)
class PromptSpec:
    task: Task
    variant: Variant = Variant.BASE
    strategy: Strategy = Strategy.COT
    sr_kind: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "task", Task.parse(self.task))
        object.__setattr__(self, "variant", _enum(Variant, self.variant))
        object.__setattr__(self, "strategy", _enum(Strategy, self.strategy))
        if self.sr_kind is not None:
            object.__setattr__(self, "sr_kind", self.sr_kind.upper())
            if self.sr_kind not in SR_KINDS:
                raise PromptError(f"unknown SR kind {self.sr_kind!r}")
        if self.variant is not Variant.BASE and self.sr_kind is None:
            raise PromptError(f"variant {self.variant.value} needs an sr_kind")


@dataclass(frozen=True)
class TaskRecord:
    id: str
    task: Task
    input_text: Union[str, tuple[str, ...]]
    gold: str = ""
    sr_text: Optional[str] = None
    nld_text: Optional[str] = None
    sr_kind: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "task", Task.parse(self.task))
        if isinstance(self.input_text, list):
            object.__setattr__(self, "input_text", tuple(self.input_text))
        if self.sr_kind is not None:
            object.__setattr__(self, "sr_kind", self.sr_kind.upper())

    def inputs(self) -> tuple[str, ...]:
        return (self.input_text,) if isinstance(self.input_text, str) else self.input_text

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "task": self.task.value,
            "input_text": self.input_text if isinstance(self.input_text, str) else list(self.input_text),
            "sr_kind": self.sr_kind,
            "sr_text": self.sr_text,
            "gold": self.gold,
        }
        if self.nld_text is not None:
            out["nld_text"] = self.nld_text
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "TaskRecord":
        for key in ("id", "task", "input_text"):
            if key not in data:
                raise MissingField(f"record is missing {key!r}")
        return cls(
            id=str(data["id"]),
            task=data["task"],
            input_text=data["input_text"],
            gold=data.get("gold", ""),
            sr_text=data.get("sr_text"),
            nld_text=data.get("nld_text"),
            sr_kind=data.get("sr_kind"),
        )


# templates

_SLOT = re.compile(r"\{(\w+)\}")


def _fill(template: str, slots: Mapping[str, str]) -> str:
    def sub(m: re.Match) -> str:
        if m.group(1) not in slots:
            raise PromptError(f"template uses unknown slot {{{m.group(1)}}}")
        return slots[m.group(1)]

    return _SLOT.sub(sub, template)


def _slots(template: str) -> set[str]:
    return set(_SLOT.findall(template))


_REQUIRED_KEYS = ("layout", "exemplar_layout", "instruction", "input", "question", "cot_suffix", "sr_header", "nld_header", "completion")


@dataclass(frozen=True)
class TemplateStore:
    tasks: Mapping[Task, Mapping]
    labels: Mapping[Task, tuple[str, ...]] = field(default_factory=dict)

    def get(self, task: Task) -> Mapping:
        try:
            return self.tasks[task]
        except KeyError:
            raise UnknownTask(f"no template for task {task.value}") from None


def _read_json(path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def load_templates(directory: Optional[Union[str, Path]] = None) -> TemplateStore:
    """Load ``default.json``, per-task overrides and ``labels.json`` from a directory.

    Without a directory the bundled templates are used.
    """
    root = Path(directory) if directory else resources.files("srnld").joinpath("data", "templates")
    default = _read_json(root.joinpath("default.json"))
    labels_raw = _read_json(root.joinpath("labels.json"))
    tasks = {}
    for task in Task:
        path = root.joinpath(f"{task.value.lower()}.json")
        if not path.is_file():
            continue
        merged = {**default, **_read_json(path)}
        missing = [k for k in _REQUIRED_KEYS if k not in merged]
        if missing:
            raise PromptError(f"template for {task.value} lacks {', '.join(missing)}")
        tasks[task] = merged
    labels = {Task.parse(k): tuple(v) for k, v in labels_raw.items()}
    return TemplateStore(tasks, labels)


_BUNDLED: Optional[TemplateStore] = None


def _bundled() -> TemplateStore:
    global _BUNDLED
    if _BUNDLED is None:
        _BUNDLED = load_templates()
    return _BUNDLED


def task_labels(task: Union[str, Task], templates: Optional[TemplateStore] = None) -> tuple[str, ...]:
    """The closed label set of a classification task; empty for generation tasks."""
    return (templates or _bundled()).labels.get(Task.parse(task), ())


# rendering


def _render_input(tpl: Mapping, task: Task, inputs: Sequence[str]) -> str:
    wanted = _slots(tpl["input"])
    if len(wanted) != len(inputs):
        raise MissingField(f"{task.value} input needs {len(wanted)} text field(s), got {len(inputs)}")
    return _fill(tpl["input"], {str(i): text for i, text in enumerate(inputs)})


def _block(header_tpl: str, kind: str, body: str) -> str:
    return f"{_fill(header_tpl, {'kind': kind})}\n{body.strip()}\n"


def _instance_slots(spec: PromptSpec, tpl: Mapping, inputs, sr_text, nld_text, what: str) -> dict:
    slots = {
        "instruction": tpl["instruction"],
        "input": _render_input(tpl, spec.task, inputs),
        "question": tpl["question"],
        "sr_block": "",
        "nld_block": "",
    }
    if spec.variant is Variant.SR:
        if not sr_text:
            raise MissingField(f"{what} has no sr_text for variant SR")
        slots["sr_block"] = _block(tpl["sr_header"], spec.sr_kind, sr_text)
    elif spec.variant is Variant.SR_NLD:
        if not nld_text:
            raise MissingField(f"{what} has no nld_text for variant SR_NLD")
        slots["nld_block"] = _block(tpl["nld_header"], spec.sr_kind, nld_text)
    return slots


def _exemplar(spec: PromptSpec, tpl: Mapping) -> str:
    ex = tpl.get("exemplar")
    if not ex:
        raise PromptError(f"task {spec.task.value} has no exemplar for ONE_SHOT")
    inputs = (ex["input_text"],) if isinstance(ex["input_text"], str) else tuple(ex["input_text"])
    kind = spec.sr_kind
    sr = ex.get("sr", {}).get(kind) if kind else None
    nld = ex.get("nld", {}).get(kind) if kind else None
    slots = _instance_slots(spec, tpl, inputs, sr, nld, f"{spec.task.value} exemplar")
    slots["answer"] = _fill(tpl["completion"], {"gold": ex["gold"]})
    return _fill(tpl["exemplar_layout"], slots)


def render_prompt(spec: PromptSpec, record: TaskRecord, templates: Optional[TemplateStore] = None) -> str:
    """Render one prompt.  Identical inputs give byte-identical output."""
    store = templates or _bundled()
    if record.task is not spec.task:
        raise PromptError(f"record {record.id} is a {record.task.value} record, spec is {spec.task.value}")
    tpl = store.get(spec.task)
    slots = _instance_slots(spec, tpl, record.inputs(), record.sr_text, record.nld_text, f"record {record.id}")
    slots["exemplar"] = _exemplar(spec, tpl) if spec.strategy is Strategy.ONE_SHOT else ""
    slots["cot_suffix"] = tpl["cot_suffix"] if spec.strategy is Strategy.COT else ""
    return _fill(tpl["layout"], slots)


def render_completion(task: Union[str, Task], gold: str, templates: Optional[TemplateStore] = None) -> str:
    tpl = (templates or _bundled()).get(Task.parse(task))
    return _fill(tpl["completion"], {"gold": gold})


# answer extraction

_FENCE = re.compile(r"```[ \t]*(?:sql|SQL)?[ \t]*\n?(.*?)```", re.S)
_SELECT = re.compile(r"\b(SELECT\b.*?)(?:;|\n\s*\n|$)", re.S | re.I)
_ENTITY_TYPES = ("PER", "LOC", "ORG", "MISC")
_ENTITY = re.compile(r"^\s*(.+?)\s*:\s*(PER|LOC|ORG|MISC)\s*$", re.I)
_NONE = re.compile(r"\bno entities\b|\bnone\b", re.I)


def _last_label(labels: Sequence[str], text: str) -> str:
    best_pos, best = -1, NO_ANSWER
    low = text.lower()
    for label in labels:
        pattern = re.compile(r"(?<!\w)" + re.escape(label.lower()) + r"(?!\w)")
        for m in pattern.finditer(low):
            # later start wins; at equal start the longer label wins
            if m.start() > best_pos or (m.start() == best_pos and len(label) > len(best)):
                best_pos, best = m.start(), label.lower()
    return best


def _entities(text: str) -> str:
    pairs = []
    for piece in re.split(r"[;\n,]", text):
        m = _ENTITY.match(piece.strip(" .-*"))
        if m:
            word = m.group(1).strip("\"'` ")
            pairs.append(f"{word}:{m.group(2).upper()}")
    if pairs:
        return "; ".join(pairs)
    return "" if _NONE.search(text) else NO_ANSWER


def extract_answer(task: Union[str, Task], raw_output: str, templates: Optional[TemplateStore] = None) -> str:
    """Pull the task answer out of free model text; never raises.

    Returns ``NO_ANSWER`` when nothing usable is found.
    """
    try:
        task = Task.parse(task)
    except UnknownTask:
        return NO_ANSWER
    text = raw_output if isinstance(raw_output, str) else ""
    if task is Task.WMT16:
        idx = text.lower().rfind("translation:")
        out = text[idx + len("translation:"):] if idx >= 0 else text
        out = out.strip()
        return out if out else NO_ANSWER
    if task is Task.SPIDER:
        m = _FENCE.search(text)
        if m and m.group(1).strip():
            return m.group(1).strip()
        m = _SELECT.search(text)
        return m.group(1).strip() if m else NO_ANSWER
    if task is Task.CONLL2003:
        return _entities(text)
    labels = task_labels(task, templates)
    return _last_label(labels, text) if labels else NO_ANSWER


def read_records(lines: Iterable[str]) -> list[TaskRecord]:
    out = []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except ValueError as exc:
            raise MissingField(f"line {n}: not JSON ({exc})") from exc
        out.append(TaskRecord.from_json(data))
    return out
