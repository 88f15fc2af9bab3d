"""Gen-SR: the hybrid SFT set mixing G(text) and G(SR) instruction pairs.

For each task the records are sorted by id, shuffled with a seeded RNG, cut
to the requested total, and the first ``n_sr`` of the shuffled order become
G(SR) (prompt carries the raw SR block) while the rest become G(text).
Tasks are emitted in ``Task`` order, so a whole build is a pure function of
(records as a set, plan).

The RNG is a 64-bit linear congruential generator, portable by construction::

    state' = (6364136223846793005 * state + 1442695040888963407) mod 2**64

``below(n)`` draws ``((state' >> 32) * n) >> 32`` and the shuffle is the
usual Fisher-Yates walk from the last index down, ``j = below(i + 1)``.
Each task gets a fresh generator seeded with the plan seed.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, MutableSequence, Optional, Sequence, TypeVar, Union

from .errors import DuplicateRecord, InsufficientRecords, MissingSr
from .promptkit import PromptSpec, Strategy, Task, TaskRecord, TemplateStore, Variant, render_completion, render_prompt

__all__ = [
    "Group",
    "GenSrRecord",
    "MixPlan",
    "Lcg64",
    "shuffle",
    "split_counts",
    "build_mixture",
    "dumps_jsonl",
    "ratio_sweep",
    "DEFAULT_SWEEP",
]

T = TypeVar("T")

# 100% text, the FOL-favoured 30/70 pair, the default 50/50 and 100% SR
DEFAULT_SWEEP = (0.0, 0.3, 0.5, 0.7, 1.0)


class Group(enum.Enum):
    G_TEXT = "G_TEXT"
    G_SR = "G_SR"


class Lcg64:
    A = 6364136223846793005
    C = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        if not 0 <= seed <= self.MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.A * self.state + self.C) & self.MASK
        return self.state

    def below(self, n: int) -> int:
        return ((self.next_u64() >> 32) * n) >> 32


def shuffle(items: MutableSequence[T], rng: Lcg64) -> MutableSequence[T]:
    for i in range(len(items) - 1, 0, -1):
        j = rng.below(i + 1)
        items[i], items[j] = items[j], items[i]
    return items


def split_counts(total: int, ratio_sr: Union[float, Fraction, str]) -> tuple[int, int]:
    """``(n_sr, n_text)`` with ``n_sr = round_half_up(ratio_sr * total)``.

    The ratio goes through its decimal string so 0.35 means 35/100 exactly.

    >>> split_counts(7, 0.5)
    (4, 3)
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    r = ratio_sr if isinstance(ratio_sr, Fraction) else Fraction(str(ratio_sr))
    if not 0 <= r <= 1:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio_sr}")
    n_sr = int((r * total + Fraction(1, 2)) // 1)
    return n_sr, total - n_sr


@dataclass(frozen=True)
class MixPlan:
    ratio_sr: float = 0.5
    seed: int = 42
    # task -> records to keep; tasks not listed keep all their records
    per_task_counts: Mapping[Task, int] = field(default_factory=dict)

    def __post_init__(self):
        split_counts(0, self.ratio_sr)
        Lcg64(self.seed)
        counts = {Task.parse(k): int(v) for k, v in self.per_task_counts.items()}
        if any(v < 0 for v in counts.values()):
            raise ValueError("per-task counts must be non-negative")
        object.__setattr__(self, "per_task_counts", counts)


@dataclass(frozen=True)
class GenSrRecord:
    id: str
    prompt: str
    completion: str
    group: Group
    task: Task
    sr_kind: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "prompt": self.prompt,
            "completion": self.completion,
            "group": self.group.value,
            "task": self.task.value,
            "sr_kind": self.sr_kind,
        }


def _by_task(records: Iterable[TaskRecord]) -> dict[Task, list[TaskRecord]]:
    out: dict[Task, list[TaskRecord]] = {}
    for rec in records:
        out.setdefault(rec.task, []).append(rec)
    for task, recs in out.items():
        recs.sort(key=lambda r: r.id)
        for a, b in zip(recs, recs[1:]):
            if a.id == b.id:
                raise DuplicateRecord(f"{task.value} record id {a.id!r} appears twice")
    return out


def build_mixture(
    records: Iterable[TaskRecord],
    plan: MixPlan,
    templates: Optional[TemplateStore] = None,
) -> list[GenSrRecord]:
    groups = _by_task(records)
    for task in plan.per_task_counts:
        if task not in groups and plan.per_task_counts[task] > 0:
            raise InsufficientRecords(f"plan asks for {task.value} records but none were given")
    out: list[GenSrRecord] = []
    for task in Task:
        recs = groups.get(task)
        if not recs:
            continue
        total = plan.per_task_counts.get(task, len(recs))
        if total > len(recs):
            raise InsufficientRecords(f"{task.value}: plan asks for {total} records, only {len(recs)} available")
        chosen = shuffle(list(recs), Lcg64(plan.seed))[:total]
        n_sr, _ = split_counts(total, plan.ratio_sr)
        for i, rec in enumerate(chosen):
            completion = render_completion(task, rec.gold, templates)
            if i < n_sr:
                if not rec.sr_text or not rec.sr_kind:
                    raise MissingSr(f"record {rec.id} was drawn into G_SR but has no SR attached")
                spec = PromptSpec(task, Variant.SR, Strategy.PLAIN, rec.sr_kind)
                group, kind = Group.G_SR, rec.sr_kind
            else:
                spec = PromptSpec(task, Variant.BASE, Strategy.PLAIN)
                group, kind = Group.G_TEXT, None
            out.append(GenSrRecord(rec.id, render_prompt(spec, rec, templates), completion, group, task, kind))
    return out


def dumps_jsonl(rows: Sequence[GenSrRecord]) -> str:
    return "".join(json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in rows)


def ratio_sweep(
    records: Sequence[TaskRecord],
    ratios: Iterable[float] = DEFAULT_SWEEP,
    seed: int = 42,
    per_task_counts: Optional[Mapping[Task, int]] = None,
    templates: Optional[TemplateStore] = None,
) -> dict[float, list[GenSrRecord]]:
    """One mixture per ratio, all drawn with the same seed.

    Because the shuffle depends only on the seed, the record sample is shared
    across ratios and only the G(SR)/G(text) boundary moves.
    """
    return {
        r: build_mixture(records, MixPlan(r, seed, per_task_counts or {}), templates)
        for r in ratios
    }
