"""Task metrics: macro F1, corpus BLEU-4, exact match, entity F1.

All scores are percentages in [0, 100].  ``ScoreReport`` rounds to two
decimals; the metric functions return unrounded floats.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import EmptyMetricInput, LengthMismatch, MetricError
from .promptkit import NO_ANSWER, Task, extract_answer, task_labels

__all__ = [
    "macro_f1",
    "accuracy",
    "bleu",
    "exact_match",
    "entity_f1",
    "parse_entities",
    "metric_for",
    "ScoreReport",
    "score",
    "join_predictions",
]


def _check(preds: Sequence, golds: Sequence, allow_empty: bool = False) -> None:
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions for {len(golds)} references")
    if not golds and not allow_empty:
        raise EmptyMetricInput("nothing to score")


def _label(x: str) -> str:
    return x.strip().lower()


def macro_f1(preds: Sequence[str], golds: Sequence[str], label_set: Optional[Iterable[str]] = None) -> float:
    """Unweighted mean of per-label F1.

    Labels that occur in neither golds nor preds are left out of the mean.
    A prediction outside the label set (including the no-answer sentinel)
    is a miss for its gold label and a false positive for nothing.
    """
    _check(preds, golds)
    p = [_label(x) for x in preds]
    g = [_label(x) for x in golds]
    labels = sorted({_label(x) for x in label_set}) if label_set is not None else sorted((set(g) | set(p)) - {NO_ANSWER})
    if label_set is not None:
        stray = set(g) - set(labels)
        if stray:
            raise MetricError(f"gold labels outside the label set: {sorted(stray)}")
    scores = []
    for label in labels:
        tp = sum(1 for a, b in zip(p, g) if a == b == label)
        fp = sum(1 for a, b in zip(p, g) if a == label != b)
        fn = sum(1 for a, b in zip(p, g) if b == label != a)
        if tp + fp + fn == 0:
            continue
        scores.append(2 * tp / (2 * tp + fp + fn))
    return 100.0 * sum(scores) / len(scores) if scores else 0.0


def accuracy(preds: Sequence[str], golds: Sequence[str]) -> float:
    _check(preds, golds)
    return 100.0 * sum(_label(a) == _label(b) for a, b in zip(preds, golds)) / len(golds)


# BLEU

_BLEU_TOKEN = re.compile(r"\w+|[^\w\s]")


def _bleu_tokens(text: str) -> list[str]:
    return _BLEU_TOKEN.findall(text.lower())


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypotheses: Sequence[str], references: Sequence[str], max_n: int = 4) -> float:
    """Corpus BLEU with one reference per hypothesis.

    Modified n-gram precisions for n = 1..4 are pooled over the corpus; a
    zero precision for n >= 2 becomes 1 / (hyp n-grams + 1).  Brevity
    penalty is exp(min(0, 1 - r / c)).  Tokens are lowercased words and
    single punctuation marks.
    """
    _check(hypotheses, references)
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        h, r = _bleu_tokens(hyp), _bleu_tokens(ref)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_n + 1):
            hn, rn = _ngrams(h, n), _ngrams(r, n)
            matches[n - 1] += sum(min(c, rn[g]) for g, c in hn.items())
            totals[n - 1] += max(len(h) - n + 1, 0)
    if hyp_len == 0 or matches[0] == 0:
        return 0.0
    log_p = 0.0
    for n in range(max_n):
        m, t = matches[n], totals[n]
        log_p += math.log((m + 1) / (t + 1)) if m == 0 else math.log(m / t)
    bp = math.exp(min(0.0, 1.0 - ref_len / hyp_len))
    return min(100.0, 100.0 * bp * math.exp(log_p / max_n))


# exact match


def _em_norm(s: str) -> str:
    s = " ".join(s.lower().split())
    return s[:-1].rstrip() if s.endswith(";") else s


def exact_match(preds: Sequence[str], golds: Sequence[str]) -> float:
    _check(preds, golds)
    return 100.0 * sum(_em_norm(p) == _em_norm(g) for p, g in zip(preds, golds)) / len(golds)


# entities

_PAIR = re.compile(r"^\s*(.+?)\s*:\s*([A-Za-z]+)\s*$")


def parse_entities(text: str) -> Counter:
    """``"John Smith:PER; Paris:LOC"`` -> multiset of (word, TYPE) pairs."""
    out: Counter = Counter()
    if text == NO_ANSWER:
        return out
    for piece in text.split(";"):
        m = _PAIR.match(piece)
        if m:
            out[(m.group(1).lower(), m.group(2).upper())] += 1
    return out


def entity_f1(preds: Sequence[str], golds: Sequence[str]) -> float:
    """Micro F1 over (word, TYPE) pairs pooled across the corpus."""
    _check(preds, golds)
    tp = fp = fn = 0
    for p, g in zip(preds, golds):
        pe, ge = parse_entities(p), parse_entities(g)
        hit = sum((pe & ge).values())
        tp += hit
        fp += sum(pe.values()) - hit
        fn += sum(ge.values()) - hit
    if tp + fp + fn == 0:
        return 100.0
    return 100.0 * 2 * tp / (2 * tp + fp + fn)


# reports


def metric_for(task: Union[str, Task]) -> str:
    task = Task.parse(task)
    return {Task.WMT16: "BLEU", Task.SPIDER: "EM"}.get(task, "F1")


@dataclass(frozen=True)
class ScoreReport:
    task: Task
    metric_name: str
    value: float
    n: int
    n_unparsed: int

    def __post_init__(self):
        if not 0.0 <= self.value <= 100.0:
            raise MetricError(f"score {self.value} outside [0, 100]")
        if not 0 <= self.n_unparsed <= self.n:
            raise MetricError("n_unparsed must lie in [0, n]")

    def to_json(self) -> dict:
        return {
            "task": self.task.value,
            "metric": self.metric_name,
            "value": self.value,
            "n": self.n,
            "n_unparsed": self.n_unparsed,
        }


def score(task: Union[str, Task], preds: Sequence[str], golds: Sequence[str], metric: str = "auto") -> ScoreReport:
    """Score already extracted answers for a task."""
    task = Task.parse(task)
    name = metric_for(task) if metric == "auto" else metric.upper()
    if name == "BLEU":
        value = bleu([("" if p == NO_ANSWER else p) for p in preds], golds)
    elif name == "EM":
        value = exact_match(preds, golds)
    elif name == "F1":
        value = entity_f1(preds, golds) if task is Task.CONLL2003 else macro_f1(preds, golds, task_labels(task) or None)
    elif name == "ACC":
        value = accuracy(preds, golds)
    else:
        raise MetricError(f"unknown metric {metric!r}")
    unparsed = sum(p == NO_ANSWER for p in preds)
    return ScoreReport(task, name, round(value, 2), len(golds), unparsed)


def join_predictions(
    task: Union[str, Task],
    pred_rows: Iterable[Mapping],
    gold_rows: Iterable[Mapping],
) -> tuple[list[str], list[str]]:
    """Align prediction rows with gold rows on ``id``, in gold order.

    A row with ``pred`` is taken as an extracted answer; a row with only
    ``raw_output`` goes through ``extract_answer`` first.  Golds without a
    prediction, and rows whose ``error`` is set, score as no answer.
    """
    by_id = {}
    for row in pred_rows:
        if row.get("error"):
            by_id[str(row["id"])] = NO_ANSWER
        elif "pred" in row and row["pred"] is not None:
            by_id[str(row["id"])] = str(row["pred"])
        else:
            by_id[str(row["id"])] = extract_answer(task, row.get("raw_output") or "")
    preds, golds = [], []
    for row in gold_rows:
        golds.append(str(row["gold"]))
        preds.append(by_id.get(str(row["id"]), NO_ANSWER))
    return preds, golds
