"""Tabulate score reports and draw them.

``render_report`` writes ``scores.tsv`` and ``scores.png`` into a directory:
one row per (series, task) and a grouped bar chart with tasks on the x axis
and one bar per series.  A series is usually one prompt variant, named after
the score file it came from.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import MetricError  # noqa: E402

__all__ = ["load_scores", "scores_tsv", "render_report"]

COLUMNS = ("series", "task", "metric", "value", "n", "n_unparsed")


def load_scores(paths: Iterable[Union[str, Path]]) -> list[dict]:
    """Read ScoreReport JSON files (one object, a list, or JSONL) into flat entries."""
    out = []
    for path in map(Path, paths):
        text = path.read_text(encoding="utf-8").strip()
        try:
            data = json.loads(text)
            items = data if isinstance(data, list) else [data]
        except ValueError:
            items = [json.loads(line) for line in text.splitlines() if line.strip()]
        for item in items:
            missing = [k for k in ("task", "metric", "value") if k not in item]
            if missing:
                raise MetricError(f"{path}: score entry lacks {', '.join(missing)}")
            out.append({"series": item.get("series", path.stem), **item})
    return out


def scores_tsv(entries: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    writer.writerow(COLUMNS)
    for e in entries:
        writer.writerow([e.get(c, "") if c != "value" else f"{float(e['value']):.2f}" for c in COLUMNS])
    return buf.getvalue()


def _bar_chart(entries: Sequence[dict], path: Path) -> None:
    tasks = list(dict.fromkeys(e["task"] for e in entries))
    series = list(dict.fromkeys(e["series"] for e in entries))
    values = {(e["series"], e["task"]): float(e["value"]) for e in entries}
    metrics = {e["task"]: e["metric"] for e in entries}
    width = 0.8 / max(len(series), 1)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(tasks) + 1), 3.6))
    for i, name in enumerate(series):
        xs = [t + (i - (len(series) - 1) / 2) * width for t in range(len(tasks))]
        ys = [values.get((name, task), 0.0) for task in tasks]
        bars = ax.bar(xs, ys, width=width, label=name)
        ax.bar_label(bars, fmt="%.1f", fontsize="x-small", padding=2)
    ax.set_xticks(range(len(tasks)))
    ax.set_xticklabels([f"{t}\n({metrics[t]})" for t in tasks])
    ax.set_ylim(0, 100)
    ax.set_ylabel("score")
    if len(series) > 1:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(entries: Sequence[dict], out_dir: Union[str, Path]) -> dict[str, Path]:
    if not entries:
        raise MetricError("no scores to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tsv = out / "scores.tsv"
    tsv.write_text(scores_tsv(entries), encoding="utf-8")
    png = out / "scores.png"
    _bar_chart(entries, png)
    return {"tsv": tsv, "figure": png}
