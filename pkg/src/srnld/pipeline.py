"""SR text to prompts, end to end.

Pair tasks (PAWS, SNLI, WiC) carry one SR per sentence; such ``sr_text``
holds the parts separated by a blank line and the description keeps the
same separation.
"""

from __future__ import annotations

import json
import re
from dataclasses import replace
from importlib import resources
from typing import Callable, Iterable, Optional

from .fol import to_json as fol_to_json
from .nld import RelationDictionary, bundled_dictionary, parse_sr, to_nld
from .promptkit import PromptSpec, Strategy, TaskRecord, TemplateStore, Variant, read_records, render_prompt
from .refine import RefinerConfig, refine_doc

__all__ = ["sr_parts", "describe_sr", "attach_nld", "canonical_sr", "golden_run", "GOLDEN_GRID", "sample_records", "write_golden"]

_BLANK = re.compile(r"\n[ \t]*\n")

GOLDEN_GRID = tuple(
    (variant, strategy)
    for variant in (Variant.BASE, Variant.SR, Variant.SR_NLD)
    for strategy in (Strategy.COT, Strategy.ONE_SHOT)
)


def sr_parts(sr_text: str) -> list[str]:
    return [p.strip() for p in _BLANK.split(sr_text.strip()) if p.strip()]


def describe_sr(
    sr_text: str,
    kind: str,
    dictionary: Optional[RelationDictionary] = None,
    config: RefinerConfig = RefinerConfig(),
    generator: Optional[Callable[[str], str]] = None,
) -> str:
    """Parse, map and refine every part of ``sr_text``; parts stay blank-line separated."""
    d = dictionary or bundled_dictionary(kind)
    texts = []
    for part in sr_parts(sr_text):
        doc = refine_doc(to_nld(part, kind, d), config, generator)
        texts.append(doc.refined)
    return "\n\n".join(texts)


def canonical_sr(sr_text: str, kind: str) -> list:
    """Canonical JSON for each SR part."""
    out = []
    for part in sr_parts(sr_text):
        obj = parse_sr(part, kind)
        out.append(fol_to_json(obj) if kind.upper() == "FOL" else obj.to_json())
    return out


def attach_nld(record: TaskRecord, dictionary: Optional[RelationDictionary] = None, **refine) -> TaskRecord:
    if not record.sr_text or not record.sr_kind:
        return record
    return replace(record, nld_text=describe_sr(record.sr_text, record.sr_kind, dictionary, **refine))


def sample_records(name: str = "mini_corpus") -> list[TaskRecord]:
    """Records from a JSONL file bundled under ``data/samples``."""
    text = resources.files("srnld").joinpath("data", "samples", f"{name}.jsonl").read_text(encoding="utf-8")
    return read_records(text.splitlines())


def write_golden(out_dir, records: Optional[Iterable[TaskRecord]] = None) -> list:
    """Regenerate the golden files; only for deliberate output changes."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = golden_run(sample_records() if records is None else records)
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
    return sorted(out / name for name in files)


def golden_run(records: Iterable[TaskRecord], templates: Optional[TemplateStore] = None) -> dict[str, str]:
    """Run the offline pipeline and return the three golden artefacts as text.

    ``parsed.jsonl`` holds canonical SR JSON, ``nld.jsonl`` the per-record
    descriptions and ``prompts.jsonl`` one row per record and grid cell.
    """
    parsed, nld, prompts = [], [], []
    for rec in records:
        parsed.append({"id": rec.id, "sr_kind": rec.sr_kind, "parsed": canonical_sr(rec.sr_text, rec.sr_kind)})
        rec = attach_nld(rec)
        nld.append({"id": rec.id, "sr_kind": rec.sr_kind, "nld_text": rec.nld_text})
        for variant, strategy in GOLDEN_GRID:
            spec = PromptSpec(rec.task, variant, strategy, None if variant is Variant.BASE else rec.sr_kind)
            prompts.append(
                {
                    "id": rec.id,
                    "prompt": render_prompt(spec, rec, templates),
                    "variant": variant.value,
                    "strategy": strategy.value,
                    "sr_kind": spec.sr_kind,
                }
            )

    def dump(rows):
        return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows)

    return {"parsed.jsonl": dump(parsed), "nld.jsonl": dump(nld), "prompts.jsonl": dump(prompts)}
