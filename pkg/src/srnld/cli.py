"""Command line entry point: ``srnld <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 network
error.  Diagnostics go to stderr; data goes to stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import amr, fol, pst
from .errors import EndpointError, GeneratorFailure, SrnldError
from .evalrun import RunManifest, read_jsonl, run_batch, write_jsonl
from .gensr import MixPlan, build_mixture, dumps_jsonl
from .metrics import join_predictions, score
from .nld import KINDS, bundled_dictionary, load_dictionary, to_nld
from .pipeline import attach_nld
from .promptkit import PromptSpec, Variant, load_templates, read_records, render_prompt
from .refine import RefinerConfig, refine_doc

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NETWORK = 0, 1, 2, 3

log = logging.getLogger("srnld")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _read(path: Optional[str]) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n"


# subcommands


def cmd_parse(args) -> int:
    text = _read(args.input)
    kind = args.kind.upper()
    if kind == "AMR":
        obj = amr.parse_penman(text).to_json()
    elif kind == "PST":
        obj = pst.parse_brackets(text).to_json()
    else:
        obj = fol.to_json(fol.parse_fol(text))
    _emit(_dumps(obj), args.out)
    return EXIT_OK


def _refiner(args) -> RefinerConfig:
    if args.refine == "endpoint":
        if not args.endpoint_url or not args.model:
            raise UsageError("--refine endpoint needs --endpoint-url and --model")
        return RefinerConfig(
            mode="endpoint",
            votes=args.votes,
            endpoint_url=args.endpoint_url,
            model_name=args.model,
            temperature=args.temperature,
            timeout=args.timeout,
            max_retries=args.max_retries,
        )
    return RefinerConfig(mode="offline", votes=args.votes)


def cmd_nld(args) -> int:
    kind = args.kind.upper()
    d = load_dictionary(args.dict) if args.dict else bundled_dictionary(kind)
    doc = to_nld(_read(args.input), kind, d)
    if args.refine != "none":
        doc = refine_doc(doc, _refiner(args))
    _emit(_dumps(doc.to_json()), args.out)
    return EXIT_OK


def cmd_prompt(args) -> int:
    templates = load_templates(args.templates) if args.templates else None
    base = args.variant == Variant.BASE.value
    rows = []
    for rec in read_records(_read(args.input).splitlines()):
        # --sr-kind fills records that lack one; otherwise each record's own kind is used
        kind = None if base else (rec.sr_kind or args.sr_kind)
        if not base and kind is None:
            raise UsageError(f"record {rec.id} has no sr_kind; pass --sr-kind")
        spec = PromptSpec(args.task, args.variant, args.strategy, kind)
        if kind and rec.sr_kind is None:
            rec = replace(rec, sr_kind=kind)
        if spec.variant is Variant.SR_NLD and rec.nld_text is None and rec.sr_text:
            rec = attach_nld(rec)
        rows.append(
            {
                "id": rec.id,
                "prompt": render_prompt(spec, rec, templates),
                "variant": spec.variant.value,
                "strategy": spec.strategy.value,
                "sr_kind": spec.sr_kind,
            }
        )
    _emit(write_jsonl(rows), args.out)
    return EXIT_OK


def _counts(pairs: Sequence[str]) -> dict:
    out = {}
    for pair in pairs:
        task, sep, n = pair.partition("=")
        if not sep or not n.isdigit():
            raise UsageError(f"--count expects TASK=N, got {pair!r}")
        out[task] = int(n)
    return out


def cmd_gensr(args) -> int:
    records = read_records(_read(args.input).splitlines())
    templates = load_templates(args.templates) if args.templates else None
    plan = MixPlan(args.ratio, args.seed, _counts(args.count))
    _emit(dumps_jsonl(build_mixture(records, plan, templates)), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    manifest = RunManifest.load(args.manifest)
    source = args.input or (str(manifest.prompts) if manifest.prompts else None)
    rows = [json.loads(line) for line in _read(source).splitlines() if line.strip()]
    out_rows, summary = run_batch(rows, manifest)
    out = args.out or (str(manifest.out) if manifest.out else None)
    _emit(write_jsonl(out_rows), out)
    if args.summary:
        Path(args.summary).write_text(_dumps(summary.to_json()), encoding="utf-8")
    print(
        f"run: {summary.total} prompts, {summary.hits} cached, {summary.requests} requested, "
        f"{summary.failures} failed",
        file=sys.stderr,
    )
    return EXIT_NETWORK if summary.failures else EXIT_OK


def cmd_score(args) -> int:
    preds = read_jsonl(args.pred)
    golds = read_jsonl(args.gold)
    p, g = join_predictions(args.task, preds, golds)
    report = score(args.task, p, g, args.metric)
    _emit(_dumps(report.to_json()), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import load_scores, render_report, scores_tsv

    entries = load_scores(args.scores)
    paths = render_report(entries, args.out_dir)
    sys.stdout.write(scores_tsv(entries))
    print(f"report: wrote {paths['tsv']} and {paths['figure']}", file=sys.stderr)
    return EXIT_OK


# wiring


def _io(p, inp=True):
    if inp:
        p.add_argument("--in", dest="input", metavar="FILE", help="input file (default: stdin)")
    p.add_argument("--out", metavar="FILE", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="srnld", description="Structured representations to natural-language descriptions.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    kinds = [k.lower() for k in KINDS]

    p = sub.add_parser("parse", help="parse one SR and print canonical JSON")
    p.add_argument("--kind", required=True, type=str.lower, choices=kinds)
    _io(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("nld", help="map one SR to an NLD document")
    p.add_argument("--kind", required=True, type=str.lower, choices=kinds)
    p.add_argument("--dict", metavar="TSV", help="relation dictionary (default: bundled)")
    p.add_argument("--refine", choices=("none", "offline", "endpoint"), default="none")
    p.add_argument("--votes", type=int, default=3)
    p.add_argument("--endpoint-url")
    p.add_argument("--model")
    p.add_argument("--temperature", type=float, default=0.7)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-retries", type=int, default=3)
    _io(p)
    p.set_defaults(func=cmd_nld)

    p = sub.add_parser("prompt", help="render prompts for task records (JSONL in, JSONL out)")
    p.add_argument("--task", required=True)
    p.add_argument("--variant", required=True, type=str.upper, choices=("BASE", "SR", "SR_NLD"))
    p.add_argument("--strategy", required=True, type=str.upper, choices=("COT", "ONE_SHOT", "PLAIN"))
    p.add_argument("--sr-kind", type=str.upper, choices=KINDS)
    p.add_argument("--templates", metavar="DIR")
    _io(p)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("gensr", help="build a Gen-SR mixture from task records")
    p.add_argument("--ratio", required=True, type=float, help="share of G(SR) records per task")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--count", action="append", default=[], metavar="TASK=N", help="records to keep for a task")
    p.add_argument("--templates", metavar="DIR")
    _io(p)
    p.set_defaults(func=cmd_gensr)

    p = sub.add_parser("run", help="run a prompt batch against an endpoint with caching")
    p.add_argument("--manifest", required=True)
    p.add_argument("--summary", metavar="FILE", help="write the run summary JSON here")
    _io(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="score predictions against golds")
    p.add_argument("--task", required=True)
    p.add_argument("--metric", default="auto", type=str.upper, choices=("AUTO", "F1", "BLEU", "EM", "ACC"))
    p.add_argument("--pred", required=True, metavar="JSONL")
    p.add_argument("--gold", required=True, metavar="JSONL")
    _io(p, inp=False)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="tabulate score files and draw a bar chart")
    p.add_argument("--scores", nargs="+", required=True, metavar="JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "metric", None) == "AUTO":
        args.metric = "auto"
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"srnld: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EndpointError, GeneratorFailure) as exc:
        print(f"srnld: network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except (SrnldError, ValueError, OSError, KeyError) as exc:
        print(f"srnld: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
