import json
from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from srnld.errors import MissingField, PromptError, UnknownTask
from srnld.nld import bundled_dictionary, parse_sr
from srnld.pipeline import describe_sr, sr_parts
from srnld.promptkit import (
    NO_ANSWER,
    PromptSpec,
    Strategy,
    Task,
    TaskRecord,
    Variant,
    extract_answer,
    load_templates,
    render_completion,
    render_prompt,
    task_labels,
)

SNLI = TaskRecord("s1", "SNLI", ["A man sleeps.", "A person rests."], "entailment")
PAWS = TaskRecord(
    "p1",
    Task.PAWS,
    ("A dog barks.", "A dog is barking."),
    "yes",
    sr_text="(b / bark-01 :ARG0 (d / dog))\n\n(b / bark-01 :ARG0 (d / dog))",
    nld_text="The agent of bark-01 is dog.\n\nThe agent of bark-01 is dog.",
    sr_kind="AMR",
)
STORE = load_templates()
TEMPLATE_DIR = resources.files("srnld").joinpath("data", "templates")


def test_snli_base_cot():
    p = render_prompt(PromptSpec(Task.SNLI, Variant.BASE, Strategy.COT), SNLI)
    assert "A man sleeps." in p and "A person rests." in p
    assert STORE.get(Task.SNLI)["cot_suffix"] in p
    assert "AMR" not in p and "Example:" not in p


def test_paws_sr_one_shot():
    p = render_prompt(PromptSpec("PAWS", "SR", "ONE_SHOT", "AMR"), PAWS)
    ex = p.index("Example:")
    live = p.index("Sentence 1: A dog barks.")
    assert ex < live
    assert f"AMR:\n{PAWS.sr_text}\n" in p[live:]
    assert STORE.get(Task.PAWS)["cot_suffix"] not in p
    assert "Answer: yes" in p[ex:live]


def test_missing_fields():
    bare = TaskRecord("p2", "PAWS", ["a", "b"], "no", sr_text="(d / dog)", sr_kind="AMR")
    with pytest.raises(MissingField):
        render_prompt(PromptSpec("PAWS", "SR_NLD", "COT", "AMR"), bare)
    with pytest.raises(MissingField):
        render_prompt(PromptSpec("SNLI", "SR", "COT", "AMR"), SNLI)
    with pytest.raises(MissingField):
        render_prompt(PromptSpec("PAWS", "BASE", "COT"), TaskRecord("p3", "PAWS", "only one", "no"))


def test_spec_validation():
    with pytest.raises(PromptError):
        PromptSpec("PAWS", "SR", "COT")
    with pytest.raises(UnknownTask):
        PromptSpec("IMDB")
    with pytest.raises(PromptError):
        PromptSpec("PAWS", "FANCY")
    with pytest.raises(PromptError):
        PromptSpec("PAWS", "SR", "COT", "UCCA")


def test_task_names_are_forgiving():
    assert Task.parse("SST-2") is Task.SST2
    assert Task.parse("conll2003") is Task.CONLL2003
    assert Task.parse("WiC") is Task.WIC


def test_every_task_has_template_and_exemplar_srs_parse():
    for task in Task:
        tpl = STORE.get(task)
        ex = tpl["exemplar"]
        for kind in ("AMR", "PST", "FOL"):
            for part in sr_parts(ex["sr"][kind]):
                parse_sr(part, kind)
            assert ex["nld"][kind]
        inputs = ("t",) * len(ex["input_text"]) if isinstance(ex["input_text"], list) else "t"
        rec = TaskRecord("x", task, inputs, sr_text="p(x)", nld_text="x is p.")
        for variant in Variant:
            for strategy in Strategy:
                kind = None if variant is Variant.BASE else "FOL"
                assert render_prompt(PromptSpec(task, variant, strategy, kind), rec)


def test_exemplar_nld_matches_pipeline():
    ex = STORE.get(Task.SST2)["exemplar"]
    for kind in ("AMR", "PST", "FOL"):
        assert ex["nld"][kind] == describe_sr(ex["sr"][kind], kind, bundled_dictionary(kind))


def test_braces_in_values_are_literal():
    rec = TaskRecord("q", "SPIDER", "Find {input} rows", "SELECT 1")
    p = render_prompt(PromptSpec("SPIDER", "BASE", "PLAIN"), rec)
    assert "Question: Find {input} rows" in p


def test_custom_template_dir(tmp_path):
    for name in ("default.json", "labels.json"):
        (tmp_path / name).write_text(json.dumps(json.loads((TEMPLATE_DIR / name).read_text())), encoding="utf-8")
    tpl = json.loads((TEMPLATE_DIR / "paws.json").read_text())
    tpl["sr_header"] = "Graph ({kind}):"
    (tmp_path / "paws.json").write_text(json.dumps(tpl), encoding="utf-8")
    store = load_templates(tmp_path)
    p = render_prompt(PromptSpec("PAWS", "SR", "COT", "AMR"), PAWS, store)
    assert "Graph (AMR):\n" in p
    with pytest.raises(UnknownTask):
        render_prompt(PromptSpec("SNLI"), SNLI, store)


@settings(max_examples=100, deadline=None)
@given(st.text(min_size=1, max_size=40), st.text(min_size=1, max_size=40), st.sampled_from(["AMR", "PST", "FOL"]))
def test_variant_monotonicity_and_determinism(s1, s2, kind):
    rec = TaskRecord("h", "PAWS", (s1, s2), "yes", sr_text="SR TEXT", nld_text="NLD TEXT", sr_kind=kind)
    tpl = STORE.get(Task.PAWS)
    base = render_prompt(PromptSpec("PAWS", "BASE", "COT"), rec)
    for variant in ("SR", "SR_NLD"):
        p = render_prompt(PromptSpec("PAWS", variant, "COT", kind), rec)
        assert tpl["instruction"] in p and f"Sentence 1: {s1}\nSentence 2: {s2}" in p
        assert p == render_prompt(PromptSpec("PAWS", variant, "COT", kind), rec)
    assert tpl["instruction"] in base and f"Sentence 1: {s1}\nSentence 2: {s2}" in base


def test_completion():
    assert render_completion("PAWS", "yes") == "Answer: yes"
    assert render_completion("WMT16", "Hi.") == "Translation: Hi."


def test_record_json_round_trip():
    assert TaskRecord.from_json(PAWS.to_json()) == PAWS
    with pytest.raises(MissingField):
        TaskRecord.from_json({"id": "x"})


# extraction


def test_extract_last_label():
    assert extract_answer("PAWS", "Sentence 1 says no... therefore the answer is Yes.") == "yes"
    assert extract_answer(Task.SNLI, "Not a contradiction, it is entailment") == "entailment"
    assert extract_answer("AGNEWS", "Topic: Sci/Tech") == "sci/tech"
    assert extract_answer("LOGIC", "This is an example of ad populum reasoning.") == "ad populum"


def test_extract_no_answer():
    assert extract_answer("SST2", "I cannot tell.") == NO_ANSWER
    assert extract_answer("SST2", "This is not negativeish") == NO_ANSWER
    assert extract_answer("NOPE", "yes") == NO_ANSWER


def test_extract_spider():
    assert extract_answer("SPIDER", "```sql\nSELECT name FROM t\n```") == "SELECT name FROM t"
    assert extract_answer("SPIDER", "The query is SELECT a FROM b; done") == "SELECT a FROM b"
    assert extract_answer("SPIDER", "no idea") == NO_ANSWER


def test_extract_wmt16():
    assert extract_answer("WMT16", "Reasoning...\nTranslation: The house is small.") == "The house is small."
    assert extract_answer("WMT16", "  The house.  ") == "The house."
    assert extract_answer("WMT16", "Translation:   ") == NO_ANSWER


def test_extract_conll():
    assert extract_answer("CoNLL2003", "John Smith:PER; Paris: loc") == "John Smith:PER; Paris:LOC"
    assert extract_answer("CoNLL2003", "There are none.") == ""
    assert extract_answer("CoNLL2003", "hmm") == NO_ANSWER


def test_labels_file():
    assert task_labels("PAWS") == ("yes", "no")
    assert len(task_labels("LOGIC")) == 13
    assert task_labels("WMT16") == ()


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([t.value for t in Task] + ["???"]), st.text())
def test_extract_is_total(task, text):
    assert isinstance(extract_answer(task, text), str)
