import random

import pytest
from hypothesis import given, settings, strategies as st

from srnld.errors import FolSyntaxError, UnknownToken
from srnld.fol import (
    Atom,
    Binary,
    Connective,
    Not,
    Quantified,
    Quantifier,
    fol_to_string,
    free_variables,
    from_json,
    parse_fol,
    to_json,
)

from generators import random_fol
from oracles import brute_free_vars

AND, OR, IMP = Connective.AND, Connective.OR, Connective.IMPLIES


def A(p, *args):
    return Atom(p, args)


def test_atom():
    assert parse_fol("dog(x)") == A("dog", "x")
    assert fol_to_string(A("dog", "x")) == "dog(x)"


def test_running_example():
    e = parse_fol("exists x (dog(x) & see(John, x))")
    assert e == Quantified(Quantifier.EXISTS, "x", Binary(AND, A("dog", "x"), A("see", "John", "x")))
    assert free_variables(e) == set()


def test_negation_binds_tightest():
    # hand trace: unary '~' takes p(x); '&' then joins the negation with q(x)
    assert parse_fol("~p(x) & q(x)") == Binary(AND, Not(A("p", "x")), A("q", "x"))


@pytest.mark.parametrize(
    "text, expected",
    [
        ("a(x) | b(x) & c(x)", Binary(OR, A("a", "x"), Binary(AND, A("b", "x"), A("c", "x")))),
        ("a(x) & b(x) & c(x)", Binary(AND, Binary(AND, A("a", "x"), A("b", "x")), A("c", "x"))),
        ("a(x) -> b(x) -> c(x)", Binary(IMP, A("a", "x"), Binary(IMP, A("b", "x"), A("c", "x")))),
        ("a(x) | b(x) -> c(x)", Binary(IMP, Binary(OR, A("a", "x"), A("b", "x")), A("c", "x"))),
        (
            "forall x dog(x) -> animal(x)",
            Quantified(Quantifier.FORALL, "x", Binary(IMP, A("dog", "x"), A("animal", "x"))),
        ),
        (
            "(forall x dog(x)) -> animal(x)",
            Binary(IMP, Quantified(Quantifier.FORALL, "x", A("dog", "x")), A("animal", "x")),
        ),
        (
            "p(a) & exists y q(y) | r(y)",
            Binary(AND, A("p", "a"), Quantified(Quantifier.EXISTS, "y", Binary(OR, A("q", "y"), A("r", "y")))),
        ),
        ("forall x. dog(x)", Quantified(Quantifier.FORALL, "x", A("dog", "x"))),
        ("∀x (¬dog(x) ∨ cat(x))", Quantified(Quantifier.FORALL, "x", Binary(OR, Not(A("dog", "x")), A("cat", "x")))),
        ("∃y (p(y) ∧ q(y) → r(y))", Quantified(
            Quantifier.EXISTS, "y", Binary(IMP, Binary(AND, A("p", "y"), A("q", "y")), A("r", "y")))),
        ("~~p(x)", Not(Not(A("p", "x")))),
    ],
)
def test_precedence_table(text, expected):
    assert parse_fol(text) == expected


@pytest.mark.parametrize(
    "expr, text",
    [
        (Binary(AND, Binary(OR, A("a", "x"), A("b", "x")), A("c", "x")), "(a(x) | b(x)) & c(x)"),
        (Binary(AND, A("a", "x"), Binary(AND, A("b", "x"), A("c", "x"))), "a(x) & (b(x) & c(x))"),
        (Binary(IMP, Binary(IMP, A("a", "x"), A("b", "x")), A("c", "x")), "(a(x) -> b(x)) -> c(x)"),
        (Binary(IMP, A("a", "x"), Binary(IMP, A("b", "x"), A("c", "x"))), "a(x) -> b(x) -> c(x)"),
        (Not(Binary(OR, A("a", "x"), A("b", "x"))), "~(a(x) | b(x))"),
        (
            Binary(AND, Quantified(Quantifier.EXISTS, "x", A("p", "x")), A("q", "y")),
            "(exists x p(x)) & q(y)",
        ),
        (
            Binary(AND, Binary(AND, A("q", "y"), Quantified(Quantifier.EXISTS, "x", A("p", "x"))), A("r", "y")),
            "q(y) & (exists x p(x)) & r(y)",
        ),
        (
            Binary(AND, Not(Quantified(Quantifier.FORALL, "x", A("p", "x"))), A("r", "y")),
            "~(forall x p(x)) & r(y)",
        ),
        (Quantified(Quantifier.EXISTS, "x", Binary(AND, A("dog", "x"), A("see", "John", "x"))),
         "exists x dog(x) & see(John, x)"),
    ],
)
def test_minimal_parens(expr, text):
    assert fol_to_string(expr) == text
    assert parse_fol(text) == expr


@pytest.mark.parametrize(
    "text, error, pos",
    [
        ("dog(", FolSyntaxError, 4),
        ("dog(x", FolSyntaxError, 5),
        ("dog", FolSyntaxError, 3),
        ("dog()", FolSyntaxError, 4),
        ("p(x) <-> q(x)", UnknownToken, 5),
        ("p(x) $ q(x)", UnknownToken, 5),
        ("p(x) q(x)", FolSyntaxError, 5),
        ("forall (p(x))", FolSyntaxError, 7),
        ("p(forall)", FolSyntaxError, 2),
        ("(p(x)", FolSyntaxError, 5),
        ("", FolSyntaxError, 0),
        ("p(f(x))", FolSyntaxError, 3),
    ],
)
def test_errors_report_position(text, error, pos):
    with pytest.raises(error) as exc:
        parse_fol(text)
    assert exc.value.position == pos
    assert exc.value.kind == "FOL"


def test_free_variables():
    assert free_variables(parse_fol("p(x) & exists x q(x, y, John)")) == {"x", "y"}
    assert free_variables(parse_fol("forall Obj p(Obj)")) == set()
    # binding, not case, makes an argument a variable; unbound long names are constants
    assert free_variables(parse_fol("see(john, mary)")) == set()


def test_json_round_trip():
    e = parse_fol("forall x (dog(x) -> ~cat(x))")
    data = to_json(e)
    assert data["type"] == "quantified" and data["body"]["op"] == "implies"
    assert from_json(data) == e


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_print_parse_round_trip(seed):
    e = random_fol(random.Random(seed))
    text = fol_to_string(e)
    assert parse_fol(text) == e
    assert fol_to_string(parse_fol(text)) == text
    assert free_variables(e) == brute_free_vars(to_json(e))
