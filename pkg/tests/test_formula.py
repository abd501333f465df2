import random

import pytest
from hypothesis import given, settings, strategies as st

from tempagent.formula import (
    BOT, TOP, And, Dist, Implies, K, KnI, Next, Not, Or, ParseError, Today, Unc, Until, Var,
    metrics, parse, subformulas, to_text, variables,
)
from tempagent.generators import random_formula

x1, x2, x3 = Var(1), Var(2), Var(3)


@pytest.mark.parametrize("text,expected", [
    ("x1 -> x1", Implies(x1, x1)),
    ("Unc x1", Unc(x1)),
    ("K1 x1 & N (x1 Until x2)", And(K(1, x1), Next(Until(x1, x2)))),
    ("true", TOP),
    ("false", BOT),
    ("~~x1", Not(Not(x1))),
    ("D0 x1", Dist(0, x1)),
    ("D12 Today KnI x3", Dist(12, Today(KnI(x3)))),
    # precedence: & over | over Until over ->
    ("x1 | x2 & x3", Or(x1, And(x2, x3))),
    ("x1 Until x2 | x3", Until(x1, Or(x2, x3))),
    ("x1 -> x2 Until x3", Implies(x1, Until(x2, x3))),
    ("x1 -> x2 -> x3", Implies(x1, Implies(x2, x3))),
    ("x1 & x2 & x3", And(And(x1, x2), x3)),
    ("x1 Until x2 Until x3", Until(Until(x1, x2), x3)),
    ("~x1 & x2", And(Not(x1), x2)),
    ("K2 (x1)\n  & x2", And(K(2, x1), x2)),
])
def test_parse_examples(text, expected):
    assert parse(text) == expected


@pytest.mark.parametrize("f,text", [
    (TOP, "true"),
    (Unc(x1), "Unc x1"),
    (Until(x1, Or(x2, x3)), "x1 Until (x2 | x3)"),
    (Implies(Implies(x1, x2), x3), "(x1 -> x2) -> x3"),
    (Implies(x1, Implies(x2, x3)), "x1 -> x2 -> x3"),
    (And(x1, And(x2, x3)), "x1 & (x2 & x3)"),
    (Not(And(x1, x2)), "~(x1 & x2)"),
    (K(3, Not(x1)), "K3 ~x1"),
])
def test_print_examples(f, text):
    assert to_text(f) == text
    assert parse(text) == f


@pytest.mark.parametrize("text,col", [
    ("Unc x1 &", 9),
    ("x1 x2", 4),
    ("(x1", 4),
    ("x1 )", 4),
    ("K0 x1", 1),
    ("Dx x1", 1),
    ("x0", 1),
    ("x1 # x2", 4),
    ("", 1),
    ("foo", 1),
])
def test_syntax_errors_are_located(text, col):
    with pytest.raises(ParseError) as e:
        parse(text)
    assert e.value.line == 1
    assert e.value.column == col


def test_error_lists_expected_tokens():
    with pytest.raises(ParseError) as e:
        parse("x1 &")
    assert "x<n>" in e.value.expected
    assert "expected one of" in str(e.value)


def test_error_position_on_later_line():
    with pytest.raises(ParseError) as e:
        parse("x1 &\n  & x2")
    assert (e.value.line, e.value.column) == (2, 3)


def test_agent_zero_message():
    with pytest.raises(ParseError, match="agent index 0"):
        parse("K0 x1")


def test_constructor_invariants():
    with pytest.raises(ValueError):
        Var(0)
    with pytest.raises(ValueError):
        K(0, x1)
    with pytest.raises(ValueError):
        Dist(-1, x1)


def test_metrics():
    m = metrics(parse("K2 (x1 Until N x3) & D3 D1 N x1"))
    assert m.variables_used == {1, 3}
    assert m.max_agent == 2
    assert m.dist_weight == 4
    assert m.next_count == 2
    assert m.until_count == 1
    assert m.size == 10
    assert metrics(parse("x1 -> x1")).size == 3
    assert metrics(TOP).max_agent == 0


def test_subformulas_children_first_and_distinct():
    f = parse("(x1 & x2) | (x1 & x2) -> x1")
    subs = subformulas(f)
    assert subs[-1] == f
    assert len(subs) == len(set(subs))
    assert subs == [x1, x2, And(x1, x2), Or(And(x1, x2), And(x1, x2)), f]
    for k, g in enumerate(subs):
        for c in g.children():
            assert subs.index(c) < k


def test_variables_sorted():
    assert variables(parse("x3 & K1 x1 | x3")) == [1, 3]


formulas = st.builds(
    lambda seed, size, agents: random_formula(random.Random(seed), size, variables=4, agents=agents, max_dist=3),
    st.integers(0, 2 ** 32), st.integers(1, 25), st.integers(1, 3),
)


@settings(max_examples=400, deadline=None)
@given(formulas)
def test_round_trip(f):
    assert parse(to_text(f)) == f
    assert to_text(parse(to_text(f))) == to_text(f)


@settings(max_examples=200, deadline=None)
@given(formulas)
def test_metrics_invariants(f):
    m = metrics(f)
    assert m.size >= 1
    assert (m.max_agent == 0) == (not any(isinstance(g, K) for g in subformulas(f)))
    assert m.variables_used == set(variables(f))


@settings(max_examples=500, deadline=None)
@given(st.text(alphabet="x1K2D0N~&|()->TUnctodayrIsfl \n", max_size=30))
def test_parser_is_total(text):
    # either a formula or a located ParseError, never anything else
    try:
        f = parse(text)
    except ParseError as e:
        assert e.line >= 1 and e.column >= 1
    else:
        assert parse(to_text(f)) == f
