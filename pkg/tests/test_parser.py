import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from generators import random_disjunctive, random_program
from magicdb.core import Atom, SchemaError
from magicdb.parser import ParseError, format_program, parse_atom, parse_program, parse_request


def test_definite_rule():
    db = parse_program("p(X,Y) :- e(X,Y).").database
    assert len(db.rules) == 1 and db.rules[0].definite
    assert db.derived_preds() == {"p"}


def test_negation_bound_by_later_positive_literal_is_safe():
    rule = parse_program("o(X,Y) :- not p(Y,X), p(X,Y).").database.rules[0]
    assert [lit.positive for lit in rule.body] == [False, True]


def test_unsafe_negation_is_rejected():
    with pytest.raises(ParseError, match=r"unsafe rule .*variable\(s\) X"):
        parse_program("q(X) :- not r(X).")


def test_disjunctions_constraints_and_comments():
    prog = parse_program("""
        % comment line
        a(1) | b(1).
        c(X) | d(X) :- a(X).
        constraint a(1).
    """)
    db = prog.database
    assert db.disjunctive_facts == {frozenset({Atom("a", (1,)), Atom("b", (1,))})}
    assert len(db.rules[0].head) == 2
    assert db.constraints == {Atom("a", (1,))}


def test_syntax_error_reports_position():
    with pytest.raises(ParseError) as err:
        parse_program("p(X) :- e(X).\np(X) :- e(X) e(Y).")
    assert "2" in str(err.value)


def test_generated_names_are_reserved():
    with pytest.raises(ParseError):
        parse_program("m^p^bb(1).")


def test_base_and_derived_clash():
    with pytest.raises(SchemaError):
        parse_program("e(1).\ne(X) :- f(X).")


def test_requests():
    db = parse_program("e(1,2).\np(X) :- e(X,Y).").database
    r = parse_request("+e(2,3)", db)
    assert (r.kind, r.sign, r.atom) == ("base", "+", Atom("e", (2, 3)))
    assert parse_request("-e(1,2)", db).sign == "-"
    v = parse_request("vu +p(2)", db)
    assert (v.kind, v.sign, v.atom) == ("view", "+", Atom("p", (2,)))
    with pytest.raises(ParseError):
        parse_request("+e(X,3)", db)
    with pytest.raises(ParseError):
        parse_request("+nope(1)", db)


def test_lowercase_constants_and_integers():
    a = parse_atom("p(abc, 12, X)")
    assert a.args[0] == "abc" and a.args[1] == 12 and not a.is_ground()


def same_program(a, b):
    return (a.facts, a.disjunctive_facts, a.constraints, set(a.rules)) == \
        (b.facts, b.disjunctive_facts, b.constraints, set(b.rules))


@given(st.integers(0, 10**6))
def test_round_trip_definite(seed):
    db, _, _ = random_program(random.Random(seed))
    text = format_program(db)
    again = parse_program(text).database
    assert same_program(again, db)
    assert format_program(again) == text


@given(st.integers(0, 10**6))
def test_round_trip_disjunctive(seed):
    drawn = random_disjunctive(random.Random(seed))
    if drawn is not None:
        db, _ = drawn
        text = format_program(db)
        again = parse_program(text).database
        assert same_program(again, db)
        assert format_program(again) == text
