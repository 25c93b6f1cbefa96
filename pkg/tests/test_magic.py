import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_program
from magicdb import naming
from magicdb.core import Atom, DatalogError, Var, match_atom
from magicdb.magic import adorn, answer_query, rewrite_query
from magicdb.operators import iterated_fixpoint_model
from magicdb.parser import parse_atom, parse_program

PATHS = """
o(X,Y) :- not p(Y,X), p(X,Y).
p(X,Y) :- e(X,Y).
p(X,Y) :- e(X,Z), p(Z,Y).
"""

EXPECTED_REWRITE = """\
m^p^bb(Y,X) :- m^o^bb(X,Y).
m^p^bb(X,Y) :- m^o^bb(X,Y), not p^bb(Y,X).
o^bb(X,Y) :- m^o^bb(X,Y), not p^bb(Y,X), p^bb(X,Y).
p^bb(X,Y) :- m^p^bb(X,Y), e(X,Y).
m^p^bb(Z,Y) :- m^p^bb(X,Y), e(X,Z).
p^bb(X,Y) :- m^p^bb(X,Y), e(X,Z), p^bb(Z,Y).
m^o^bb(X1,X2) :- ms^o^bb(X1,X2).
ms^o^bb(1,2).
"""


def db_of(text):
    return parse_program(text).database


def test_rewrite_of_path_query():
    assert rewrite_query(db_of(PATHS + "e(1,2)."), parse_atom("o(1,2)")).text() == EXPECTED_REWRITE


def test_rewritten_program_round_trips_through_parser():
    prog = rewrite_query(db_of(PATHS + "e(1,2)."), parse_atom("o(1,2)"))
    again = parse_program(prog.text(), allow_reserved=True).database
    assert set(again.rules) == set(prog.rules)


def test_left_to_right_sip_gives_bound_free_recursion():
    rules = db_of("p(X,Y) :- e(X,Y).\np(X,Y) :- e(X,Z), p(Z,Y).").rules
    adorned = adorn(rules, parse_atom("p(1,Y)"))
    preds = {r.head[0].pred for r in adorned.rules}
    assert preds == {"p^bf"}
    assert any(lit.atom.pred == "p^bf" for r in adorned.rules for lit in r.body)


def test_base_query_needs_no_rewrite():
    db = db_of(PATHS + "e(1,2).")
    assert adorn(db.rules, parse_atom("e(1,2)")).rules == []
    assert answer_query(db, parse_atom("e(1,2)")).holds


def test_single_rule_rewrite():
    prog = rewrite_query(db_of("q(X) :- b(X).\nb(1)."), parse_atom("q(1)"))
    assert "q^b(X) :- m^q^b(X), b(X)." in prog.text()
    assert prog.seeds == [Atom("ms^q^b", (1,))]


def test_unknown_query_predicate():
    with pytest.raises(DatalogError):
        answer_query(db_of(PATHS + "e(1,2)."), parse_atom("nope(1)"))


@pytest.mark.parametrize("engine", ["soft", "alternating", "general"])
@pytest.mark.parametrize("facts, expected", [
    ("e(1,2).", True),
    ("e(1,2).\ne(2,1).", False),
    ("", False),
])
def test_path_query_answers(engine, facts, expected):
    assert answer_query(db_of(PATHS + facts), parse_atom("o(1,2)"), engine).holds is expected


def test_open_query_lists_answers():
    db = db_of("p(X,Y) :- e(X,Y).\np(X,Y) :- e(X,Z), p(Z,Y).\ne(1,2).\ne(2,3).\ne(5,6).")
    ans = answer_query(db, parse_atom("p(1,Y)"))
    assert ans.answers == [parse_atom("p(1,2)"), parse_atom("p(1,3)")]


def test_iterated_engine_rejects_unstratifiable_rewrite():
    with pytest.raises(DatalogError):
        answer_query(db_of(PATHS + "e(1,2)."), parse_atom("o(1,2)"), "iterated")


def _original(atom):
    return Atom(naming.strip_adornment(atom.pred), atom.args)


@settings(max_examples=150)
@given(st.integers(0, 10**6))
def test_relevance_magic_atoms_are_a_subset_of_the_model(seed):
    rng = random.Random(seed)
    db, consts, arities = random_program(rng)
    pred = rng.choice(sorted(db.derived_preds()))
    query = Atom(pred, tuple(rng.choice(consts) for _ in range(arities[pred])))
    full = answer_query(db, query, magic=False)
    magic = answer_query(db, query)
    relevant = {_original(a) for a in magic.generated_atoms
                if naming.split_tag(a.pred)[0] not in (naming.MAGIC, naming.MAGIC_SEED)}
    assert relevant <= full.generated_atoms
    assert full.generated_atoms == iterated_fixpoint_model(db).atoms() - db.facts


@settings(max_examples=150)
@given(st.integers(0, 10**6))
def test_engines_agree_on_open_queries(seed):
    rng = random.Random(seed)
    db, consts, arities = random_program(rng)
    pred = rng.choice(sorted(db.derived_preds()))
    query = Atom(pred, tuple(rng.choice(consts) if rng.random() < 0.5 else Var(rng.choice("XY"))
                             for _ in range(arities[pred])))
    expected = sorted(a for a in iterated_fixpoint_model(db).atoms() if match_atom(query, a, {}) is not None)
    for engine in ("soft", "alternating", "general"):
        assert answer_query(db, query, engine).answers == expected
