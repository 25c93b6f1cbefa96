import random

from hypothesis import given
from hypothesis import strategies as st

from magicdb.core import Atom, Literal, Rule
from magicdb.magic import rewrite_query
from magicdb.parser import parse_atom, parse_program
from magicdb.propagate import magic_updates_rewrite, propagation_program
from magicdb.stratify import (
    build_dependency_graph,
    is_stratifiable,
    predicate_strata,
    stratification,
    stratify,
)
from oracles import strata as relaxed_strata

PATHS = """
o(X,Y) :- not p(Y,X), p(X,Y).
p(X,Y) :- e(X,Y).
p(X,Y) :- e(X,Z), p(Z,Y).
e(1,2).
"""


def random_rules(rng, n_preds=6, n_rules=8):
    preds = [f"p{i}" for i in range(n_preds)]
    rules = []
    for _ in range(rng.randint(1, n_rules)):
        heads = tuple(dict.fromkeys(Atom(p, ()) for p in rng.sample(preds, rng.choice((1, 1, 2)))))
        body = tuple(Literal(Atom(rng.choice(preds), ()), rng.random() > 0.3) for _ in range(rng.randint(1, 3)))
        rules.append(Rule(heads, body))
    return rules


def reaches(edges, src, dst):
    seen, todo = set(), [src]
    while todo:
        n = todo.pop()
        if n == dst:
            return True
        if n not in seen:
            seen.add(n)
            todo.extend(t for s, t, _ in edges if s == n)
    return False


def test_graph_of_path_rules():
    g = build_dependency_graph(parse_program(PATHS).database.rules)
    assert g.edges == {("e", "p", "pos"), ("p", "p", "pos"), ("p", "o", "pos"), ("p", "o", "neg")}
    assert build_dependency_graph([]).edges == frozenset()


def test_path_rules_have_two_layers():
    part = stratification(parse_program(PATHS).database.rules)
    assert [sorted({r.head[0].pred for r in layer}) for layer in part] == [["p"], ["o"]]


def test_magic_rewrite_is_unstratifiable_through_negated_p():
    prog = rewrite_query(parse_program(PATHS).database, parse_atom("o(1,2)"))
    outcome = stratification(prog.rules)
    assert not outcome
    assert any(pol == "neg" and s == "p^bb" for s, t, pol in outcome.cycle)
    nodes = [s for s, _, _ in outcome.cycle]
    assert "m^p^bb" in nodes and "p^bb" in nodes


def test_magic_updates_rules_are_unstratifiable():
    db = parse_program("p(X,Y) :- e(X,Y).\np(X,Y) :- e(X,Z), p(Z,Y).\ne(1,2).").database
    prog = propagation_program(db)
    rules, _ = magic_updates_rewrite(prog.rules, prog.up_rules, prog.transition_rules, prog.strata)
    outcome = stratification(rules)
    assert not outcome
    assert any(pol == "neg" for _, _, pol in outcome.cycle)


@given(st.integers(0, 10**6))
def test_stratifiable_iff_no_cycle_through_negation(seed):
    rules = random_rules(random.Random(seed))
    edges = set(build_dependency_graph(rules).edges)
    # atoms of one disjunctive head must share a stratum
    edges |= {(a.pred, b.pred, "head") for r in rules for a in r.head for b in r.head if a != b}
    bad = any(pol == "neg" and reaches(edges, t, s) for s, t, pol in edges)
    assert is_stratifiable(rules) == (not bad)
    outcome = stratification(rules)
    if not outcome:
        cycle = outcome.cycle
        assert cycle[0][0] == cycle[-1][1]
        assert all(e in edges for e in cycle)
        assert any(pol == "neg" for _, _, pol in cycle)


@given(st.integers(0, 10**6))
def test_partition_invariants(seed):
    rules = random_rules(random.Random(seed))
    if not is_stratifiable(rules):
        return
    part = stratify(rules)
    assert sorted(map(str, part.rules())) == sorted(map(str, rules))
    preds = part.layer_preds()
    for i in range(len(preds)):
        for j in range(i + 1, len(preds)):
            assert not preds[i] & preds[j]
    level = predicate_strata(rules)
    for s, t, pol in build_dependency_graph(rules).edges:
        assert level[t] > level[s] if pol == "neg" else level[t] >= level[s]
    # lowest admissible stratum for every predicate
    assert {p: level[p] for p in relaxed_strata(rules)} == relaxed_strata(rules)
