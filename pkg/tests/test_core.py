import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_program
from magicdb.core import (
    Atom,
    Database,
    FactStore,
    InconsistentStore,
    Literal,
    ModelCapExceeded,
    Rule,
    SafetyError,
    SchemaError,
    Var,
    ground_instances,
    min_models,
    red,
)
from oracles import ground

ATOMS = [Atom("a", (i,)) for i in range(8)]

facts_strategy = st.lists(
    st.frozensets(st.sampled_from(ATOMS), min_size=1, max_size=4), max_size=8)


def brute_models(facts):
    atoms = sorted(set().union(*facts)) if facts else []
    models = [frozenset(c) for r in range(len(atoms) + 1) for c in itertools.combinations(atoms, r)
              if all(frozenset(c) & f for f in facts)]
    return frozenset(m for m in models if not any(o < m for o in models))


@given(facts_strategy)
def test_red_is_idempotent_antichain(facts):
    once = red(facts)
    assert red(once) == once
    assert not any(f < g for f in once for g in once)
    assert all(any(g <= f for g in once) for f in facts)


@given(facts_strategy)
def test_red_preserves_minimal_models(facts):
    assert min_models(FactStore(frozenset(facts))) == min_models(FactStore(red(facts)))


@given(facts_strategy)
def test_min_models_match_enumeration(facts):
    models = min_models(FactStore.of(facts))
    assert models == brute_models(facts)
    for m in models:
        assert all(m & f for f in facts)
        for a in m:
            assert not all((m - {a}) & f for f in facts)


@given(facts_strategy, facts_strategy)
def test_union_equals_reduction_of_both(a, b):
    assert FactStore.of(a).union(b) == FactStore.of(a + b)


def test_empty_disjunction_marks_store_inconsistent():
    store = FactStore.of([frozenset()])
    assert store.inconsistent and not store.facts
    with pytest.raises(InconsistentStore):
        min_models(store)


def test_model_cap():
    store = FactStore.of([frozenset({Atom("a", (i,)), Atom("b", (i,))}) for i in range(5)])
    with pytest.raises(ModelCapExceeded):
        min_models(store, cap=4)
    assert len(min_models(store, cap=10)) == 32


def test_unsafe_rule_names_variable():
    x = Var("X")
    rule = Rule((Atom("q", (x,)),), (Literal(Atom("r", (x,)), False),))
    with pytest.raises(SafetyError, match="X"):
        rule.check_safe()


def test_base_and_derived_predicates_are_disjoint():
    x = Var("X")
    rule = Rule((Atom("e", (x,)),), (Literal(Atom("f", (x,))),))
    with pytest.raises(SchemaError):
        Database({Atom("e", (1,))}, [rule])


def test_arity_clash_is_rejected():
    with pytest.raises(SchemaError):
        Database({Atom("e", (1,)), Atom("e", (1, 2))}, [])


@settings(max_examples=60)
@given(st.integers(0, 10**6))
def test_ground_instances_match_substitution_oracle(seed):
    db, consts, _ = random_program(random.Random(seed), n_consts=3)
    store = db.store()
    expected = {g for r in db.rules for g in ground(r, sorted(db.constants() | set(consts), key=str))
                if all(a in store.definite_atoms() for a in g.positive_body())}
    assert ground_instances(db.rules, store) == expected
