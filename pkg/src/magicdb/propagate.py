"""Incremental update propagation with UP rules, transition rules and Magic Updates."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from . import naming
from .core import Atom, Database, DatalogError, Literal, Rule, Var
from .engine import Workspace
from .magic import adorn, magic_rewrite
from .operators import iterated_fixpoint_model, soft_evaluate
from .stratify import NotStratifiable, predicate_strata, soft_partition, stratify

PLUS, MINUS = "+", "-"


class IneffectiveUpdate(DatalogError):
    """An update that is not a true change of the current state."""


@dataclass(frozen=True)
class DeltaSet:
    insertions: frozenset = frozenset()
    deletions: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "insertions", frozenset(self.insertions))
        object.__setattr__(self, "deletions", frozenset(self.deletions))
        both = self.insertions & self.deletions
        if both:
            raise DatalogError(f"{min(both)} is both inserted and deleted")

    def __bool__(self) -> bool:
        return bool(self.insertions or self.deletions)

    def preds(self) -> set[str]:
        return {a.pred for a in self.insertions | self.deletions}

    def restrict(self, preds: Iterable[str]) -> DeltaSet:
        preds = set(preds)
        return DeltaSet({a for a in self.insertions if a.pred in preds},
                        {a for a in self.deletions if a.pred in preds})

    def lines(self) -> list[str]:
        out = [f"+{a}" for a in sorted(self.insertions)]
        out += [f"-{a}" for a in sorted(self.deletions)]
        return out

    def __str__(self) -> str:
        return "\n".join(self.lines())

    @classmethod
    def diff(cls, old: Iterable[Atom], new: Iterable[Atom]) -> DeltaSet:
        old, new = set(old), set(new)
        return cls(new - old, old - new)


def _delta_atom(atom: Atom, sign: str) -> Atom:
    return Atom(naming.delta(atom.pred, sign), atom.args)


def _new_atom(atom: Atom) -> Atom:
    return Atom(naming.new_state(atom.pred), atom.args)


def _in_state(lit: Literal, new: bool) -> Literal:
    return Literal(_new_atom(lit.atom), lit.positive) if new else lit


def derive_propagation_rules(rules: Iterable[Rule]) -> list[Rule]:
    """UP rules: one per rule, body literal and sign of the induced change.

    The changed literal comes first.  Insertions read the remaining
    literals in the new state and test that the head was false before;
    deletions read them in the old state and test that the head is false
    afterwards.
    """
    out: list[Rule] = []
    for r in rules:
        if not r.definite:
            raise DatalogError(f"propagation needs definite rules, got '{r}'")
        head = r.head[0]
        for i, lit in enumerate(r.body):
            rest = r.body[:i] + r.body[i + 1:]
            for sign in (PLUS, MINUS):
                cause = sign if lit.positive else (MINUS if sign == PLUS else PLUS)
                trigger = Literal(_delta_atom(lit.atom, cause))
                if sign == PLUS:
                    side = [_in_state(l, True) for l in rest]
                    test = Literal(head, False)
                else:
                    side = list(rest)
                    test = Literal(_new_atom(head), False)
                out.append(Rule((_delta_atom(head, sign),), (trigger, *side, test)))
    return out


def derive_transition_rules(rules: Iterable[Rule], base_preds: dict[str, int]) -> list[Rule]:
    """New-state rules: base relations from the deltas, derived ones by renaming."""
    out: list[Rule] = []
    for pred in sorted(base_preds):
        xs = tuple(Var(f"X{i}") for i in range(1, base_preds[pred] + 1))
        a = Atom(pred, xs)
        out.append(Rule((_new_atom(a),), (Literal(a), Literal(_delta_atom(a, MINUS), False))))
        out.append(Rule((_new_atom(a),), (Literal(_delta_atom(a, PLUS)),)))
    for r in rules:
        out.append(Rule(tuple(_new_atom(h) for h in r.head), tuple(_in_state(l, True) for l in r.body)))
    return out


@dataclass
class PropagationProgram:
    rules: list
    up_rules: list
    transition_rules: list
    strata: dict

    @property
    def all_rules(self) -> list[Rule]:
        return list(self.rules) + list(self.up_rules) + list(self.transition_rules)


def propagation_program(db: Database) -> PropagationProgram:
    base = {p: db.arities[p] for p in db.base_preds()}
    up = derive_propagation_rules(db.rules)
    tr = derive_transition_rules(db.rules, base)
    prog = PropagationProgram(list(db.rules), up, tr, {})
    strata = predicate_strata(prog.all_rules)
    if not isinstance(strata, dict):
        raise NotStratifiable(strata)
    prog.strata = strata
    return prog


def magic_updates_rewrite(rules: Iterable[Rule], up_rules: Iterable[Rule], transition_rules: Iterable[Rule],
                          strata: dict | None = None):
    """Specialize state relations to the bindings coming from delta literals.

    UP rules become unguarded entry rules; every state literal they reach
    (old derived, new-state) is adorned and gets magic subquery rules.
    Returns ``(rules, provenance)``.
    """
    rules, up_rules, transition_rules = list(rules), list(up_rules), list(transition_rules)
    state_rules = rules + transition_rules
    if strata is None:
        strata = predicate_strata(state_rules + up_rules)
        if not isinstance(strata, dict):
            raise NotStratifiable(strata)
    idb = set().union(*(r.head_preds for r in state_rules)) if state_rules else set()
    adorned = adorn(state_rules, None, idb=idb, entry_rules=up_rules)
    prog = magic_rewrite(adorned, None, strata)
    return prog.rules, prog.provenance


def _seed_atoms(update: DeltaSet) -> list[Atom]:
    return [_delta_atom(a, PLUS) for a in update.insertions] + [_delta_atom(a, MINUS) for a in update.deletions]


def check_update(db: Database, update: DeltaSet) -> None:
    base = db.base_preds()
    for a in update.insertions | update.deletions:
        if not a.is_ground():
            raise DatalogError(f"update {a} is not ground")
        if a.pred not in base:
            raise DatalogError(f"{a.pred} is not a base relation; use a view update instead")
        if db.arities.get(a.pred, a.arity) != a.arity:
            raise DatalogError(f"{a} has the wrong arity for {a.pred}")
    for a in update.insertions:
        if a in db.facts:
            raise IneffectiveUpdate(f"cannot insert {a}: already present")
    for a in update.deletions:
        if a not in db.facts:
            raise IneffectiveUpdate(f"cannot delete {a}: not present")


@dataclass
class PropagationResult:
    delta: DeltaSet
    stats: dict  # relation label -> generated fact count
    generated_atoms: frozenset = frozenset()  # every counted atom, under its evaluated name

    @property
    def generated(self) -> int:
        return sum(self.stats.values())


def _labelled(counts: dict[str, int]) -> dict[str, int]:
    out: Counter = Counter()
    for pred, n in counts.items():
        out[naming.relation_label(pred)] += n
    return dict(sorted(out.items()))


def _collect(atoms: Iterable[Atom]) -> DeltaSet:
    ins, dels = set(), set()
    for a in atoms:
        tag, rest = naming.split_tag(a.pred)
        if tag == naming.DELTA_PLUS:
            ins.add(Atom(rest, a.args))
        elif tag == naming.DELTA_MINUS:
            dels.add(Atom(rest, a.args))
    return DeltaSet(ins, dels)


MODES = ("naive", "magic")


def propagate_update(db: Database, update: DeltaSet, mode: str = "magic") -> PropagationResult:
    """Induced insertions and deletions on every relation, plus fact counts.

    Counts cover every atom derived during evaluation; the base facts and
    the delta seeds are inputs and are not counted.
    """
    if mode not in MODES:
        raise DatalogError(f"unknown propagation mode {mode!r}")
    check_update(db, update)
    prog = propagation_program(db)
    seeds = _seed_atoms(update)
    inputs = set(db.facts) | set(seeds)
    ws = Workspace(list(db.facts) + seeds)
    n0 = len(ws)
    if mode == "naive":
        partition = stratify(prog.all_rules)
        model = iterated_fixpoint_model(Database(ws.atoms(), prog.all_rules), partition=partition)
        atoms, stats = model.atoms(), model.stats
    else:
        rules, provenance = magic_updates_rewrite(prog.rules, prog.up_rules, prog.transition_rules, prog.strata)
        soft_evaluate(soft_partition(rules, provenance), ws)
        atoms, stats = ws.atoms(), ws.count_by_pred(n0)
    return PropagationResult(_collect(atoms), _labelled(stats), frozenset(atoms) - inputs)


def recompute_delta(db: Database, update: DeltaSet) -> DeltaSet:
    """Oracle: materialize both states and diff them."""
    old = iterated_fixpoint_model(db).atoms()
    new = iterated_fixpoint_model(db.with_updates(update.insertions, update.deletions)).atoms()
    return DeltaSet.diff(old, new)
