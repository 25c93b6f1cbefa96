"""Consequence operators and their fixpoint models.

Definite operators (immediate, soft, eventual) run on the indexed
:class:`~magicdb.engine.Workspace`; the disjunctive operator works on
:class:`~magicdb.core.FactStore` values directly.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .core import (
    DEFAULT_MODEL_CAP,
    Atom,
    Database,
    DatalogError,
    FactStore,
    InconsistentStore,
    Rule,
    match_atom,
    min_models,
)
from .engine import CompiledRule, Workspace, compile_rules, saturate, step
from .stratify import Partition, stratify

log = logging.getLogger(__name__)


@dataclass
class ModelResult:
    """Positive part of a model; everything else is false.

    ``models`` holds the consistent minimal models of a model state and
    ``undefined`` the atoms left undefined by the well-founded semantics.
    """

    positive: FactStore
    models: frozenset | None = None
    undefined: frozenset = frozenset()
    iterations: int = 0
    stats: dict = field(default_factory=dict)

    def atoms(self) -> frozenset:
        return self.positive.definite_atoms()

    def holds(self, atom: Atom) -> bool:
        return atom in self.positive

    def by_pred(self, pred: str) -> list[Atom]:
        return self.positive.by_pred(pred)


def _require_definite(rules: Iterable[Rule], store: FactStore) -> None:
    for r in rules:
        if not r.definite:
            raise DatalogError(f"disjunctive rule '{r}' given to a definite operator")
    if not store.is_definite():
        raise DatalogError("disjunctive facts given to a definite operator")


def _store(ws: Workspace) -> FactStore:
    return FactStore(frozenset(frozenset((a,)) for a in ws.atoms()))


def immediate_consequence(rules: Iterable[Rule], store: FactStore) -> FactStore:
    """One application of T_R; negation is judged against ``store``."""
    rules = list(rules)
    _require_definite(rules, store)
    ws = Workspace(store.definite_atoms())
    new = step(compile_rules(rules), ws)
    if not new:
        return store
    return store.union(Atom(p, a) for p, a in new)


def lfp(operator: Callable[[FactStore], FactStore], seed: FactStore, limit: int | None = None) -> FactStore:
    """Iterate an inflationary operator from ``seed`` until it stops changing."""
    cur = seed
    n = 0
    while True:
        nxt = operator(cur)
        n += 1
        if nxt == cur:
            return cur
        if limit is not None and n >= limit:
            raise DatalogError(f"no fixpoint after {limit} iterations")
        cur = nxt


def iterated_fixpoint_model(db: Database, naive: bool = False, partition: Partition | None = None) -> ModelResult:
    """Perfect model of a stratifiable definite database, stratum by stratum."""
    _require_definite(db.rules, db.store())
    partition = partition or stratify(db.rules)
    ws = Workspace(db.facts)
    rounds = 0
    for layer in partition:
        rounds += saturate(compile_rules(layer), ws, naive=naive)
    return ModelResult(_store(ws), iterations=rounds, stats=ws.count_by_pred(len(db.facts)))


def soft_consequence(partition: Partition, store: FactStore) -> FactStore:
    """T^s: apply the first layer whose immediate consequence grows the store."""
    _require_definite(partition.rules(), store)
    for layer in partition:
        nxt = immediate_consequence(layer, store)
        if nxt != store:
            return nxt
    return store


def soft_evaluate(partition: Partition, ws: Workspace, naive: bool = False) -> int:
    """Least fixpoint of the soft consequence operator, computed in place.

    Each step re-examines layers from the first one, exactly as T^s does.
    Semi-naive matching uses, per layer, the log position of its previous
    examination: every instance true at that position already fired.
    """
    layers = [compile_rules(l) for l in partition]
    marks = [0] * len(layers)
    steps = 0
    while True:
        for i, layer in enumerate(layers):
            since = None if naive else marks[i]
            marks[i] = len(ws)
            new = step(layer, ws, since)
            if new:
                for p, a in new:
                    ws.add(p, a)
                steps += 1
                break
        else:
            return steps


def soft_fixpoint_model(partition: Partition, facts: Iterable[Atom], naive: bool = False) -> ModelResult:
    facts = list(facts)
    _require_definite(partition.rules(), FactStore())
    ws = Workspace(facts)
    n0 = len(ws)
    steps = soft_evaluate(partition, ws, naive=naive)
    return ModelResult(_store(ws), iterations=steps, stats=ws.count_by_pred(n0))


def eventual_lfp(rules: Sequence[CompiledRule], facts: Iterable[Atom], assumed: Workspace | None,
                 naive: bool = False) -> Workspace:
    """S(I-) = lfp of the eventual consequence operator: ``not L`` holds iff L is not in I-."""
    if assumed is None:
        def negated(p, a):
            return True
    else:
        rel = assumed.rel

        def negated(p, a):
            return a not in rel.get(p, ())
    ws = Workspace(facts)
    saturate(rules, ws, naive=naive, negated=negated)
    return ws


def alternating_fixpoint_model(db: Database, naive: bool = False) -> ModelResult:
    """Well-founded model via the alternating fixpoint of the eventual transformation."""
    _require_definite(db.rules, db.store())
    rules = compile_rules(db.rules)
    under: Workspace | None = None  # lfp(S^2) iterate, starting from the empty set
    under_set: set = set()
    rounds = 0
    while True:
        over = eventual_lfp(rules, db.facts, under, naive)
        nxt = eventual_lfp(rules, db.facts, over, naive)
        rounds += 1
        nxt_set = set(nxt.log)
        if nxt_set == under_set:
            undefined = frozenset(Atom(p, a) for p, a in set(over.log) - nxt_set)
            return ModelResult(_store(nxt), undefined=undefined, iterations=rounds,
                               stats=nxt.count_by_pred(len(db.facts)))
        under, under_set = nxt, nxt_set


# --- disjunctive state semantics -------------------------------------------


def _fact_index(store: FactStore) -> dict[str, list[tuple[Atom, list[frozenset]]]]:
    containing: dict[Atom, list[frozenset]] = {}
    for f in store.facts:
        for a in f:
            containing.setdefault(a, []).append(f)
    by_pred: dict[str, list[tuple[Atom, list[frozenset]]]] = {}
    for a, fs in containing.items():
        by_pred.setdefault(a.pred, []).append((a, fs))
    return by_pred


def _instances(literals: list[Atom], index, subst: dict, chosen: list):
    if not literals:
        yield subst, chosen
        return
    first, rest = literals[0], literals[1:]
    for a, fs in index.get(first.pred, ()):
        s = match_atom(first, a, subst)
        if s is not None:
            yield from _instances(rest, index, s, chosen + [(a, fs)])


def minimal_transversals(sets: Iterable[frozenset]) -> list[frozenset]:
    """Inclusion-minimal atom sets meeting every given set."""
    result = [frozenset()]
    for s in sets:
        grown = {t for t in result if t & s}
        grown |= {t | {x} for t in result if not t & s for x in s}
        result = [t for t in grown if not any(o < t for o in grown)]
    return result


def state_derivations(rules: Iterable[Rule], store: FactStore, cap: int = DEFAULT_MODEL_CAP,
                      levels: dict[str, int] | None = None) -> list[frozenset]:
    """Facts derived by one hyperresolution step of the disjunctive operator.

    Without ``levels`` the context disjunction holds each negated atom that
    some minimal model of the whole store makes true together with the
    positive body and without the head.

    With ``levels`` (predicate -> layer) the blocking models are the minimal
    models of the store below the rule's layer that contain the lower
    positive body atoms and some negated atom.  Every inclusion-minimal set
    of atoms meeting all of them is a valid context, and one conclusion is
    emitted per such set.  The negated atoms themselves form one of these
    sets, so this only adds stronger conclusions.
    """
    index = _fact_index(store)
    definite = store.definite_atoms()
    in_disjunctions = set()
    for f in store.facts:
        if len(f) > 1:
            in_disjunctions |= f
    model_cache: dict[int | None, frozenset] = {}

    def models_below(level):
        if level not in model_cache:
            part = store if level is None else FactStore.of(
                f for f in store.facts if all(levels.get(a.pred, -1) < level for a in f))
            model_cache[level] = min_models(part, cap)
        return model_cache[level]

    out: list[frozenset] = []
    for rule in rules:
        positives = rule.positive_body()
        negatives = rule.negative_body()
        level = None if levels is None else max(levels.get(h.pred, -1) for h in rule.head)
        for subst, chosen in _instances(positives, index, {}, []):
            neg_atoms = [a.substitute(subst) for a in negatives]
            if any(a in definite for a in neg_atoms):
                continue
            heads = frozenset(a.substitute(subst) for a in rule.head)
            contexts = [frozenset()]
            if any(a in in_disjunctions for a in neg_atoms):
                models = models_below(level)
                if level is None:
                    pos_atoms = [a for a, _ in chosen]
                    contexts = [frozenset(a for a in neg_atoms if any(
                        a in m and all(p in m for p in pos_atoms) and not (heads & m) for m in models))]
                else:
                    pos_atoms = [a for a, _ in chosen if levels.get(a.pred, -1) < level]
                    blocking = [m for m in models
                                if all(p in m for p in pos_atoms) and any(a in m for a in neg_atoms)]
                    contexts = minimal_transversals(blocking)
            for facts in itertools.product(*(fs for _, fs in chosen)):
                h = set(heads)
                for (a, _), f in zip(chosen, facts):
                    h |= f - {a}
                out.extend(frozenset(h | c) for c in contexts)
    return out


def state_consequence(rules: Iterable[Rule], store: FactStore, cap: int = DEFAULT_MODEL_CAP,
                      levels: dict[str, int] | None = None) -> FactStore:
    """T^state: red(store plus all hyperresolution conclusions)."""
    derived = state_derivations(rules, store, cap, levels)
    if not derived:
        return store
    return store.union(derived)


def general_soft_consequence(partition: Partition, store: FactStore, cap: int = DEFAULT_MODEL_CAP) -> FactStore:
    """T^g: apply the first layer whose disjunctive consequence changes the store."""
    levels = layer_levels(partition)
    for layer in partition:
        nxt = state_consequence(layer, store, cap, levels)
        if nxt != store:
            return nxt
    return store


def layer_levels(partition: Partition) -> dict[str, int]:
    """Index of the first layer defining each predicate."""
    levels: dict[str, int] = {}
    for i, layer in enumerate(partition):
        for r in layer:
            for h in r.head:
                levels.setdefault(h.pred, i)
    return levels


def general_soft_fixpoint(partition: Partition, seed: FactStore, cap: int = DEFAULT_MODEL_CAP) -> FactStore:
    return lfp(lambda s: general_soft_consequence(partition, s, cap), seed)


def iterated_fixpoint_state(db: Database, cap: int = DEFAULT_MODEL_CAP,
                            partition: Partition | None = None, cumulative: bool = False) -> FactStore:
    """S_n: least fixpoints of T^state along the stratification.

    Layer i is closed under R_i; ``cumulative=True`` closes it under
    R_1 .. R_i instead, which gives the same state and serves as a cross-check.
    """
    partition = partition or stratify(db.rules)
    levels = layer_levels(partition)
    cur = db.store()
    active: list[Rule] = []
    for layer in partition:
        active = active + list(layer) if cumulative else list(layer)
        cur = lfp(lambda s, rules=active: state_consequence(rules, s, cap, levels), cur)
    return cur


def fixpoint_state_model(db: Database, cap: int = DEFAULT_MODEL_CAP) -> ModelResult:
    """Iterated fixpoint state, keeping only models that contain every constraint."""
    state = iterated_fixpoint_state(db, cap)
    models = min_models(state, cap)
    ok = frozenset(m for m in models if db.constraints <= m)
    if not ok:
        raise InconsistentStore("no model state satisfies the integrity constraints")
    return ModelResult(state, models=ok)


def general_soft_model(db: Database, partition: Partition | None = None,
                       cap: int = DEFAULT_MODEL_CAP) -> ModelResult:
    partition = partition or stratify(db.rules)
    state = general_soft_fixpoint(partition, db.store(), cap)
    return ModelResult(state)


# --- perfect models by model generation ---------------------------------------


def _violated(rules: Sequence[Rule], model: set[Atom]):
    """Close ``model`` under single-head rules; return a violated disjunctive instance's head."""
    index: dict[str, list[Atom]] = {}
    for a in model:
        index.setdefault(a.pred, []).append(a)

    def matches(atoms, subst):
        if not atoms:
            yield subst
            return
        for a in index.get(atoms[0].pred, ()):
            s = match_atom(atoms[0], a, subst)
            if s is not None:
                yield from matches(atoms[1:], s)

    changed = True
    while changed:
        changed = False
        for rule in rules:
            if len(rule.head) != 1:
                continue
            for s in list(matches(rule.positive_body(), {})):
                if any(a.substitute(s) in model for a in rule.negative_body()):
                    continue
                h = rule.head[0].substitute(s)
                if h not in model:
                    model.add(h)
                    index.setdefault(h.pred, []).append(h)
                    changed = True
    for rule in rules:
        if len(rule.head) == 1:
            continue
        for s in matches(rule.positive_body(), {}):
            if any(a.substitute(s) in model for a in rule.negative_body()):
                continue
            heads = {a.substitute(s) for a in rule.head}
            if not heads & model:
                return sorted(heads)
    return None


def _layer_models(rules: Sequence[Rule], base: frozenset, cap: int) -> list[frozenset]:
    found: list[frozenset] = []

    def grow(model: set[Atom]) -> None:
        heads = _violated(rules, model)
        if heads is None:
            found.append(frozenset(model))
            return
        if len(found) > cap * 8:
            raise DatalogError(f"model generation exceeded {cap * 8} candidate models")
        for a in heads:
            grow(set(model) | {a})

    grow(set(base))
    return [m for m in set(found) if not any(o < m for o in found)]


def perfect_models(db: Database, partition: Partition | None = None,
                   cap: int = DEFAULT_MODEL_CAP) -> frozenset:
    """Perfect models of a stratifiable disjunctive database.

    Each minimal model of the facts is extended layer by layer with the
    minimal models of that layer's rules; negated atoms always belong to
    lower layers and are therefore already decided.  These are the minimal
    models of the fixpoint state, obtained without materializing the state,
    whose size can grow with the number of minimal transversals.
    """
    partition = partition or stratify(db.rules)
    models = min_models(db.store(), cap)
    for layer in partition:
        models = frozenset(m for base in models for m in _layer_models(layer, base, cap))
    return models
