"""Magic Sets rewriting under the full left-to-right sip strategy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import naming
from .core import Atom, Database, DatalogError, Literal, Rule, Var, match_atom
from .operators import (
    ModelResult,
    alternating_fixpoint_model,
    general_soft_fixpoint,
    iterated_fixpoint_model,
    soft_fixpoint_model,
)
from .stratify import NotStratifiable, Origin, Partition, Unstratifiable, predicate_strata, soft_partition, stratify

Adorned = tuple  # (pred, adornment)


@dataclass(frozen=True)
class AdornedRule:
    """A rule whose derived literals carry adornments.

    ``head`` is None for entry rules: their heads are evaluated without a
    magic guard, only their bodies are adorned.
    """

    source: Rule
    head: Adorned | None
    body: tuple  # (Literal, adornment or None) in sip order

    def to_rule(self) -> Rule:
        head = self.source.head[0]
        if self.head is not None:
            head = Atom(naming.adorned(head.pred, self.head[1]), head.args)
        return Rule((head,), tuple(_adorned_literal(l, ad) for l, ad in self.body))


def _adorned_literal(lit: Literal, ad: str | None) -> Literal:
    if ad is None:
        return lit
    return Literal(Atom(naming.adorned(lit.atom.pred, ad), lit.atom.args), lit.positive)


@dataclass
class AdornedRuleSet:
    adorned: list
    query: Adorned | None = None
    origin: dict = field(default_factory=dict)  # adorned predicate -> original predicate

    @property
    def rules(self) -> list[Rule]:
        return [r.to_rule() for r in self.adorned]

    def adorned_preds(self) -> set[str]:
        return set(self.origin)


def adornment_for(atom: Atom, bound: set) -> str:
    return "".join("b" if not isinstance(t, Var) or t in bound else "f" for t in atom.args)


def sip_order(body: Sequence[Literal], bound: set) -> list[Literal]:
    """Left-to-right order; a negative literal waits until its variables are bound."""
    bound = set(bound)
    ordered: list[Literal] = []
    waiting: list[Literal] = []
    for lit in body:
        if lit.positive:
            ordered.append(lit)
            bound |= lit.atom.vars()
            still = []
            for w in waiting:
                (ordered if w.atom.vars() <= bound else still).append(w)
            waiting = still
        elif lit.atom.vars() <= bound:
            ordered.append(lit)
        else:
            waiting.append(lit)
    if waiting:
        raise DatalogError(f"cannot bind negative literal {waiting[0]} under the sip order")
    return ordered


def _adorn_body(body: Sequence[Literal], bound: set, idb: set[str]) -> list[tuple[Literal, str | None]]:
    out = []
    bound = set(bound)
    for lit in sip_order(body, bound):
        if lit.atom.pred in idb:
            ad = adornment_for(lit.atom, bound) if lit.positive else "b" * lit.atom.arity
            out.append((lit, ad))
        else:
            out.append((lit, None))
        if lit.positive:
            bound |= lit.atom.vars()
    return out


def adorn(rules: Iterable[Rule], query: Atom | Adorned | None = None, idb: set[str] | None = None,
          entry_rules: Iterable[Rule] = ()) -> AdornedRuleSet:
    """Adorned rules reachable from ``query`` and from the bodies of ``entry_rules``.

    ``query`` is an atom (constants bound, variables free) or a
    ``(pred, adornment)`` pair.  ``idb`` names the predicates to adorn; it
    defaults to the head predicates of ``rules``.
    """
    rules = list(rules)
    if idb is None:
        idb = set().union(*(r.head_preds for r in rules)) if rules else set()
    by_pred: dict[str, list[Rule]] = {}
    for r in rules:
        if not r.definite:
            raise DatalogError(f"Magic Sets needs definite rules, got '{r}'")
        by_pred.setdefault(r.head[0].pred, []).append(r)

    todo: list[Adorned] = []
    start = None
    if query is not None:
        if isinstance(query, Atom):
            start = (query.pred, adornment_for(query, set()))
        else:
            start = tuple(query)
        if start[0] in idb:
            todo.append(start)
        elif start[0] not in _body_preds(rules) | set(_body_preds(entry_rules)):
            raise DatalogError(f"unknown query predicate {start[0]}")

    out: list[AdornedRule] = []
    for r in entry_rules:
        body = _adorn_body(r.body, set(), idb)
        out.append(AdornedRule(r, None, tuple(body)))
        todo.extend((l.atom.pred, ad) for l, ad in body if ad is not None)

    seen: set[Adorned] = set()
    origin: dict[str, str] = {}
    while todo:
        key = todo.pop(0)
        if key in seen:
            continue
        seen.add(key)
        pred, ad = key
        origin[naming.adorned(pred, ad)] = pred
        for r in by_pred.get(pred, ()):
            head = r.head[0]
            bound = {t for t, c in zip(head.args, ad) if c == "b" and isinstance(t, Var)}
            body = _adorn_body(r.body, bound, idb)
            out.append(AdornedRule(r, key, tuple(body)))
            todo.extend((l.atom.pred, a) for l, a in body if a is not None)
    for r in out:
        for l, a in r.body:
            if a is not None:
                origin[naming.adorned(l.atom.pred, a)] = l.atom.pred
    if start is not None and start[0] not in idb:
        start = None
    return AdornedRuleSet(out, start, origin)


def _body_preds(rules: Iterable[Rule]) -> set[str]:
    return {l.atom.pred for r in rules for l in r.body} | {p for r in rules for p in r.head_preds}


def _bound_args(atom: Atom, ad: str) -> tuple:
    return tuple(t for t, c in zip(atom.args, ad) if c == "b")


def magic_atom(atom: Atom, ad: str) -> Atom:
    return Atom(naming.magic(naming.adorned(atom.pred, ad)), _bound_args(atom, ad))


@dataclass
class MagicProgram:
    rules: list
    seeds: list
    provenance: dict
    query: Atom | None = None  # adorned query atom whose derivation answers the query

    def partition(self) -> Partition:
        return soft_partition(self.rules, self.provenance)

    def text(self) -> str:
        lines = [str(r) for r in self.rules] + [f"{a}." for a in self.seeds]
        return "\n".join(lines) + "\n"


def magic_rewrite(adorned: AdornedRuleSet, query: Atom | None = None,
                  strata: dict | None = None) -> MagicProgram:
    """Guard adorned rules with magic literals and emit magic rules and the seed.

    ``strata`` maps original predicates to their strata and feeds the
    provenance used by :func:`~magicdb.stratify.soft_partition`; it defaults
    to the canonical strata of the adorned rules' sources.
    """
    if strata is None:
        sources = list(dict.fromkeys(r.source for r in adorned.adorned))
        got = predicate_strata(sources)
        if isinstance(got, Unstratifiable):
            raise NotStratifiable(got)
        strata = got
    rules: list[Rule] = []
    provenance: dict[Rule, Origin] = {}

    def emit(rule: Rule, origin: Origin) -> None:
        if rule not in provenance:
            rules.append(rule)
            provenance[rule] = origin

    seeds: list[Atom] = []
    for ar in adorned.adorned:
        head = ar.source.head[0]
        guard: list[Literal] = []
        if ar.head is not None:
            guard = [Literal(magic_atom(head, ar.head[1]))]
        prefix = list(guard)
        for lit, ad in ar.body:
            if ad is not None:
                m = magic_atom(lit.atom, ad)
                if prefix:
                    emit(Rule((m,), tuple(prefix)), Origin(m.pred, magic=True))
                elif m.is_ground():
                    seeds.append(m)
                else:
                    raise DatalogError(f"magic predicate for {lit} has no binding source")
            prefix.append(_adorned_literal(lit, ad))
        new_head = Atom(naming.adorned(head.pred, ar.head[1]), head.args) if ar.head else head
        emit(Rule((new_head,), tuple(prefix)), Origin(head.pred, strata.get(head.pred, 0)))

    answer = None
    if adorned.query is not None:
        pred, ad = adorned.query
        name = naming.adorned(pred, ad)
        n_bound = ad.count("b")
        vs = tuple(Var(f"X{i}") for i in range(1, n_bound + 1))
        seed_pred = naming.magic_seed(name)
        emit(Rule((Atom(naming.magic(name), vs),), (Literal(Atom(seed_pred, vs)),)), Origin(naming.magic(name), magic=True))
        if query is not None:
            seeds.append(Atom(seed_pred, _bound_args(query, ad)))
            answer = Atom(name, query.args)
    return MagicProgram(rules, list(dict.fromkeys(seeds)), provenance, answer)


def rewrite_query(db: Database, query: Atom) -> MagicProgram:
    adorned = adorn(db.rules, query)
    strata = predicate_strata(db.rules)
    if isinstance(strata, Unstratifiable):
        raise NotStratifiable(strata)
    return magic_rewrite(adorned, query, strata)


@dataclass
class QueryAnswer:
    holds: bool
    answers: list
    derived: int
    stats: dict = field(default_factory=dict)
    generated_atoms: frozenset = frozenset()  # atoms derived beyond the input facts


ENGINES = ("soft", "alternating", "general", "iterated")


def answer_query(db: Database, query: Atom, engine: str = "soft", magic: bool = True) -> QueryAnswer:
    """Evaluate ``query`` bottom-up over the Magic Sets rewriting of ``db``.

    Without ``magic`` the original program is materialized instead.
    """
    if engine not in ENGINES:
        raise DatalogError(f"unknown engine {engine!r}")
    if db.arities.get(query.pred, query.arity) != query.arity or query.pred not in db.arities:
        raise DatalogError(f"unknown query predicate {query.pred}/{query.arity}")
    if not magic or query.pred not in db.derived_preds():
        model = evaluate(Database(db.facts, db.rules), engine)
        hits = [a for a in model.atoms() if a.pred == query.pred and _matches(query, a)]
        return _answer(hits, query, model, db.facts)
    prog = rewrite_query(db, query)
    facts = set(db.facts) | set(prog.seeds)
    mdb = Database(facts, prog.rules)
    model = evaluate(mdb, engine, prog)
    target = prog.query.pred
    hits = [Atom(query.pred, a.args) for a in model.atoms() if a.pred == target and _matches(query, a)]
    return _answer(hits, query, model, facts)


def _answer(hits, query, model: ModelResult, inputs) -> QueryAnswer:
    hits = sorted(set(hits))
    return QueryAnswer(bool(hits), hits, sum(model.stats.values()), model.stats,
                       frozenset(model.atoms()) - frozenset(inputs))


def _matches(pattern: Atom, atom: Atom) -> bool:
    return match_atom(Atom(atom.pred, pattern.args), atom, {}) is not None


def evaluate(db: Database, engine: str, prog: MagicProgram | None = None) -> ModelResult:
    """Evaluate a definite database with the named engine."""
    if engine == "iterated":
        return iterated_fixpoint_model(db)
    if engine == "alternating":
        return alternating_fixpoint_model(db)
    if prog is not None:
        partition = soft_partition(db.rules, prog.provenance)
    else:
        partition = stratify(db.rules)
    if engine == "soft":
        return soft_fixpoint_model(partition, db.facts)
    state = general_soft_fixpoint(partition, db.store())
    stats: dict[str, int] = {}
    for a in state.definite_atoms() - db.facts:
        stats[a.pred] = stats.get(a.pred, 0) + 1
    return ModelResult(state, stats=stats)
