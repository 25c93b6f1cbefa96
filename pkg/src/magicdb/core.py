"""Rule language, disjunctive fact stores, subsumption reduction and minimal models."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

DEFAULT_MODEL_CAP = 20


class DatalogError(Exception):
    """Base class for all errors raised by this package."""


class SafetyError(DatalogError):
    pass


class SchemaError(DatalogError):
    """Arity clashes and predicates that are both base and derived."""


class InconsistentStore(DatalogError):
    pass


class ModelCapExceeded(DatalogError):
    pass


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


Const = Union[int, str]
Term = Union[Var, int, str]


def is_var(t: Term) -> bool:
    return isinstance(t, Var)


def term_key(t: Term) -> tuple:
    if isinstance(t, Var):
        return (2, t.name)
    if isinstance(t, int):
        return (0, t)
    return (1, t)


_PLAIN_CONST = re.compile(r"^[a-z][A-Za-z0-9_]*$")


def format_term(t: Term) -> str:
    if isinstance(t, str) and not _PLAIN_CONST.match(t):
        return f'"{t}"'
    return str(t)


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple = ()

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def vars(self) -> set[Var]:
        return {a for a in self.args if isinstance(a, Var)}

    def is_ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)

    def sort_key(self) -> tuple:
        return (self.pred, tuple(term_key(a) for a in self.args))

    def __lt__(self, other: Atom) -> bool:
        return self.sort_key() < other.sort_key()

    def substitute(self, subst: Mapping[Var, Const]) -> Atom:
        return Atom(self.pred, tuple(subst.get(a, a) if isinstance(a, Var) else a for a in self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(map(format_term, self.args))})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"not {self.atom}"

    def substitute(self, subst: Mapping[Var, Const]) -> Literal:
        return Literal(self.atom.substitute(subst), self.positive)


def pos(atom: Atom) -> Literal:
    return Literal(atom, True)


def neg(atom: Atom) -> Literal:
    return Literal(atom, False)


@dataclass(frozen=True)
class Rule:
    head: tuple[Atom, ...]
    body: tuple[Literal, ...]

    def __post_init__(self):
        if isinstance(self.head, Atom):
            object.__setattr__(self, "head", (self.head,))
        else:
            object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "body", tuple(self.body))
        if not self.head:
            raise ValueError("rule head must not be empty")

    @property
    def definite(self) -> bool:
        return len(self.head) == 1

    @property
    def head_preds(self) -> set[str]:
        return {a.pred for a in self.head}

    def positive_body(self) -> list[Atom]:
        return [l.atom for l in self.body if l.positive]

    def negative_body(self) -> list[Atom]:
        return [l.atom for l in self.body if not l.positive]

    def vars(self) -> set[Var]:
        out: set[Var] = set()
        for a in self.head:
            out |= a.vars()
        for l in self.body:
            out |= l.atom.vars()
        return out

    def unsafe_vars(self) -> set[Var]:
        bound: set[Var] = set()
        for a in self.positive_body():
            bound |= a.vars()
        need: set[Var] = set()
        for a in self.head:
            need |= a.vars()
        for a in self.negative_body():
            need |= a.vars()
        return need - bound

    def check_safe(self) -> None:
        bad = self.unsafe_vars()
        if bad:
            names = ", ".join(sorted(v.name for v in bad))
            raise SafetyError(f"unsafe rule '{self}': variable(s) {names} occur in no positive body literal")

    def substitute(self, subst: Mapping[Var, Const]) -> Rule:
        return Rule(tuple(a.substitute(subst) for a in self.head), tuple(l.substitute(subst) for l in self.body))

    def sort_key(self) -> tuple:
        return (
            tuple(a.sort_key() for a in self.head),
            tuple((not l.positive, l.atom.sort_key()) for l in self.body),
        )

    def __str__(self) -> str:
        head = " | ".join(map(str, self.head))
        if not self.body:
            return f"{head}."
        return f"{head} :- {', '.join(map(str, self.body))}."


Fact = frozenset  # frozenset[Atom], read as a disjunction


def fact(*atoms: Atom) -> frozenset:
    if not atoms:
        raise ValueError("the empty disjunction is not a fact")
    return frozenset(atoms)


def fact_key(f: frozenset) -> tuple:
    return (len(f), tuple(sorted(a.sort_key() for a in f)))


def format_fact(f: frozenset) -> str:
    return " | ".join(str(a) for a in sorted(f))


def red(facts: Iterable[frozenset]) -> frozenset:
    """Drop duplicates and every fact that is a proper superset of another."""
    facts = set(facts)
    singles = {next(iter(f)) for f in facts if len(f) == 1}
    rest = [f for f in facts if len(f) > 1 and not (f & singles)]
    index: dict = {}
    masks = []
    for f in rest:
        m = 0
        for a in f:
            m |= 1 << index.setdefault(a, len(index))
        masks.append((len(f), m, f))
    masks.sort(key=lambda t: t[0])
    kept: list[int] = []
    out = [frozenset((a,)) for a in singles]
    for _, m, f in masks:
        if not any(g & m == g for g in kept):
            kept.append(m)
            out.append(f)
    return frozenset(out)


@dataclass(frozen=True)
class FactStore:
    """Immutable subsumption-free set of disjunctive facts.

    ``inconsistent`` is the store-level ``false`` marker; it is never
    represented as an empty fact.
    """

    facts: frozenset = frozenset()
    inconsistent: bool = False

    @classmethod
    def of(cls, items: Iterable[Union[Atom, frozenset]] = (), inconsistent: bool = False) -> FactStore:
        fs = []
        for it in items:
            if isinstance(it, Atom):
                fs.append(frozenset((it,)))
            else:
                f = frozenset(it)
                if not f:
                    inconsistent = True
                    continue
                fs.append(f)
        return cls(red(fs), inconsistent)

    def __iter__(self) -> Iterator[frozenset]:
        return iter(sorted(self.facts, key=fact_key))

    def __len__(self) -> int:
        return len(self.facts)

    def __contains__(self, item) -> bool:
        if isinstance(item, Atom):
            item = frozenset((item,))
        return item in self.facts

    def is_definite(self) -> bool:
        return all(len(f) == 1 for f in self.facts)

    def definite_atoms(self) -> frozenset:
        return frozenset(next(iter(f)) for f in self.facts if len(f) == 1)

    def atoms(self) -> frozenset:
        out = set()
        for f in self.facts:
            out |= f
        return frozenset(out)

    def union(self, items: Iterable[Union[Atom, frozenset]]) -> FactStore:
        """Add facts, keeping the store subsumption-free.

        Only the genuinely new facts are reduced and compared with the stored
        ones, through a per-atom index, so re-deriving known facts is cheap.
        """
        add = FactStore.of(f for f in items if (frozenset((f,)) if isinstance(f, Atom) else f) not in self.facts)
        if not add.facts:
            return self if not add.inconsistent else FactStore(self.facts, True)
        by_atom: dict[Atom, list[frozenset]] = {}
        for g in self.facts:
            for a in g:
                by_atom.setdefault(a, []).append(g)
        fresh = [f for f in add.facts
                 if not any(g <= f for a in f for g in by_atom.get(a, ()))]
        if not fresh:
            return self if not add.inconsistent else FactStore(self.facts, True)
        dropped = set()
        for f in fresh:
            rarest = min(f, key=lambda a: len(by_atom.get(a, ())))
            dropped.update(g for g in by_atom.get(rarest, ()) if f < g)
        return FactStore((self.facts - dropped) | frozenset(fresh), self.inconsistent or add.inconsistent)

    def by_pred(self, pred: str) -> list[Atom]:
        return sorted(a for a in self.definite_atoms() if a.pred == pred)

    def __str__(self) -> str:
        body = "\n".join(format_fact(f) + "." for f in self)
        return body + ("\nfalse." if self.inconsistent else "")


def min_models(store: FactStore, cap: int = DEFAULT_MODEL_CAP) -> frozenset:
    """All subset-minimal sets of atoms hitting every fact of ``store``.

    Definite facts are forced into every model; the search only branches on
    the atoms of the remaining proper disjunctions, and at most ``cap`` such
    atoms are accepted.
    """
    if store.inconsistent:
        raise InconsistentStore("store is marked false; its model set is undefined")
    forced = store.definite_atoms()
    open_facts = [f for f in store.facts if len(f) > 1 and not (f & forced)]
    free_atoms = set().union(*open_facts) if open_facts else set()
    if len(free_atoms) > cap:
        raise ModelCapExceeded(f"{len(free_atoms)} atoms in disjunctions exceed the model enumeration cap of {cap}")
    index = {a: i for i, a in enumerate(sorted(free_atoms))}
    atoms = sorted(free_atoms)
    hits: list[int] = []

    def mask(f) -> int:
        m = 0
        for a in f:
            m |= 1 << index[a]
        return m

    # branches are disjoint: after trying atom a of a fact, later branches
    # on that fact exclude a
    def search(chosen: int, remaining: list[int]) -> None:
        if any(h & chosen == h for h in hits):
            return
        if not remaining:
            hits.append(chosen)
            return
        smallest = min(remaining, key=int.bit_count)
        banned = 0
        bits = smallest
        while bits:
            low = bits & -bits
            bits ^= low
            rest = []
            for f in remaining:
                if f & low:
                    continue
                f &= ~banned
                if not f:
                    break
                rest.append(f)
            else:
                search(chosen | low, rest)
            banned |= low

    search(0, [mask(f) for f in open_facts])
    minimal = [h for h in hits if not any(o != h and o & h == o for o in hits)]
    return frozenset(forced | frozenset(atoms[i] for i in range(len(atoms)) if h >> i & 1) for h in minimal)


def match_atom(pattern: Atom, ground: Atom, subst: dict) -> dict | None:
    """Extend ``subst`` so that ``pattern`` becomes ``ground``, or return None."""
    if pattern.pred != ground.pred or len(pattern.args) != len(ground.args):
        return None
    out = subst
    copied = False
    for p, g in zip(pattern.args, ground.args):
        if isinstance(p, Var):
            cur = out.get(p, _MISSING)
            if cur is _MISSING:
                if not copied:
                    out = dict(out)
                    copied = True
                out[p] = g
            elif cur != g:
                return None
        elif p != g:
            return None
    return out


_MISSING = object()


def ground_instances(rules: Iterable[Rule], store: FactStore) -> set[Rule]:
    """Ground instances of ``rules`` whose positive body atoms occur in ``store``.

    For disjunctive stores an atom may be matched inside any stored fact.
    """
    by_pred: dict[str, list[Atom]] = {}
    for a in store.atoms():
        by_pred.setdefault(a.pred, []).append(a)
    out: set[Rule] = set()
    for rule in rules:
        for subst in join(rule.positive_body(), by_pred):
            out.add(rule.substitute(subst))
    return out


def join(literals: list[Atom], by_pred: Mapping[str, list[Atom]], subst: dict | None = None) -> Iterator[dict]:
    """Naive nested-loop join of positive atoms against ``by_pred``."""
    subst = {} if subst is None else subst
    if not literals:
        yield subst
        return
    first, rest = literals[0], literals[1:]
    for cand in by_pred.get(first.pred, ()):
        s = match_atom(first, cand, subst)
        if s is not None:
            yield from join(rest, by_pred, s)


@dataclass(frozen=True)
class Database:
    """A deductive database: base facts, rules and integrity constraints."""

    facts: frozenset = frozenset()
    rules: tuple = ()
    constraints: frozenset = frozenset()
    disjunctive_facts: frozenset = frozenset()
    arities: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "facts", frozenset(self.facts))
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "constraints", frozenset(self.constraints))
        object.__setattr__(self, "disjunctive_facts", frozenset(frozenset(f) for f in self.disjunctive_facts))
        object.__setattr__(self, "arities", self._check())

    def _check(self) -> dict:
        arities: dict[str, int] = {}

        def note(a: Atom) -> None:
            known = arities.setdefault(a.pred, a.arity)
            if known != a.arity:
                raise SchemaError(f"arity clash for predicate {a.pred}: {known} vs {a.arity}")

        for a in self.facts:
            if not a.is_ground():
                raise SafetyError(f"base fact {a} is not ground")
            note(a)
        for f in self.disjunctive_facts:
            for a in f:
                if not a.is_ground():
                    raise SafetyError(f"fact {format_fact(f)} is not ground")
                note(a)
        for r in self.rules:
            r.check_safe()
            for a in r.head:
                note(a)
            for l in r.body:
                note(l.atom)
        for a in self.constraints:
            if not a.is_ground():
                raise SafetyError(f"constraint {a} is not ground")
            note(a)
        derived = self.derived_preds()
        clash = self.fact_preds() & derived
        if clash:
            raise SchemaError(f"predicate(s) {', '.join(sorted(clash))} are both base and derived")
        unknown = {a.pred for a in self.constraints} - (self.fact_preds() | derived | self.base_preds())
        if unknown:
            raise SchemaError(f"constraint predicate(s) {', '.join(sorted(unknown))} are not defined")
        return arities

    def fact_preds(self) -> set[str]:
        out = {a.pred for a in self.facts}
        for f in self.disjunctive_facts:
            out |= {a.pred for a in f}
        return out

    def derived_preds(self) -> set[str]:
        out: set[str] = set()
        for r in self.rules:
            out |= r.head_preds
        return out

    def base_preds(self) -> set[str]:
        """Predicates with facts or used in bodies without defining rules."""
        body = {l.atom.pred for r in self.rules for l in r.body}
        return (self.fact_preds() | body) - self.derived_preds()

    def constants(self) -> set:
        out = set()
        for a in self.all_atoms():
            out |= {t for t in a.args if not isinstance(t, Var)}
        return out

    def all_atoms(self) -> Iterator[Atom]:
        yield from self.facts
        for f in self.disjunctive_facts:
            yield from f
        yield from self.constraints
        for r in self.rules:
            yield from r.head
            for l in r.body:
                yield l.atom

    def store(self) -> FactStore:
        return FactStore.of(itertools.chain(self.facts, self.disjunctive_facts))

    def replace(self, **kw) -> Database:
        args = dict(facts=self.facts, rules=self.rules, constraints=self.constraints,
                    disjunctive_facts=self.disjunctive_facts)
        args.update(kw)
        return Database(**args)

    def with_updates(self, insert: Iterable[Atom] = (), delete: Iterable[Atom] = ()) -> Database:
        return self.replace(facts=(self.facts - set(delete)) | set(insert))
