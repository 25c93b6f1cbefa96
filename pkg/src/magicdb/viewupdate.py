"""View update translation by breadth-first search over VU realizations.

Each search node holds a tentative set of base updates.  A node alternates
two phases:

* top-down: the disjunctive VU rules, seeded with the node's open requests,
  are evaluated over the node's current state; every consistent minimal model
  proposes one further set of base updates;
* bottom-up: the proposed updates are propagated, and the VU transition
  rules turn side effects (a violated constraint, a request that is still
  not met) into new requests.

A path whose proposals all contradict earlier requests is marked ``false``.
"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import naming
from .core import Atom, Database, DatalogError, Literal, Rule, Var
from .operators import iterated_fixpoint_model, perfect_models
from .propagate import DeltaSet, propagate_update
from .stratify import stratify

log = logging.getLogger(__name__)

PLUS, MINUS = "+", "-"
FALSE_ATOM = Atom(naming.VU_FALSE, ())
FRESH_PREFIX = "c_new_"
VU_MODEL_CAP = 64
_FRESH = re.compile(rf"^{FRESH_PREFIX}(\d+)$")


class NotTrueViewUpdate(DatalogError):
    """The requested change already holds."""


class ConstraintViolation(DatalogError):
    """The database violates an integrity constraint before any update."""


class NoRealization(DatalogError):
    """Every search path ended in ``false``."""


class SearchExhausted(DatalogError):
    """The depth bound was reached with paths still open and no solution."""


@dataclass(frozen=True)
class VURequest:
    sign: str
    atom: Atom

    def __str__(self) -> str:
        return f"{self.sign}{self.atom}"


@dataclass(frozen=True)
class Realization:
    insertions: frozenset = frozenset()
    deletions: frozenset = frozenset()

    @property
    def size(self) -> int:
        return len(self.insertions) + len(self.deletions)

    def updates(self) -> frozenset:
        return frozenset({(PLUS, a) for a in self.insertions} | {(MINUS, a) for a in self.deletions})

    def __le__(self, other: Realization) -> bool:
        return self.insertions <= other.insertions and self.deletions <= other.deletions

    def __lt__(self, other: Realization) -> bool:
        return self <= other and self != other

    def sort_key(self) -> tuple:
        return (self.size, [("+", a.sort_key()) for a in sorted(self.insertions)],
                [("-", a.sort_key()) for a in sorted(self.deletions)])

    def lines(self) -> list[str]:
        return [f"insert {a}" for a in sorted(self.insertions)] + [f"delete {a}" for a in sorted(self.deletions)]

    def apply(self, db: Database) -> Database:
        return db.with_updates(self.insertions, self.deletions)

    def canonical(self) -> Realization:
        """Rename fresh constants to c_new_1, c_new_2, ... canonically."""
        fresh = sorted({t for a in self.insertions | self.deletions for t in a.args if is_fresh(t)})
        if not fresh:
            return self
        best = None
        for perm in itertools.permutations(range(1, len(fresh) + 1)):
            ren = {f: fresh_constant(i) for f, i in zip(fresh, perm)}
            cand = Realization(frozenset(_rename(a, ren) for a in self.insertions),
                               frozenset(_rename(a, ren) for a in self.deletions))
            if best is None or cand.sort_key() < best.sort_key():
                best = cand
        return best


def _rename(a: Atom, ren: dict) -> Atom:
    return Atom(a.pred, tuple(ren.get(t, t) for t in a.args))


def fresh_constant(i: int) -> str:
    return f"{FRESH_PREFIX}{i}"


def is_fresh(t) -> bool:
    return isinstance(t, str) and _FRESH.match(t) is not None


def _vu_atom(atom: Atom, sign: str) -> Atom:
    return Atom(naming.vu(atom.pred, sign), atom.args)


def _flip(sign: str) -> str:
    return MINUS if sign == PLUS else PLUS


def vu_request_of(atom: Atom) -> VURequest | None:
    """Decode a VU atom; auxiliary alternative atoms give None."""
    tag, rest = naming.split_tag(atom.pred)
    if tag not in (naming.VU_PLUS, naming.VU_MINUS) or naming.SEP in rest:
        return None
    return VURequest(PLUS if tag == naming.VU_PLUS else MINUS, Atom(rest, atom.args))


def _existential(rule: Rule) -> list[Var]:
    head_vars = rule.head[0].vars()
    return sorted({v for l in rule.body for v in l.atom.vars()} - head_vars)


def _eq(a, b) -> Literal:
    return Literal(Atom(naming.EQ, (a, b)))


def derive_vu_rules(rules: Iterable[Rule], domain: Iterable = ()) -> list[Rule]:
    """Top-down VU rules for every derived predicate.

    A ∇+ request picks one defining rule (and one binding of its existential
    variables from ``domain``) and requests each of its body literals that is
    currently false.  A ∇− request falsifies one body literal of every
    currently true instance of every defining rule.  Alternatives of a ∇+
    request are named by auxiliary atoms so their choices stay together.
    """
    rules = list(rules)
    domain = sorted(set(domain), key=lambda c: (isinstance(c, str), c))
    by_pred: dict[str, list[Rule]] = {}
    for r in rules:
        if not r.definite:
            raise DatalogError(f"view updating needs definite rules, got '{r}'")
        by_pred.setdefault(r.head[0].pred, []).append(r)
    out: list[Rule] = []
    for pred in sorted(by_pred):
        defs = by_pred[pred]
        if len(defs) == 1 and not _existential(defs[0]):
            r = defs[0]
            trigger = Literal(_vu_atom(r.head[0], PLUS))
            out.extend(_request_body(r.body, [trigger], {}))
        else:
            out.extend(_alternatives(pred, defs, domain))
        for r in defs:
            heads = []
            for l in r.body:
                h = _vu_atom(l.atom, MINUS if l.positive else PLUS)
                if h not in heads:
                    heads.append(h)
            out.append(Rule(tuple(heads), (Literal(_vu_atom(r.head[0], MINUS)),) + r.body))
    return out


def _request_body(body: Sequence[Literal], context: list[Literal], subst: dict) -> list[Rule]:
    out = []
    for l in body:
        a = l.atom.substitute(subst)
        if l.positive:
            out.append(Rule((_vu_atom(a, PLUS),), (*context, Literal(a, False))))
        else:
            out.append(Rule((_vu_atom(a, MINUS),), (*context, Literal(a))))
    return out


def _alternatives(pred: str, defs: list[Rule], domain: list) -> list[Rule]:
    arity = defs[0].head[0].arity
    zs = tuple(Var(f"Z{j}") for j in range(1, arity + 1))
    heads: list[Atom] = []
    out: list[Rule] = []
    for i, r in enumerate(defs, 1):
        ren = {v: Var(v.name + "_") for v in r.vars()}
        subst: dict = {}
        eqs: list[Literal] = []
        for z, t in zip(zs, r.head[0].args):
            t = ren.get(t, t)
            if isinstance(t, Var) and t not in subst:
                subst[t] = z
            else:
                eqs.append(_eq(z, subst.get(t, t)))
        ev = [ren[v] for v in _existential(r)]
        for v in ev:
            subst[v] = v
        alt_pred = naming.vu_alternative(pred, i)
        alt = Atom(alt_pred, zs + tuple(ev))
        for choice in itertools.product(domain, repeat=len(ev)):
            heads.append(Atom(alt_pred, zs + choice))
        body = [Literal(l.atom.substitute(ren), l.positive) for l in r.body]
        out.extend(_request_body(body, [Literal(alt), *eqs], subst))
        for e in eqs:
            out.append(Rule((FALSE_ATOM,), (Literal(alt), Literal(e.atom, False))))
    trigger = Literal(Atom(naming.vu(pred, PLUS), zs))
    out.insert(0, Rule(tuple(heads), (trigger,)) if heads else Rule((FALSE_ATOM,), (trigger,)))
    return out


def derive_vu_transition_rules(constraints: Iterable[Atom], arities: dict[str, int]) -> list[Rule]:
    """Bottom-up rules that turn side effects into new VU requests.

    ``arities`` lists the predicates whose required truth value is tracked
    by ``needplus``/``needminus`` facts.
    """
    out: list[Rule] = []
    for ic in sorted(set(constraints)):
        out.append(Rule((_vu_atom(ic, PLUS),), (Literal(Atom(naming.delta(ic.pred, MINUS), ic.args)),)))
    for pred in sorted(arities):
        xs = tuple(Var(f"X{i}") for i in range(1, arities[pred] + 1))
        a = Atom(pred, xs)
        for sign in (PLUS, MINUS):
            need = Literal(Atom(naming.need(pred, sign), xs))
            undone = Literal(Atom(naming.delta(pred, _flip(sign)), xs))
            done = Atom(naming.delta(pred, sign), xs)
            out.append(Rule((_vu_atom(a, sign),), (undone, need)))
            out.append(Rule((_vu_atom(a, sign),), (need, Literal(a, sign == MINUS), Literal(done, False))))
    return out


# --- search -------------------------------------------------------------------


@dataclass
class Proposal:
    """One consistent minimal model of a top-down phase."""

    insertions: frozenset
    deletions: frozenset
    plus: frozenset   # atoms requested true (derived and base)
    minus: frozenset


@dataclass
class SearchNode:
    id: int
    depth: int
    db: Database
    insertions: frozenset = frozenset()
    deletions: frozenset = frozenset()
    plus: frozenset = frozenset()
    minus: frozenset = frozenset()
    parent: int | None = None
    requests: tuple = ()
    proposals: list = field(default_factory=list)
    status: str = "open"
    note: str = ""

    def realization(self) -> Realization:
        return Realization(self.insertions, self.deletions)

    def describe(self) -> str:
        ups = ", ".join(Realization(self.insertions, self.deletions).lines()) or "no updates"
        reqs = ", ".join(_show(r) for r in self.requests)
        text = f"[depth {self.depth}] node {self.id}"
        if self.parent is not None:
            text += f" (from {self.parent})"
        text += f": {ups}"
        if reqs:
            text += f"; requests {reqs}"
        text += f" -> {self.status}"
        return text + (f" ({self.note})" if self.note else "")


def _show(r: VURequest) -> str:
    sym = "∇+" if r.sign == PLUS else "∇−"
    return f"{sym}{r.atom}"


@dataclass
class SolveResult:
    realizations: list
    nodes: list
    depth: int

    def log_lines(self) -> list[str]:
        return [n.describe() for n in self.nodes]


class _Solver:
    def __init__(self, db: Database, request: VURequest, max_depth: int, cap: int):
        self.root_db = db
        self.request = request
        self.max_depth = max_depth
        self.cap = cap
        self.derived = db.derived_preds()
        self.nodes: list[SearchNode] = []
        self.definite_rules = list(db.rules)
        self.max_existential = max((len(_existential(r)) for r in db.rules), default=0)
        need_preds = {request.atom.pred} | {c.pred for c in db.constraints}
        self.transition_rules = derive_vu_transition_rules(
            db.constraints, {p: db.arities.get(p, 0) for p in need_preds})
        self.needs = [Atom(naming.need(request.atom.pred, request.sign), request.atom.args)]
        self.needs += [Atom(naming.need(c.pred, PLUS), c.args) for c in db.constraints]

    def node(self, **kw) -> SearchNode:
        n = SearchNode(id=len(self.nodes), **kw)
        self.nodes.append(n)
        return n

    def state(self, db: Database) -> frozenset:
        return iterated_fixpoint_model(Database(db.facts, db.rules)).atoms()

    # top-down phase
    def top_down(self, node: SearchNode) -> None:
        model = self.state(node.db)
        domain = self._domain(node.db)
        vu_rules = derive_vu_rules(self.definite_rules, domain)
        eq = {Atom(naming.EQ, (c, c)) for c in domain | {t for r in node.requests for t in r.atom.args}}
        # seeds enter as bodiless rules: a request on a base relation names a
        # predicate that the VU rules also derive
        vu_rules += [Rule((_vu_atom(r.atom, r.sign),), ()) for r in node.requests]
        vdb = Database(model | eq, vu_rules)
        seen = set()
        reasons = []
        for m in sorted(perfect_models(vdb, stratify(vu_rules), self.cap), key=lambda m: sorted(m)):
            prop = self._proposal(node, m, model)
            if isinstance(prop, str):
                reasons.append(prop)
                continue
            key = (prop.insertions, prop.deletions)
            if key not in seen:
                seen.add(key)
                node.proposals.append(prop)
        if not node.proposals:
            node.status = "false"
            node.note = "; ".join(sorted(set(reasons))) or "no proposal"

    def _domain(self, db: Database) -> set:
        consts = db.constants() | self.root_db.constants() | set(self.request.atom.args)
        used = [int(_FRESH.match(c).group(1)) for c in consts if is_fresh(c)]
        nxt = max(used, default=0)
        fresh = {fresh_constant(nxt + i) for i in range(1, self.max_existential + 1)}
        return consts | fresh

    def _proposal(self, node: SearchNode, m: frozenset, model: frozenset) -> Proposal | str:
        if FALSE_ATOM in m:
            return "inapplicable rule alternative"
        plus, minus = set(), set()
        for a in m:
            r = vu_request_of(a)
            if r is not None:
                (plus if r.sign == PLUS else minus).add(r.atom)
        clash = plus & minus
        if clash:
            return f"conflicting requests on {min(clash)}"
        clash = (plus & node.minus) | (minus & node.plus)
        if clash:
            return f"contradicts earlier request on {min(clash)}"
        ins = frozenset(a for a in plus if a.pred not in self.derived and a not in node.db.facts)
        dels = frozenset(a for a in minus if a.pred not in self.derived and a in node.db.facts)
        if not ins and not dels:
            return "no base update"
        return Proposal(ins, dels, frozenset(plus), frozenset(minus))

    # bottom-up phase
    def bottom_up(self, parent: SearchNode, prop: Proposal, depth: int) -> SearchNode:
        db = parent.db.with_updates(prop.insertions, prop.deletions)
        child = self.node(depth=depth, db=db, parent=parent.id,
                          insertions=(parent.insertions - prop.deletions) | prop.insertions,
                          deletions=(parent.deletions - prop.insertions) | prop.deletions,
                          plus=parent.plus | prop.plus, minus=parent.minus | prop.minus)
        delta = propagate_update(parent.db, DeltaSet(prop.insertions, prop.deletions), mode="magic").delta
        repairs = self._repairs(parent.db, delta)
        if not repairs:
            child.status = "solution"
            return child
        child.requests = tuple(repairs)
        self.top_down(child)
        return child

    def _repairs(self, old: Database, delta: DeltaSet) -> list[VURequest]:
        facts = {Atom(naming.delta(a.pred, PLUS), a.args) for a in delta.insertions}
        facts |= {Atom(naming.delta(a.pred, MINUS), a.args) for a in delta.deletions}
        tracked = {n.pred.split(naming.SEP, 1)[1] for n in self.needs}
        facts |= {a for a in self.state(old) if a.pred in tracked}
        facts |= set(self.needs)
        out = iterated_fixpoint_model(Database(facts, self.transition_rules)).atoms()
        reqs = {vu_request_of(a) for a in out}
        return sorted((r for r in reqs if r is not None), key=lambda r: (r.sign, r.atom.sort_key()))

    def run(self, exhaustive: bool) -> SolveResult:
        root = self.node(depth=0, db=self.root_db, requests=(self.request,))
        self.top_down(root)
        frontier = [root] if root.status == "open" else []
        solutions: list[SearchNode] = []
        depth = 0
        while frontier and depth < self.max_depth:
            depth += 1
            nxt: list[SearchNode] = []
            seen: set = set()
            for node in frontier:
                for prop in node.proposals:
                    ins = (node.insertions - prop.deletions) | prop.insertions
                    dels = (node.deletions - prop.insertions) | prop.deletions
                    key = (ins, dels, node.plus | prop.plus, node.minus | prop.minus)
                    if key in seen:
                        continue
                    seen.add(key)
                    child = self.bottom_up(node, prop, depth)
                    if child.status == "solution":
                        solutions.append(child)
                    elif child.status == "open":
                        nxt.append(child)
            frontier = nxt
            if solutions and not exhaustive:
                break
        if not solutions:
            if frontier:
                raise SearchExhausted(f"no realization found within depth {self.max_depth}")
            raise NoRealization(f"request {self.request} has no realization")
        found = {n.realization().canonical() for n in solutions}
        minimal = [r for r in found if not any(o < r for o in found)]
        return SolveResult(sorted(minimal, key=Realization.sort_key), self.nodes, depth)


def check_request(db: Database, request: VURequest) -> None:
    a = request.atom
    if request.sign not in (PLUS, MINUS):
        raise DatalogError(f"unknown request sign {request.sign!r}")
    if not a.is_ground():
        raise DatalogError(f"view update request {a} is not ground")
    known = db.arities.get(a.pred)
    if known is None:
        raise DatalogError(f"unknown predicate {a.pred}")
    if known != a.arity:
        raise DatalogError(f"{a} has the wrong arity for {a.pred}")
    model = iterated_fixpoint_model(Database(db.facts, db.rules)).atoms()
    if request.sign == PLUS and a in model:
        raise NotTrueViewUpdate(f"{a} is already derivable")
    if request.sign == MINUS and a not in model:
        raise NotTrueViewUpdate(f"{a} is not derivable")
    broken = sorted(db.constraints - model)
    if broken:
        raise ConstraintViolation(f"constraint {broken[0]} does not hold before the update")


def solve_view_update(db: Database, request: VURequest, max_depth: int = 10, exhaustive: bool = False,
                      cap: int = VU_MODEL_CAP) -> SolveResult:
    """Minimal base updates that make ``request`` true and keep all constraints.

    The search stops at the first depth that yields a solution unless
    ``exhaustive`` is set, in which case every depth up to ``max_depth`` is
    explored and the union of solutions is reduced to its minimal elements.
    """
    check_request(db, request)
    return _Solver(db, request, max_depth, cap).run(exhaustive)
